#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "erpcl/data/dataset.hpp"

namespace erpcl {

struct LdaOptions {
  double shrinkage = 0.1;     // gamma in [0, 1]
  std::uint32_t decimate = 4;  // time-average window; 1 keeps every sample
};

/// Two-class linear discriminant: score = w·x + b, positive towards class 1.
struct LdaModel {
  std::vector<double> w;
  double b = 0.0;

  double score(std::span<const double> x) const;
};

/// Fits on row-major `features` [n x dim]. The pooled within-class covariance is
/// shrunk towards nu*I, nu = trace/dim: S = (1-gamma)*Sigma + gamma*nu*I.
/// Throws ConfigError for gamma outside [0,1] and DegenerateError for a missing
/// class or a singular S.
LdaModel lda_fit(std::span<const double> features, std::size_t dim, std::span<const std::uint8_t> labels,
                 double shrinkage);

/// Flattened channel-major trial, time-averaged over non-overlapping windows.
std::vector<double> lda_features(const Trial& trial, std::uint32_t n_channels, std::uint32_t n_samples,
                                 std::uint32_t decimate);

/// Fits on `train`, returns one score per trial of `test`.
std::vector<double> lda_baseline(const Dataset& train, const Dataset& test, const LdaOptions& options = {});

}  // namespace erpcl
