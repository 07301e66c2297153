#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "erpcl/autodiff/tape.hpp"

namespace erpcl {

struct GradcheckOptions {
  double step = 1e-3;        // central-difference step h
  double tolerance = 1e-4;   // on |analytic - numeric| / max(1, |numeric|)
};

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t n_checked = 0;  // scalar derivatives compared
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  bool passed = false;
};

/// Scalar function of `inputs`, rebuilt on a fresh tape for every evaluation.
using ScalarFn = std::function<Tensor<double>(Tape<double>&)>;

/// Compares reverse-mode gradients of `fn` with respect to every element of
/// `inputs` against central differences.
GradcheckResult gradcheck(const std::string& name, const ScalarFn& fn, std::vector<Tensor<double>> inputs,
                          const GradcheckOptions& options = {});

/// Every differentiable op plus the contrastive and BCE end-to-end losses on the
/// reduced model configuration.
std::vector<GradcheckResult> gradcheck_suite(std::uint64_t seed = 0, const GradcheckOptions& options = {});

/// Fixed-width table: name, checked, max relative error, status.
std::string format_gradcheck_table(const std::vector<GradcheckResult>& results);

}  // namespace erpcl
