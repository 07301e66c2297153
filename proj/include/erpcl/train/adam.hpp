#pragma once

#include <cstdint>
#include <vector>

#include "erpcl/model/params.hpp"

namespace erpcl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.015;  // L2 term added to the gradient before the moment updates
};

template <class T>
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::uint64_t t = 0;

  static AdamState init(const std::vector<NamedTensor<T>>& params, const AdamConfig& config);
};

/// One bias-corrected Adam update of every tensor in `params` from its gradient.
/// If any gradient is non-finite, nothing changes and NumericError names the parameter.
template <class T>
void adam_step(const std::vector<NamedTensor<T>>& params, AdamState<T>& state);

}  // namespace erpcl
