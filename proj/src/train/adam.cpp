#include "erpcl/train/adam.hpp"

#include <cmath>

#include "erpcl/error.hpp"
#include "erpcl/simd/kernels.hpp"

namespace erpcl {

template <class T>
AdamState<T> AdamState<T>::init(const std::vector<NamedTensor<T>>& params, const AdamConfig& config) {
  if (!(config.lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw ConfigError("adam: betas must be in [0, 1)");
  }
  if (config.weight_decay < 0.0) throw ConfigError("adam: weight decay must be >= 0");
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.numel(), T(0));
    s.v.emplace_back(p.tensor.numel(), T(0));
  }
  return s;
}

template <class T>
void adam_step(const std::vector<NamedTensor<T>>& params, AdamState<T>& state) {
  if (params.size() != state.m.size()) throw ShapeError("adam_step: state tracks a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].tensor.numel() != state.m[i].size()) {
      throw ShapeError("adam_step: moment shape mismatch for " + params[i].name);
    }
    for (T g : params[i].tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in " + params[i].name);
    }
  }
  state.t += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.t);
  const simd::AdamCoeffs<T> coeffs{static_cast<T>(c.lr),
                                   static_cast<T>(c.beta1),
                                   static_cast<T>(c.beta2),
                                   static_cast<T>(c.eps),
                                   static_cast<T>(c.weight_decay),
                                   static_cast<T>(1.0 - std::pow(c.beta1, t)),
                                   static_cast<T>(1.0 - std::pow(c.beta2, t))};
  const auto& kt = simd::active<T>();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T> w = params[i].tensor;
    const auto g = w.grad();
    kt.adam(w.mutable_data().data(), state.m[i].data(), state.v[i].data(), g.data(), g.size(), coeffs);
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(const std::vector<NamedTensor<float>>&, AdamState<float>&);
template void adam_step(const std::vector<NamedTensor<double>>&, AdamState<double>&);

}  // namespace erpcl
