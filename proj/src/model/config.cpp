#include "erpcl/model/config.hpp"

#include <algorithm>
#include <cmath>

#include "erpcl/error.hpp"

namespace erpcl {

void ModelConfig::validate() const {
  const auto& e = encoder;
  if (e.n_channels == 0) throw ConfigError("encoder needs at least one channel");
  if (e.n_samples == 0) throw ConfigError("encoder needs at least one time sample");
  if (e.kernel_lengths.empty()) throw ConfigError("encoder needs at least one branch");
  if (e.kernels_per_branch == 0) throw ConfigError("encoder needs at least one kernel per branch");
  if (std::any_of(e.kernel_lengths.begin(), e.kernel_lengths.end(), [](std::size_t p) { return p == 0; })) {
    throw ConfigError("encoder kernel lengths must be >= 1");
  }
  if (!(e.sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  if (projector.pool == 0 || projector.pool > e.n_samples) {
    throw ConfigError("projector pool must be in [1, n_samples]");
  }
  if (projector.kernels_per_branch == 0) throw ConfigError("projector needs at least one kernel per branch");
  if (!(projector.dropout >= 0.0 && projector.dropout < 1.0)) throw ConfigError("projector dropout must be in [0, 1)");
  const auto& c = classifier;
  if (c.filters.size() != 2 || c.kernel_lengths.size() != 2) {
    throw ConfigError("classifier has exactly two convolution layers");
  }
  if (c.filters[0] <= c.filters[1] || c.filters[1] == 0) {
    throw ConfigError("classifier filter counts must strictly decrease (F1 > F2 >= 1)");
  }
  if (c.kernel_lengths[0] == 0 || c.kernel_lengths[1] == 0) throw ConfigError("classifier kernel lengths must be >= 1");
  if (c.pool == 0) throw ConfigError("classifier pool must be >= 1");
  if (classifier_time() == 0) throw ConfigError("classifier pooling leaves no time samples");
}

std::vector<std::size_t> ModelConfig::projector_kernel_lengths() const {
  std::vector<std::size_t> out;
  out.reserve(encoder.kernel_lengths.size());
  for (std::size_t p : encoder.kernel_lengths) out.push_back(std::max<std::size_t>(1, p / projector.pool));
  return out;
}

std::size_t ModelConfig::embedding_dim() const {
  return encoder.n_branches() * projector.kernels_per_branch * projector_time();
}

std::size_t ModelConfig::classifier_time() const {
  return encoder.n_samples / classifier.pool / classifier.pool;
}

std::vector<std::size_t> ModelConfig::octave_kernel_lengths(double sample_rate, std::size_t branches) {
  std::vector<std::size_t> out;
  for (std::size_t b = 1; b <= branches; ++b) {
    const double len = std::floor(sample_rate / std::ldexp(1.0, static_cast<int>(b)));
    out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(len)));
  }
  return out;
}

ModelConfig ModelConfig::reduced() {
  ModelConfig cfg;
  cfg.encoder.n_channels = 2;
  cfg.encoder.n_samples = 16;
  cfg.encoder.sample_rate = 16.0;
  cfg.encoder.kernel_lengths = {8, 4, 2};
  cfg.encoder.kernels_per_branch = 2;
  cfg.projector.pool = 4;
  cfg.projector.kernels_per_branch = 2;
  cfg.classifier.filters = {4, 2};
  cfg.classifier.kernel_lengths = {4, 2};
  cfg.classifier.pool = 2;
  return cfg;
}

}  // namespace erpcl
