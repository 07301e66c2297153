#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace erpcl {

/// Shape of the linear Inception base encoder.
struct EncoderConfig {
  std::size_t n_channels = 8;
  std::size_t n_samples = 128;
  double sample_rate = 128.0;
  std::vector<std::size_t> kernel_lengths{64, 32, 16};  // one per branch: fs/2, fs/4, fs/8
  std::size_t kernels_per_branch = 8;

  std::size_t n_branches() const { return kernel_lengths.size(); }
  std::size_t n_maps() const { return n_branches() * kernels_per_branch; }
};

struct ProjectorConfig {
  std::size_t pool = 4;
  std::size_t kernels_per_branch = 8;
  double dropout = 0.25;
};

struct ClassifierConfig {
  std::vector<std::size_t> filters{16, 8};
  std::vector<std::size_t> kernel_lengths{16, 8};
  std::size_t pool = 2;
};

struct ModelConfig {
  EncoderConfig encoder;
  ProjectorConfig projector;
  ClassifierConfig classifier;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  /// Projector temporal kernel lengths: encoder lengths divided by the pooling stride (at least 1).
  std::vector<std::size_t> projector_kernel_lengths() const;
  std::size_t projector_time() const { return encoder.n_samples / projector.pool; }
  /// Flattened projector output length.
  std::size_t embedding_dim() const;
  /// Time samples left after both classifier pooling stages.
  std::size_t classifier_time() const;

  /// Kernel lengths fs/2^b for b = 1..branches (rounded down, at least 1).
  static std::vector<std::size_t> octave_kernel_lengths(double sample_rate, std::size_t branches);

  /// Small configuration used by gradient checks: 2 channels, 16 samples, 2 kernels per branch.
  static ModelConfig reduced();
};

}  // namespace erpcl
