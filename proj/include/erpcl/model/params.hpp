#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erpcl/autodiff/ops.hpp"
#include "erpcl/autodiff/tensor.hpp"
#include "erpcl/model/config.hpp"

namespace erpcl {

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

// Encoder branch: K temporal kernels of length P_b and one spatial weight row per kernel.
// No bias, no normalization: the encoder is a linear map.
template <class T>
struct EncoderBranch {
  Tensor<T> temporal;  // [K x P_b]
  Tensor<T> spatial;   // [K x M]
};

template <class T>
struct ProjectorBranch {
  Tensor<T> temporal;  // [K x P_b / S]
  Tensor<T> spatial;   // [K x maps]
  Tensor<T> bn_gamma;  // [K * T/S]
  Tensor<T> bn_beta;   // [K * T/S]
  ops::BatchNormState<T> bn;
};

template <class T>
struct ClassifierParams {
  Tensor<T> conv1_w;  // [F1 x maps x L1]
  Tensor<T> conv1_b;  // [F1]
  Tensor<T> conv2_w;  // [F2 x F1 x L2]
  Tensor<T> conv2_b;  // [F2]
  Tensor<T> dense_w;  // [F2 * T/S^2 x 1]
  Tensor<T> dense_b;  // [1]
};

template <class T>
struct ModelParams {
  ModelConfig config;
  std::vector<EncoderBranch<T>> encoder;
  std::vector<ProjectorBranch<T>> projector;
  ClassifierParams<T> classifier;

  std::vector<NamedTensor<T>> encoder_params() const;
  std::vector<NamedTensor<T>> projector_params() const;
  std::vector<NamedTensor<T>> classifier_params() const;
  std::vector<NamedTensor<T>> all_params() const;

  /// Learnable parameters plus batch-norm running moments, in checkpoint order.
  /// Running moments are returned as fresh tensors (copies).
  std::vector<NamedTensor<T>> state_entries() const;

  std::size_t parameter_count() const;
  void set_trainable(const std::vector<NamedTensor<T>>& group, bool on) const;
  void zero_grad() const;

  /// Deep copy; the copy keeps requires_grad flags but no gradients.
  ModelParams clone() const;
  /// Copies values (and running moments) from `other`, which must have the same config.
  void assign_from(const ModelParams& other);
};

/// Deterministic initialization: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// batch-norm gamma = 1, beta = 0. All learnable tensors require gradients.
template <class T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

}  // namespace erpcl
