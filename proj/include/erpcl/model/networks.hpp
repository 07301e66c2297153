#pragma once

#include <random>
#include <vector>

#include "erpcl/autodiff/tape.hpp"
#include "erpcl/model/params.hpp"

namespace erpcl {

enum class Phase {
  train,              // dropout on, batch statistics (updates running moments)
  eval,               // dropout off, running moments
  train_frozen_norm,  // dropout on, running moments frozen
};

struct ForwardMode {
  Phase phase = Phase::eval;
  std::mt19937_64* rng = nullptr;  // required when dropout is active

  static ForwardMode eval() { return {}; }
  static ForwardMode train(std::mt19937_64& r) { return {Phase::train, &r}; }
};

/// Linear Inception encoder: x [M x N] -> [(B*K) x N]. Branch b applies K depthwise
/// temporal kernels, collapses each kernel's M channels with its spatial weights,
/// and the branch outputs are stacked in branch order.
template <class T>
Tensor<T> encoder_forward(Tape<T>& tape, const ModelParams<T>& params, const Tensor<T>& x);

/// Projector over a mini-batch of encoder outputs; returns one flattened embedding
/// of length config.embedding_dim() per input. Batch normalization couples the
/// samples, so in Phase::train the batch must hold at least two entries.
template <class T>
std::vector<Tensor<T>> projector_forward(Tape<T>& tape, ModelParams<T>& params, const std::vector<Tensor<T>>& h,
                                         ForwardMode mode);

/// Classifier head on one encoder output h [(B*K) x N]; returns a scalar logit.
template <class T>
Tensor<T> classifier_forward(Tape<T>& tape, const ModelParams<T>& params, const Tensor<T>& h);

}  // namespace erpcl
