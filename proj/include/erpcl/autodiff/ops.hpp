#pragma once

// Differentiable operations over Tensor. Each op computes its value eagerly and,
// when any input requires a gradient, records a backward rule on the tape.
//
// Layout conventions: 2-D tensors are [rows x time] with time contiguous.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "erpcl/autodiff/tape.hpp"
#include "erpcl/autodiff/tensor.hpp"

namespace erpcl::ops {

/// Depthwise "same" cross-correlation along time.
///
/// x is [C x N], kernels is [K x P]. Output row k*C + c is row c of x correlated
/// with kernel k, plus bias[k] when given, and has exactly N samples. Padding is
/// (P-1)/2 zeros on the left and the rest on the right, so even-length kernels
/// put the extra zero on the right. P > N is allowed and logs a warning.
template <class T>
Tensor<T> conv1d_same(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& kernels,
                      const std::optional<Tensor<T>>& bias = std::nullopt);

/// Full-channel "same" convolution: out[f] = sum_c corr(x[c], w[f][c]) + bias[f].
/// x is [C x N], w is [F x C x P], bias is [F]. Padding as in conv1d_same.
template <class T>
Tensor<T> conv1d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias);

/// Weighted sum over rows: [C x N] with weights [C] -> [1 x N].
template <class T>
Tensor<T> channel_collapse(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& weights);

/// Group-wise channel_collapse: x is [(G*C) x N], weights [G x C] -> [G x N].
/// Group g reduces rows g*C .. g*C+C-1 with weights row g.
template <class T>
Tensor<T> grouped_collapse(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& weights);

/// Non-overlapping mean over windows of `window` samples; the N mod window tail is dropped.
template <class T>
Tensor<T> avg_pool_time(Tape<T>& tape, const Tensor<T>& x, std::size_t window);

/// ELU with alpha = 1.
template <class T>
Tensor<T> elu(Tape<T>& tape, const Tensor<T>& x);

/// Inverted dropout. rate in [0, 1); rate 0 returns x unchanged.
template <class T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& x, double rate, std::mt19937_64& rng);

template <class T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  double momentum = 0.9;  // fraction of the old running value kept per update
  double eps = 1e-5;

  static BatchNormState init(std::size_t features);
};

enum class NormMode {
  batch,    // normalize by batch moments and update running moments
  running,  // normalize by running moments, no update
};

/// Per-feature batch normalization of x [B x F]. Batch mode needs B >= 2.
template <class T>
Tensor<T> batch_norm(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, BatchNormState<T>& state, NormMode mode);

/// Affine map of the flattened input: x (F values), w [F x O], b [O] -> [O].
template <class T>
Tensor<T> dense(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

/// Stacks equally shaped tensors along a new leading axis.
template <class T>
Tensor<T> stack(Tape<T>& tape, const std::vector<Tensor<T>>& xs);

/// Concatenates along axis 0; trailing dimensions must agree.
template <class T>
Tensor<T> concat_rows(Tape<T>& tape, const std::vector<Tensor<T>>& xs);

/// x[i] along axis 0.
template <class T>
Tensor<T> select(Tape<T>& tape, const Tensor<T>& x, std::size_t i);

template <class T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape shape);

template <class T>
Tensor<T> flatten(Tape<T>& tape, const Tensor<T>& x) {
  return reshape(tape, x, Shape{x.numel()});
}

template <class T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);

template <class T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// Element-wise product.
template <class T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor);

/// <a, b> / (|a| |b|). Throws DegenerateError if either norm is zero.
template <class T>
Tensor<T> cosine_sim(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// -log softmax(sims / tau)[positive], evaluated in double with a max shift.
template <class T>
Tensor<T> softmax_xent(Tape<T>& tape, const Tensor<T>& sims, std::size_t positive, double tau);

/// Numerically stable binary cross-entropy on a logit; label in {0, 1}.
template <class T>
Tensor<T> bce_with_logits(Tape<T>& tape, const Tensor<T>& logit, T label);

}  // namespace erpcl::ops
