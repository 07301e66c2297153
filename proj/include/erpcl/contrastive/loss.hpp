#pragma once

#include <span>
#include <vector>

#include "erpcl/autodiff/ops.hpp"

namespace erpcl::contrastive {

struct LossConfig {
  double temperature = 0.5;
  // Positives are ERP<->ERP pairs across the two subjects; everything else across
  // subjects is a negative. Within-subject pairs never enter the loss.

  void validate() const;
};

template <class T>
struct Candidate {
  Tensor<T> embedding;
  bool positive = false;
};

template <class T>
struct LabeledEmbedding {
  Tensor<T> embedding;
  bool erp = false;
};

/// Embeddings of one subject pair {A, B}.
template <class T>
struct PairEmbeddings {
  std::vector<LabeledEmbedding<T>> a;
  std::vector<LabeledEmbedding<T>> b;
};

template <class T>
Tensor<T> cosine_sim(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  return ops::cosine_sim(tape, a, b);
}

/// -log( exp(sim(anchor, pos)/tau) / sum_c exp(sim(anchor, c)/tau) ), where the sum runs
/// over every candidate including the positive. Exactly one candidate must be positive.
template <class T>
Tensor<T> ntxent_per_anchor(Tape<T>& tape, const Tensor<T>& anchor, std::span<const Candidate<T>> candidates,
                            double temperature);

/// L = sum of l^A + sum of l^B.
///
/// l^A takes an ERP embedding of A as anchor; its candidates are one ERP of B (the
/// positive) plus every non-ERP of B. With several ERPs per subject every
/// (anchor, positive) combination contributes one term. l^B is symmetric.
template <class T>
Tensor<T> batch_loss(Tape<T>& tape, const PairEmbeddings<T>& batch, const LossConfig& config);

}  // namespace erpcl::contrastive
