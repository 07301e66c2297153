#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "erpcl/contrastive/loss.hpp"
#include "erpcl/data/dataset.hpp"
#include "erpcl/data/sampler.hpp"
#include "erpcl/model/params.hpp"
#include "erpcl/train/adam.hpp"

namespace erpcl {

struct TrainPlan {
  std::uint32_t max_epochs = 100;
  std::uint32_t patience = 30;  // epochs without improvement tolerated before stopping
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

struct EpochRecord {
  std::uint32_t epoch = 0;  // 0 = before the first update, reported but never selected as best
  double train_loss = 0.0;
  double val_metric = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::uint32_t best_epoch = 0;
  double best_metric = 0.0;
  bool early_stopped = false;
  bool diverged = false;
  std::string stop_reason;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct PretrainOptions {
  SamplerConfig sampler;
  contrastive::LossConfig loss;
  TrainPlan plan;
  std::uint32_t val_rounds = 30;  // sampler passes per validation evaluation
  EpochCallback on_epoch;
};

struct PretrainResult {
  ModelParams<float> params;  // best-validation encoder + projector
  TrainHistory history;
};

/// Mean contrastive loss over `rounds` passes through every subject pair of
/// `dataset`, with the projector in eval mode and pair samples drawn from a
/// sampler seeded with `seed`.
double contrastive_eval_loss(ModelParams<float>& params, const Dataset& dataset, const SamplerConfig& sampler,
                             const contrastive::LossConfig& loss, std::uint64_t seed, std::uint32_t rounds = 1);

/// Contrastive phase: encoder -> projector -> pair loss -> Adam, one subject pair per
/// step. Validation metric is contrastive_eval_loss on `val` (lower is better);
/// best weights are restored when training stops.
PretrainResult pretrain_contrastive(const Dataset& train, const Dataset& val, ModelParams<float> init,
                                    const PretrainOptions& options);

struct ClassifierOptions {
  TrainPlan plan = default_plan();
  std::size_t batch_size = 64;
  bool reinit_classifier = true;  // fresh classifier weights derived from plan.seed
  EpochCallback on_epoch;

  static TrainPlan default_plan() {
    TrainPlan p;
    p.adam.lr = 5e-4;
    return p;
  }
};

struct ClassifierResult {
  ModelParams<float> params;  // frozen encoder + best-validation classifier
  TrainHistory history;
};

/// Encoder outputs for every trial of `dataset` (single trials, no averaging).
std::vector<Tensor<float>> encode_trials(const ModelParams<float>& params, const Dataset& dataset);

/// Classifier phase on a frozen encoder with binary cross-entropy; validation metric
/// is single-trial AUC on `val` (higher is better).
ClassifierResult train_classifier(const ModelParams<float>& model, const Dataset& train, const Dataset& val,
                                  const ClassifierOptions& options);

/// Logits of the encoder + classifier for every trial.
std::vector<double> predict_logits(const ModelParams<float>& model, const Dataset& dataset);

}  // namespace erpcl
