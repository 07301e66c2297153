#include <chrono>
#include <cmath>
#include <numeric>

#include "erpcl/error.hpp"
#include "erpcl/eval/auc.hpp"
#include "erpcl/log.hpp"
#include "erpcl/model/networks.hpp"
#include "erpcl/rng.hpp"
#include "erpcl/train/trainer.hpp"

namespace erpcl {
namespace {

constexpr std::uint64_t kInitStream = 21;
constexpr std::uint64_t kShuffleStream = 22;

std::vector<double> logits_from_features(const ModelParams<float>& params, const std::vector<Tensor<float>>& feats) {
  std::vector<double> out;
  out.reserve(feats.size());
  Tape<float> tape;
  for (const auto& h : feats) out.push_back(classifier_forward(tape, params, h).item());
  return out;
}

std::vector<std::uint8_t> labels_of(const Dataset& ds) {
  std::vector<std::uint8_t> out;
  out.reserve(ds.trials.size());
  for (const auto& t : ds.trials) out.push_back(t.label);
  return out;
}

}  // namespace

std::vector<Tensor<float>> encode_trials(const ModelParams<float>& params, const Dataset& dataset) {
  std::vector<Tensor<float>> out;
  out.reserve(dataset.trials.size());
  Tape<float> tape;
  for (const auto& t : dataset.trials) {
    auto x = Tensor<float>::from({dataset.n_channels, dataset.n_samples}, t.data);
    auto h = encoder_forward(tape, params, x);
    tape.clear();
    // Detached copy: downstream tapes must not reach into the encoder.
    out.push_back(h.clone());
  }
  return out;
}

std::vector<double> predict_logits(const ModelParams<float>& model, const Dataset& dataset) {
  return logits_from_features(model, encode_trials(model, dataset));
}

ClassifierResult train_classifier(const ModelParams<float>& model, const Dataset& train, const Dataset& val,
                                  const ClassifierOptions& options) {
  options.plan.validate();
  const auto& plan = options.plan;
  if (options.batch_size == 0) throw ConfigError("classifier batch size must be >= 1");
  const std::size_t n_pos = train.count_label(1);
  if (n_pos == 0 || n_pos == train.trials.size()) {
    throw ConfigError("classifier training split holds a single class");
  }
  const auto val_labels = labels_of(val);

  ModelParams<float> params = model.clone();
  if (options.reinit_classifier) {
    const auto fresh = init_params<float>(params.config, derive_seed(plan.seed, kInitStream));
    const auto src = fresh.classifier_params();
    auto dst = params.classifier_params();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), dst[i].tensor.mutable_data().begin());
    }
  }
  params.set_trainable(params.encoder_params(), false);
  params.set_trainable(params.projector_params(), false);
  params.set_trainable(params.classifier_params(), true);
  const auto trained = params.classifier_params();
  auto state = AdamState<float>::init(trained, plan.adam);

  const auto train_feats = encode_trials(params, train);
  const auto val_feats = encode_trials(params, val);

  Rng shuffle_rng(derive_seed(plan.seed, kShuffleStream));
  std::vector<std::size_t> order(train.trials.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ClassifierResult result;
  TrainHistory& hist = result.history;
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };

  EpochRecord e0;
  e0.train_loss = NAN;
  e0.val_metric = auc(logits_from_features(params, val_feats), val_labels);
  e0.seconds = elapsed();
  hist.epochs.push_back(e0);
  if (options.on_epoch) options.on_epoch(e0);
  hist.best_epoch = 0;
  hist.best_metric = e0.val_metric;
  ModelParams<float> best = params.clone();
  std::uint32_t stale = 0;

  Tape<float> tape;
  for (std::uint32_t epoch = 1; epoch <= plan.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    bool failed = false;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      tape.clear();
      std::vector<Tensor<float>> losses;
      losses.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        auto logit = classifier_forward(tape, params, train_feats[idx]);
        losses.push_back(ops::bce_with_logits(tape, logit, static_cast<float>(train.trials[idx].label)));
      }
      auto loss = ops::scale(tape, ops::sum(tape, ops::stack(tape, losses)), 1.0f / static_cast<float>(end - start));
      const double value = loss.item();
      if (!std::isfinite(value)) {
        hist.stop_reason = "non-finite classifier loss at epoch " + std::to_string(epoch);
        failed = true;
        break;
      }
      tape.backward(loss);
      try {
        adam_step(trained, state);
      } catch (const NumericError& err) {
        hist.stop_reason = err.what();
        failed = true;
        break;
      }
      params.zero_grad();
      total += value * static_cast<double>(end - start);
    }
    tape.clear();
    if (failed) {
      hist.diverged = true;
      log::error("classifier training diverged: " + hist.stop_reason);
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    rec.val_metric = auc(logits_from_features(params, val_feats), val_labels);
    rec.seconds = elapsed();
    hist.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (epoch == 1 || rec.val_metric > hist.best_metric) {
      hist.best_metric = rec.val_metric;
      hist.best_epoch = epoch;
      best.assign_from(params);
      stale = 0;
    } else if (++stale > plan.patience) {
      hist.early_stopped = true;
      hist.stop_reason = "no validation improvement for " + std::to_string(stale) + " epochs";
      break;
    }
  }
  if (hist.stop_reason.empty()) hist.stop_reason = "reached max epochs";

  params.assign_from(best);
  params.zero_grad();
  result.params = std::move(params);
  return result;
}

}  // namespace erpcl
