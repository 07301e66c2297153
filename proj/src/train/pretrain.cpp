#include <chrono>
#include <cmath>

#include "erpcl/error.hpp"
#include "erpcl/log.hpp"
#include "erpcl/model/networks.hpp"
#include "erpcl/rng.hpp"
#include "erpcl/train/trainer.hpp"

namespace erpcl {
namespace {

constexpr std::uint64_t kSamplerStream = 11;
constexpr std::uint64_t kDropoutStream = 12;
constexpr std::uint64_t kTrainEvalStream = 13;
constexpr std::uint64_t kValEvalStream = 14;

Tensor<float> sample_tensor(const Dataset& ds, const AveragedSample& s) {
  return Tensor<float>::from({ds.n_channels, ds.n_samples}, s.data);
}

Tensor<float> pair_loss(Tape<float>& tape, ModelParams<float>& params, const Dataset& ds,
                        const SubjectPairBatch& batch, const contrastive::LossConfig& loss, ForwardMode mode) {
  std::vector<Tensor<float>> encoded;
  std::vector<bool> erp;
  for (const SubjectSamples* side : {&batch.a, &batch.b}) {
    for (const auto& s : side->samples) {
      encoded.push_back(encoder_forward(tape, params, sample_tensor(ds, s)));
      erp.push_back(s.erp);
    }
  }
  const auto emb = projector_forward(tape, params, encoded, mode);
  contrastive::PairEmbeddings<float> pe;
  const std::size_t n_a = batch.a.samples.size();
  for (std::size_t i = 0; i < emb.size(); ++i) (i < n_a ? pe.a : pe.b).push_back({emb[i], erp[i]});
  return contrastive::batch_loss(tape, pe, loss);
}

}  // namespace

void TrainPlan::validate() const {
  if (max_epochs == 0) throw ConfigError("training needs at least one epoch");
  if (patience >= max_epochs) {
    throw ConfigError("patience (" + std::to_string(patience) + ") must be smaller than max epochs (" +
                      std::to_string(max_epochs) + ")");
  }
}

double contrastive_eval_loss(ModelParams<float>& params, const Dataset& dataset, const SamplerConfig& sampler,
                             const contrastive::LossConfig& loss, std::uint64_t seed, std::uint32_t rounds) {
  if (rounds == 0) throw ConfigError("contrastive_eval_loss: rounds must be >= 1");
  PairSampler ps(dataset, sampler, seed);
  double total = 0.0;
  std::size_t n = 0;
  Tape<float> tape;
  for (std::uint32_t r = 0; r < rounds; ++r) {
    for (const auto& pair : ps.next_epoch()) {
      tape.clear();
      total += pair_loss(tape, params, dataset, ps.draw(pair), loss, ForwardMode::eval()).item();
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

PretrainResult pretrain_contrastive(const Dataset& train, const Dataset& val, ModelParams<float> init,
                                    const PretrainOptions& options) {
  options.plan.validate();
  options.loss.validate();
  const auto& plan = options.plan;

  ModelParams<float> params = std::move(init);
  params.set_trainable(params.encoder_params(), true);
  params.set_trainable(params.projector_params(), true);
  params.set_trainable(params.classifier_params(), false);
  std::vector<NamedTensor<float>> trained = params.encoder_params();
  for (auto& e : params.projector_params()) trained.push_back(std::move(e));

  PairSampler sampler(train, options.sampler, derive_seed(plan.seed, kSamplerStream));
  // Validate the split up front so a bad val set fails before any training.
  PairSampler(val, options.sampler, 0);
  std::mt19937_64 dropout_rng(derive_seed(plan.seed, kDropoutStream));
  auto state = AdamState<float>::init(trained, plan.adam);

  const std::uint64_t val_seed = derive_seed(plan.seed, kValEvalStream);
  PretrainResult result;
  TrainHistory& hist = result.history;
  auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };

  EpochRecord e0;
  e0.train_loss = contrastive_eval_loss(params, train, options.sampler, options.loss, derive_seed(plan.seed, kTrainEvalStream));
  e0.val_metric = contrastive_eval_loss(params, val, options.sampler, options.loss, val_seed, options.val_rounds);
  e0.seconds = elapsed();
  hist.epochs.push_back(e0);
  if (options.on_epoch) options.on_epoch(e0);
  hist.best_epoch = 0;
  hist.best_metric = e0.val_metric;
  ModelParams<float> best = params.clone();
  std::uint32_t stale = 0;

  Tape<float> tape;
  for (std::uint32_t epoch = 1; epoch <= plan.max_epochs; ++epoch) {
    double total = 0.0;
    std::size_t batches = 0;
    bool failed = false;
    for (const auto& pair : sampler.next_epoch()) {
      tape.clear();
      auto batch = sampler.draw(pair);
      auto loss = pair_loss(tape, params, train, batch, options.loss, ForwardMode::train(dropout_rng));
      const double value = loss.item();
      if (!std::isfinite(value)) {
        hist.stop_reason = "non-finite contrastive loss at epoch " + std::to_string(epoch);
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
      total += value;
      ++batches;
    }
    tape.clear();
    if (failed) {
      hist.diverged = true;
      log::error("pretrain diverged: " + hist.stop_reason + "; restoring epoch " + std::to_string(hist.best_epoch));
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(batches);
    rec.val_metric = contrastive_eval_loss(params, val, options.sampler, options.loss, val_seed, options.val_rounds);
    rec.seconds = elapsed();
    hist.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (epoch == 1 || rec.val_metric < hist.best_metric) {
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
