#include "erpcl/data/sampler.hpp"

#include <algorithm>
#include <set>

#include "erpcl/error.hpp"
#include "erpcl/log.hpp"

namespace erpcl {

std::vector<float> average_trials(const std::vector<const Trial*>& trials, std::uint32_t n_avg) {
  if (n_avg == 0) throw SamplingError("average_trials: n_avg must be >= 1");
  if (trials.size() != n_avg) {
    throw SamplingError("average_trials: expected " + std::to_string(n_avg) + " trials, got " +
                        std::to_string(trials.size()));
  }
  const Trial& first = *trials.front();
  std::vector<double> acc(first.data.size(), 0.0);
  for (const Trial* t : trials) {
    if (t->subject_id != first.subject_id || t->label != first.label) {
      throw SamplingError("average_trials: trials mix subjects or labels");
    }
    if (t->data.size() != acc.size()) throw ShapeError("average_trials: trials differ in size");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += t->data[i];
  }
  std::vector<float> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / n_avg);
  return out;
}

void SamplerConfig::validate() const {
  if (n_avg == 0) throw ConfigError("sampler: n_avg must be >= 1");
  if (n_anchor == 0) throw ConfigError("sampler: n_anchor must be >= 1");
}

void SubjectPairBatch::validate(const Dataset& dataset, const SamplerConfig& config) const {
  if (a.subject_id == b.subject_id) throw SamplingError("pair batch: both sides are subject " + std::to_string(a.subject_id));
  for (const SubjectSamples* side : {&a, &b}) {
    std::size_t n_erp = 0;
    std::size_t n_non = 0;
    std::set<std::size_t> used;
    for (const auto& s : side->samples) {
      (s.erp ? n_erp : n_non) += 1;
      if (s.source_trials.size() != config.n_avg) {
        throw SamplingError("pair batch: sample averages " + std::to_string(s.source_trials.size()) +
                            " trials instead of " + std::to_string(config.n_avg));
      }
      for (std::size_t idx : s.source_trials) {
        if (idx >= dataset.trials.size()) throw SamplingError("pair batch: trial index out of range");
        const Trial& t = dataset.trials[idx];
        if (t.subject_id != side->subject_id || (t.label == 1) != s.erp) {
          throw SamplingError("pair batch: trial " + std::to_string(idx) + " has the wrong subject or label");
        }
        if (!used.insert(idx).second) throw SamplingError("pair batch: trial " + std::to_string(idx) + " reused");
      }
    }
    if (n_erp != config.n_anchor || n_non != config.n_neg) {
      throw SamplingError("pair batch: subject " + std::to_string(side->subject_id) + " has " + std::to_string(n_erp) +
                          " ERP / " + std::to_string(n_non) + " non-ERP samples");
    }
  }
}

PairSampler::PairSampler(const Dataset& dataset, SamplerConfig config, std::uint64_t seed)
    : dataset_(&dataset), config_(config), rng_(seed) {
  config_.validate();
  for (const auto& [subject, idx] : dataset.subject_index()) {
    auto& erp = erp_[subject];
    auto& non = non_erp_[subject];
    for (std::size_t i : idx) (dataset.trials[i].label ? erp : non).push_back(i);
    const std::size_t need_erp = static_cast<std::size_t>(config_.n_anchor) * config_.n_avg;
    const std::size_t need_non = static_cast<std::size_t>(config_.n_neg) * config_.n_avg;
    if (erp.size() < need_erp || non.size() < need_non) {
      log::warn("sampler: skipping subject " + std::to_string(subject) + " (" + std::to_string(erp.size()) +
                " ERP / " + std::to_string(non.size()) + " non-ERP trials; need " + std::to_string(need_erp) + " / " +
                std::to_string(need_non) + ")");
      skipped_.push_back(subject);
    } else {
      usable_.push_back(subject);
    }
  }
  if (usable_.size() < 2) {
    throw SamplingError("sampler: need at least 2 usable subjects, have " + std::to_string(usable_.size()));
  }
}

std::vector<SubjectPair> PairSampler::next_epoch() {
  std::vector<SubjectPair> pairs;
  pairs.reserve(pairs_per_epoch());
  for (std::size_t i = 0; i < usable_.size(); ++i)
    for (std::size_t j = i + 1; j < usable_.size(); ++j) pairs.emplace_back(usable_[i], usable_[j]);
  rng_.shuffle(pairs);
  return pairs;
}

SubjectSamples PairSampler::draw_subject(std::uint32_t subject) {
  SubjectSamples out;
  out.subject_id = subject;
  auto draw_group = [&](const std::vector<std::size_t>& pool, std::uint32_t count, bool erp) {
    // Partial Fisher-Yates over a copy: count*n_avg distinct trials.
    std::vector<std::size_t> idx = pool;
    const std::size_t need = static_cast<std::size_t>(count) * config_.n_avg;
    for (std::size_t i = 0; i < need; ++i) std::swap(idx[i], idx[i + rng_.below(idx.size() - i)]);
    for (std::uint32_t s = 0; s < count; ++s) {
      AveragedSample sample;
      sample.erp = erp;
      std::vector<const Trial*> parts;
      for (std::uint32_t k = 0; k < config_.n_avg; ++k) {
        const std::size_t ti = idx[s * config_.n_avg + k];
        sample.source_trials.push_back(ti);
        parts.push_back(&dataset_->trials[ti]);
      }
      sample.data = average_trials(parts, config_.n_avg);
      out.samples.push_back(std::move(sample));
    }
  };
  draw_group(erp_.at(subject), config_.n_anchor, true);
  draw_group(non_erp_.at(subject), config_.n_neg, false);
  return out;
}

SubjectPairBatch PairSampler::draw(const SubjectPair& pair) {
  if (std::find(usable_.begin(), usable_.end(), pair.first) == usable_.end() ||
      std::find(usable_.begin(), usable_.end(), pair.second) == usable_.end()) {
    throw SamplingError("sampler: pair {" + std::to_string(pair.first) + ", " + std::to_string(pair.second) +
                        "} includes an unusable subject");
  }
  SubjectPairBatch batch{draw_subject(pair.first), draw_subject(pair.second)};
  batch.validate(*dataset_, config_);
  return batch;
}

}  // namespace erpcl
