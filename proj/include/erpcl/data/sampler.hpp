#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "erpcl/data/dataset.hpp"
#include "erpcl/rng.hpp"

namespace erpcl {

/// Element-wise mean of `n_avg` trials sharing one subject and one label.
/// Throws SamplingError on a count mismatch or mixed subjects/labels.
std::vector<float> average_trials(const std::vector<const Trial*>& trials, std::uint32_t n_avg);

struct SamplerConfig {
  std::uint32_t n_avg = 3;     // trials per averaged sample
  std::uint32_t n_neg = 5;     // averaged non-ERP samples per subject
  std::uint32_t n_anchor = 1;  // averaged ERP samples per subject

  void validate() const;
};

struct AveragedSample {
  std::vector<float> data;  // M x N
  bool erp = false;
  std::vector<std::size_t> source_trials;  // dataset indices that were averaged
};

struct SubjectSamples {
  std::uint32_t subject_id = 0;
  std::vector<AveragedSample> samples;  // n_anchor ERP samples first, then n_neg non-ERP
};

/// Contrastive mini-batch for one subject pair {A, B}.
struct SubjectPairBatch {
  SubjectSamples a;
  SubjectSamples b;

  /// Throws SamplingError if the composition invariant does not hold: A != B,
  /// n_anchor ERP + n_neg non-ERP samples per subject, each averaging n_avg
  /// distinct trials of the right subject and label, disjoint within a subject.
  void validate(const Dataset& dataset, const SamplerConfig& config) const;
};

using SubjectPair = std::pair<std::uint32_t, std::uint32_t>;

/// Traverses every unordered pair of usable subjects once per epoch in a seeded
/// order. Trials are drawn without replacement inside a batch and with
/// replacement across batches.
class PairSampler {
 public:
  /// Subjects lacking n_anchor*n_avg ERP or n_neg*n_avg non-ERP trials are skipped
  /// with a warning; fewer than two usable subjects is a SamplingError.
  PairSampler(const Dataset& dataset, SamplerConfig config, std::uint64_t seed);

  const std::vector<std::uint32_t>& usable_subjects() const { return usable_; }
  const std::vector<std::uint32_t>& skipped_subjects() const { return skipped_; }
  std::size_t pairs_per_epoch() const { return usable_.size() * (usable_.size() - 1) / 2; }

  /// Pairs (a < b) of the next epoch in shuffled order.
  std::vector<SubjectPair> next_epoch();
  SubjectPairBatch draw(const SubjectPair& pair);

  const SamplerConfig& config() const { return config_; }

 private:
  SubjectSamples draw_subject(std::uint32_t subject);

  const Dataset* dataset_;
  SamplerConfig config_;
  Rng rng_;
  std::vector<std::uint32_t> usable_;
  std::vector<std::uint32_t> skipped_;
  std::map<std::uint32_t, std::vector<std::size_t>> erp_;
  std::map<std::uint32_t, std::vector<std::size_t>> non_erp_;
};

}  // namespace erpcl
