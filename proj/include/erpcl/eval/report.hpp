#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "erpcl/data/dataset.hpp"
#include "erpcl/data/synth.hpp"
#include "erpcl/model/params.hpp"

namespace erpcl {

struct SubjectResult {
  std::uint32_t subject_id = 0;
  double auc = 0.0;          // NaN when the subject lacks one class
  std::size_t n_trials = 0;
  double speller_acc = 0.0;  // NaN when the subject has no speller selections
  std::size_t n_selections = 0;
};

struct EvalReport {
  std::vector<SubjectResult> subjects;
  double auc_mean = 0.0;
  double auc_std = 0.0;  // sample standard deviation over subjects
  double speller_acc = 0.0;  // pooled over all selections; NaN without selections
  double speller_acc_mean = 0.0;
  double speller_acc_std = 0.0;
  std::size_t n_trials = 0;
  std::size_t n_selections = 0;
  std::string fingerprint;

  /// "key: value" lines.
  std::string to_text() const;
  /// Header "subject_id,auc,n_trials,speller_acc" plus one row per subject.
  std::string to_csv() const;
};

struct EvalOptions {
  SpellerLayout layout{};
  std::uint32_t repetitions = 1;
  std::string fingerprint;
};

/// Mean and sample standard deviation of the finite values (std 0 for a single value).
std::pair<double, double> mean_std(std::span<const double> values);

/// Report from per-trial scores (same order as dataset.trials).
EvalReport evaluate_scores(const Dataset& dataset, std::span<const double> scores, const EvalOptions& options);

/// Single-trial logits of encoder + classifier, then evaluate_scores.
EvalReport evaluate(const ModelParams<float>& model, const Dataset& dataset, const EvalOptions& options);

/// FNV-1a of `text`, as 16 hex digits.
std::string fingerprint_of(std::string_view text);

}  // namespace erpcl
