#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "erpcl/data/dataset.hpp"
#include "erpcl/eval/report.hpp"
#include "erpcl/model/config.hpp"
#include "erpcl/train/trainer.hpp"

namespace erpcl {

/// Subject split of one (repeat, fold). `val` is the held-out fold of the
/// non-holdout subjects, `train` the remaining folds, `test` the holdout set
/// (or the fold itself when there is no holdout).
struct FoldAssignment {
  std::uint32_t repeat = 0;
  std::uint32_t fold = 0;
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;

  /// Throws Error unless train, val and test are pairwise disjoint.
  void check_disjoint() const;
};

/// Deterministic fold plan: per repeat the non-holdout subjects are shuffled and
/// dealt round-robin into k folds. Throws ConfigError for k < 2, k greater than the
/// number of non-holdout subjects, or holdout ids absent from `subjects`.
std::vector<FoldAssignment> crossval_plan(const std::vector<std::uint32_t>& subjects, std::uint32_t k,
                                          std::uint32_t repeats, const std::vector<std::uint32_t>& holdout,
                                          std::uint64_t seed);

/// Deterministically moves round(fraction * n) subjects (at least 1) of `subjects`
/// into the second list, keeping at least 2 in the first. Throws ConfigError when
/// that is impossible or fraction is outside (0, 1).
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> split_validation(
    const std::vector<std::uint32_t>& subjects, double fraction, std::uint64_t seed);

struct CrossvalOptions {
  std::uint32_t k = 5;
  std::uint32_t repeats = 2;
  std::vector<std::uint32_t> holdout;
  std::uint64_t seed = 0;
  std::uint32_t jobs = 1;
  ModelConfig model;
  bool pretrain = true;  // false trains the classifier on a randomly initialized frozen encoder
  PretrainOptions pretrain_options;
  ClassifierOptions classifier_options;
  EvalOptions eval;
  /// Called after each fold finishes, possibly from a worker thread.
  std::function<void(const FoldAssignment&, const EvalReport&)> on_fold;
};

/// Runs pretrain -> classifier -> evaluate for every fold, `jobs` folds at a time.
/// Reports are returned in plan order.
std::vector<EvalReport> crossval(const Dataset& dataset, const CrossvalOptions& options);

/// Result of one train/evaluate cycle on explicit subject sets.
struct FoldRun {
  ModelParams<float> model;
  TrainHistory pretrain_history;
  TrainHistory classifier_history;
  EvalReport report;
};

/// One fold: pretrains on `train` with early stopping on `val`, trains the
/// classifier on `train` with early stopping on `val`, evaluates on `test`.
FoldRun run_fold(const Dataset& dataset, const FoldAssignment& fold, const CrossvalOptions& options,
                 std::uint64_t seed);

}  // namespace erpcl
