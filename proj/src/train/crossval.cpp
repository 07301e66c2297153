#include "erpcl/train/crossval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "erpcl/error.hpp"
#include "erpcl/rng.hpp"

namespace erpcl {
namespace {

constexpr std::uint64_t kPlanStream = 31;
constexpr std::uint64_t kFoldStream = 32;

bool intersects(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::set<std::uint32_t> s(a.begin(), a.end());
  return std::any_of(b.begin(), b.end(), [&](std::uint32_t x) { return s.count(x) > 0; });
}

}  // namespace

void FoldAssignment::check_disjoint() const {
  if (intersects(train, val) || intersects(train, test) || intersects(val, test))
    throw Error("crossval: train/val/test subjects overlap in repeat " + std::to_string(repeat) + " fold " +
                std::to_string(fold));
}

std::vector<FoldAssignment> crossval_plan(const std::vector<std::uint32_t>& subjects, std::uint32_t k,
                                          std::uint32_t repeats, const std::vector<std::uint32_t>& holdout,
                                          std::uint64_t seed) {
  std::set<std::uint32_t> all(subjects.begin(), subjects.end());
  std::set<std::uint32_t> held(holdout.begin(), holdout.end());
  for (auto h : held)
    if (!all.count(h)) throw ConfigError("crossval: holdout subject " + std::to_string(h) + " not in dataset");
  std::vector<std::uint32_t> pool;
  for (auto s : all)
    if (!held.count(s)) pool.push_back(s);
  if (k < 2) throw ConfigError("crossval: k must be at least 2");
  if (k > pool.size())
    throw ConfigError("crossval: k = " + std::to_string(k) + " exceeds the " + std::to_string(pool.size()) +
                      " non-holdout subjects");
  if (repeats == 0) throw ConfigError("crossval: repeats must be at least 1");

  std::vector<FoldAssignment> plan;
  const std::vector<std::uint32_t> test_set(held.begin(), held.end());
  for (std::uint32_t r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(derive_seed(seed, kPlanStream), r));
    auto order = pool;
    rng.shuffle(order);
    std::vector<std::vector<std::uint32_t>> folds(k);
    for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
    for (std::uint32_t f = 0; f < k; ++f) {
      FoldAssignment a;
      a.repeat = r;
      a.fold = f;
      a.val = folds[f];
      std::sort(a.val.begin(), a.val.end());
      for (std::uint32_t g = 0; g < k; ++g)
        if (g != f) a.train.insert(a.train.end(), folds[g].begin(), folds[g].end());
      std::sort(a.train.begin(), a.train.end());
      a.test = test_set.empty() ? a.val : test_set;
      if (!test_set.empty()) a.check_disjoint();
      else if (intersects(a.train, a.val)) throw Error("crossval: train and val subjects overlap");
      plan.push_back(std::move(a));
    }
  }
  return plan;
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> split_validation(
    const std::vector<std::uint32_t>& subjects, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  const std::size_t n = subjects.size();
  const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))));
  if (n < n_val + 2)
    throw ConfigError("need at least " + std::to_string(n_val + 2) + " subjects for a validation split, have " +
                      std::to_string(n));
  auto order = subjects;
  std::sort(order.begin(), order.end());
  Rng rng(derive_seed(seed, 33));
  rng.shuffle(order);
  std::vector<std::uint32_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::uint32_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

FoldRun run_fold(const Dataset& dataset, const FoldAssignment& fold, const CrossvalOptions& options,
                 std::uint64_t seed) {
  const Dataset train = dataset.subset(fold.train);
  const Dataset val = dataset.subset(fold.val);
  const Dataset test = dataset.subset(fold.test);
  FoldRun run;
  auto init = init_params<float>(options.model, derive_seed(seed, 1));
  if (options.pretrain) {
    PretrainOptions po = options.pretrain_options;
    po.plan.seed = derive_seed(seed, 2);
    auto pre = pretrain_contrastive(train, val, std::move(init), po);
    run.pretrain_history = std::move(pre.history);
    init = std::move(pre.params);
  }
  ClassifierOptions co = options.classifier_options;
  co.plan.seed = derive_seed(seed, 3);
  auto cls = train_classifier(init, train, val, co);
  run.classifier_history = std::move(cls.history);
  run.model = std::move(cls.params);
  run.report = evaluate(run.model, test, options.eval);
  return run;
}

std::vector<EvalReport> crossval(const Dataset& dataset, const CrossvalOptions& options) {
  const auto plan = crossval_plan(dataset.subjects(), options.k, options.repeats, options.holdout, options.seed);
  std::vector<EvalReport> reports(plan.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        const auto& fold = plan[i];
        const std::uint64_t seed = derive_seed(derive_seed(options.seed, kFoldStream), i);
        auto run = run_fold(dataset, fold, options, seed);
        reports[i] = std::move(run.report);
        if (options.on_fold) {
          std::lock_guard lock(mu);
          options.on_fold(fold, reports[i]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, plan.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return reports;
}

}  // namespace erpcl
