#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "erpcl/binio.hpp"
#include "erpcl/data/synth.hpp"
#include "erpcl/error.hpp"
#include "erpcl/eval/auc.hpp"
#include "erpcl/model/checkpoint.hpp"
#include "erpcl/rng.hpp"
#include "erpcl/train/crossval.hpp"
#include "erpcl/train/run_dir.hpp"

using namespace erpcl;

namespace {

SynthParams quick_params(std::uint32_t subjects, std::uint32_t trials) {
  SynthParams p;
  p.n_subjects = subjects;
  p.trials_per_subject = trials;
  return p;
}

std::string encoder_bytes(const ModelParams<float>& m) { return encode_checkpoint(make_checkpoint(m, {"encoder."})); }

}  // namespace

TEST_CASE("adam step matches a hand-rolled two-step update") {
  auto w = Tensor<float>::from({2}, {0.5f, -1.0f}, true);
  std::vector<NamedTensor<float>> params{{"w", w}};
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.2;
  auto state = AdamState<float>::init(params, cfg);
  double ref_w[2] = {0.5, -1.0}, m[2] = {0, 0}, v[2] = {0, 0};
  const double grads[2][2] = {{0.3, -0.2}, {-0.1, 0.4}};
  for (int step = 0; step < 2; ++step) {
    w.zero_grad();
    for (int i = 0; i < 2; ++i) w.grad_buffer()[i] = static_cast<float>(grads[step][i]);
    adam_step(params, state);
    const int t = step + 1;
    for (int i = 0; i < 2; ++i) {
      const double g = grads[step][i] + 0.2 * ref_w[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref_w[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK(w.at(0) == doctest::Approx(ref_w[0]).epsilon(1e-6));
  CHECK(w.at(1) == doctest::Approx(ref_w[1]).epsilon(1e-6));
  CHECK(state.t == 2);
}

TEST_CASE("adam refuses non-finite gradients without touching weights") {
  auto w = Tensor<float>::from({2}, {0.5f, -1.0f}, true);
  std::vector<NamedTensor<float>> params{{"layer.w", w}};
  auto state = AdamState<float>::init(params, AdamConfig{});
  w.grad_buffer()[1] = NAN;
  try {
    adam_step(params, state);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer.w") != std::string::npos);
  }
  CHECK(w.at(0) == 0.5f);
  CHECK(state.t == 0);
}

TEST_CASE("train plan validation") {
  TrainPlan p;
  p.patience = p.max_epochs;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.max_epochs = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("contrastive pretraining lowers the training loss") {
  auto params = quick_params(8, 120);
  params.amplitude_scale = 2.0;
  const auto ds = synth_generate(params, 3);
  const auto [train_ids, val_ids] = split_validation(ds.subjects(), 0.25, 3);
  PretrainOptions opt;
  opt.plan.max_epochs = 20;
  opt.plan.patience = 19;
  opt.plan.seed = 3;
  auto res = pretrain_contrastive(ds.subset(train_ids), ds.subset(val_ids), init_params<float>(ModelConfig{}, 3), opt);
  const auto& h = res.history;
  REQUIRE(h.epochs.size() == 21);
  double early = 0, late = 0;
  for (std::size_t i = 1; i <= 5; ++i) early += h.epochs[i].train_loss;
  for (std::size_t i = 16; i <= 20; ++i) late += h.epochs[i].train_loss;
  CHECK(late < early);
  // The reported best is the minimum over trained epochs.
  double min_val = h.epochs[1].val_metric;
  for (std::size_t i = 1; i < h.epochs.size(); ++i) min_val = std::min(min_val, h.epochs[i].val_metric);
  CHECK(h.best_metric == min_val);
  CHECK(h.best_epoch >= 1);
  CHECK(h.epochs[h.best_epoch].val_metric == h.best_metric);
  // Best weights are restored: re-evaluating them reproduces the best metric.
  auto restored = res.params;
  CHECK(contrastive_eval_loss(restored, ds.subset(val_ids), opt.sampler, opt.loss, derive_seed(3, 14), opt.val_rounds) ==
        h.best_metric);
}

TEST_CASE("patience 0 stops at the first non-improving epoch") {
  const auto ds = synth_generate(quick_params(4, 60), 5);
  PretrainOptions opt;
  opt.plan.max_epochs = 30;
  opt.plan.patience = 0;
  opt.plan.seed = 1;
  opt.val_rounds = 1;
  auto res = pretrain_contrastive(ds.subset({1, 2, 3}), ds.subset({3, 4}), init_params<float>(ModelConfig{}, 1), opt);
  const auto& e = res.history.epochs;
  if (res.history.early_stopped) {
    // Every trained epoch but the last improved on its predecessor's best.
    double best = e[1].val_metric;
    for (std::size_t i = 2; i + 1 < e.size(); ++i) {
      CHECK(e[i].val_metric < best);
      best = e[i].val_metric;
    }
    CHECK(e.back().val_metric >= best);
  } else {
    CHECK(e.size() == 31);
  }
}

TEST_CASE("null data keeps the contrastive loss near 2 ln 6") {
  auto p = quick_params(2, 120);
  p.amplitude_scale = 0.0;
  const auto ds = synth_generate(p, 8);
  PretrainOptions opt;
  opt.plan.max_epochs = 40;
  opt.plan.patience = 39;
  opt.val_rounds = 1;
  auto res = pretrain_contrastive(ds, ds, init_params<float>(ModelConfig{}, 8), opt);
  double mean = 0;
  for (std::size_t i = 1; i < res.history.epochs.size(); ++i) mean += res.history.epochs[i].train_loss;
  mean /= static_cast<double>(res.history.epochs.size() - 1);
  CHECK(std::abs(mean - 2 * std::log(6.0)) <= 0.15 * 2 * std::log(6.0));
}

TEST_CASE("classifier training freezes the encoder and restores the best epoch") {
  auto p = quick_params(3, 60);
  p.amplitude_scale = 3.0;
  const auto ds = synth_generate(p, 2);
  const auto model = init_params<float>(ModelConfig{}, 4);
  const auto before = encoder_bytes(model);
  ClassifierOptions opt;
  opt.plan.max_epochs = 8;
  opt.plan.patience = 7;
  opt.plan.seed = 4;
  auto res = train_classifier(model, ds.subset({1, 2}), ds.subset({3}), opt);
  CHECK(encoder_bytes(res.params) == before);
  CHECK(encoder_bytes(model) == before);
  double max_val = 0;
  for (std::size_t i = 1; i < res.history.epochs.size(); ++i) max_val = std::max(max_val, res.history.epochs[i].val_metric);
  CHECK(res.history.best_metric == max_val);
  for (const auto& e : res.history.epochs) {
    CHECK(e.val_metric >= 0.0);
    CHECK(e.val_metric <= 1.0);
  }
  // Best weights are in place: validation AUC of the result equals the best metric.
  const auto logits = predict_logits(res.params, ds.subset({3}));
  std::vector<std::uint8_t> labels;
  for (const auto& t : ds.subset({3}).trials) labels.push_back(t.label);
  CHECK(res.history.best_metric == doctest::Approx(auc(logits, labels)));
}

TEST_CASE("classifier rejects a single-class training split") {
  auto ds = synth_generate(quick_params(2, 24), 2);
  Dataset only_neg = ds;
  only_neg.trials.erase(std::remove_if(only_neg.trials.begin(), only_neg.trials.end(),
                                       [](const Trial& t) { return t.label == 1; }),
                        only_neg.trials.end());
  CHECK_THROWS_AS(train_classifier(init_params<float>(ModelConfig{}, 1), only_neg, ds, ClassifierOptions{}),
                  ConfigError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto ds = synth_generate(quick_params(4, 48), 6);
  auto run = [&] {
    PretrainOptions po;
    po.plan.max_epochs = 2;
    po.plan.patience = 1;
    po.plan.seed = 6;
    po.val_rounds = 1;
    auto pre = pretrain_contrastive(ds.subset({1, 2, 3}), ds.subset({3, 4}), init_params<float>(ModelConfig{}, 6), po);
    ClassifierOptions co;
    co.plan.max_epochs = 2;
    co.plan.patience = 1;
    co.plan.seed = 6;
    auto cls = train_classifier(pre.params, ds.subset({1, 2}), ds.subset({3}), co);
    return std::make_pair(encode_checkpoint(make_checkpoint(cls.params)), predict_logits(cls.params, ds.subset({4})));
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("cross-validation plan") {
  const std::vector<std::uint32_t> subjects{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  SUBCASE("k = number of subjects is leave-one-subject-out") {
    const auto plan = crossval_plan(subjects, 10, 1, {}, 1);
    REQUIRE(plan.size() == 10);
    std::set<std::uint32_t> held;
    for (const auto& f : plan) {
      REQUIRE(f.val.size() == 1);
      CHECK(f.train.size() == 9);
      CHECK(f.test == f.val);
      held.insert(f.val[0]);
    }
    CHECK(held.size() == 10);
  }
  SUBCASE("same seed, same folds; holdout never trains") {
    const auto a = crossval_plan(subjects, 4, 3, {9, 10}, 5);
    const auto b = crossval_plan(subjects, 4, 3, {9, 10}, 5);
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].train == b[i].train);
      CHECK(a[i].val == b[i].val);
      CHECK(a[i].test == std::vector<std::uint32_t>{9, 10});
      CHECK_NOTHROW(a[i].check_disjoint());
      CHECK(a[i].train.size() + a[i].val.size() == 8);
    }
    const auto c = crossval_plan(subjects, 4, 1, {9, 10}, 6);
    bool differs = false;
    for (std::size_t i = 0; i < c.size(); ++i) differs |= c[i].val != a[i].val;
    CHECK(differs);
  }
  SUBCASE("7 test subjects, 5 repeats of 5 folds -> 175 evaluations") {
    std::vector<std::uint32_t> many(20);
    for (std::uint32_t i = 0; i < 20; ++i) many[i] = i + 1;
    const auto plan = crossval_plan(many, 5, 5, {14, 15, 16, 17, 18, 19, 20}, 2);
    std::size_t evaluations = 0;
    for (const auto& f : plan) evaluations += f.test.size();
    CHECK(plan.size() == 25);
    CHECK(evaluations == 175);
  }
  SUBCASE("invalid requests") {
    CHECK_THROWS_AS(crossval_plan(subjects, 11, 1, {}, 1), ConfigError);
    CHECK_THROWS_AS(crossval_plan(subjects, 9, 1, {1, 2}, 1), ConfigError);
    CHECK_THROWS_AS(crossval_plan(subjects, 1, 1, {}, 1), ConfigError);
    CHECK_THROWS_AS(crossval_plan(subjects, 2, 1, {42}, 1), ConfigError);
  }
  SUBCASE("overlap is a hard error") {
    FoldAssignment f;
    f.train = {1, 2};
    f.val = {3};
    f.test = {2};
    CHECK_THROWS_AS(f.check_disjoint(), Error);
  }
}

TEST_CASE("validation split") {
  const auto [train, val] = split_validation({1, 2, 3, 4, 5, 6, 7, 8}, 0.25, 1);
  CHECK(train.size() == 6);
  CHECK(val.size() == 2);
  std::set<std::uint32_t> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  CHECK(all.size() == 8);
  CHECK(split_validation({1, 2, 3, 4, 5, 6, 7, 8}, 0.25, 1) == std::make_pair(train, val));
  CHECK_THROWS_AS(split_validation({1, 2}, 0.25, 1), ConfigError);
  CHECK_THROWS_AS(split_validation({1, 2, 3}, 1.0, 1), ConfigError);
}

TEST_CASE("crossval runs folds in parallel with identical results") {
  const auto ds = synth_generate(quick_params(5, 48), 9);
  CrossvalOptions opt;
  opt.k = 2;
  opt.repeats = 1;
  opt.holdout = {5};
  opt.seed = 3;
  opt.pretrain_options.plan.max_epochs = 1;
  opt.pretrain_options.plan.patience = 0;
  opt.pretrain_options.val_rounds = 1;
  opt.classifier_options.plan.max_epochs = 2;
  opt.classifier_options.plan.patience = 1;
  auto serial = crossval(ds, opt);
  opt.jobs = 2;
  auto parallel = crossval(ds, opt);
  REQUIRE(serial.size() == 2);
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].to_csv() == parallel[i].to_csv());
  CHECK(serial[0].subjects.size() == 1);
  CHECK(serial[0].subjects[0].subject_id == 5);
}

TEST_CASE("run directory layout") {
  const auto root = std::filesystem::path("erpcl_test_run_dir");
  std::filesystem::remove_all(root);
  RunDir dir(root / "nested");
  dir.write_config({{"seed", "7"}, {"temperature", "0.5"}});
  const auto parsed = parse_config(binio::read_file(dir.file("config.txt").string()));
  CHECK(parsed == ConfigEntries{{"seed", "7"}, {"temperature", "0.5"}});
  dir.start_metrics("m.csv");
  dir.append_metrics("m.csv", EpochRecord{3, 1.5, 0.25, 2.0});
  CHECK(binio::read_file(dir.file("m.csv").string()) == "epoch,train_loss,val_metric,seconds\n3,1.5,0.25,2.0000\n");
  CHECK_THROWS_AS(parse_config("no equals sign"), FormatError);
  std::filesystem::remove_all(root);
}
