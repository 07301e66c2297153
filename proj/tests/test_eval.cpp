#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "erpcl/error.hpp"
#include "erpcl/eval/auc.hpp"
#include "erpcl/eval/lda.hpp"
#include "erpcl/eval/report.hpp"
#include "erpcl/eval/speller.hpp"

using namespace erpcl;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

// Speller trials for one subject: one block of 12 flashes per target, codes shuffled.
void add_selections(Dataset& ds, std::uint32_t subject, const std::vector<Command>& targets, std::mt19937_64& rng) {
  for (const auto& t : targets) {
    std::vector<std::uint32_t> codes(12);
    for (std::uint32_t c = 0; c < 12; ++c) codes[c] = c + 1;
    std::shuffle(codes.begin(), codes.end(), rng);
    for (auto code : codes) {
      Trial tr;
      tr.subject_id = subject;
      tr.stimulus_code = code;
      tr.label = (code == t.row + 1 || code == 6 + t.col + 1) ? 1 : 0;
      tr.data.assign(ds.n_channels * ds.n_samples, 0.0f);
      ds.trials.push_back(std::move(tr));
    }
  }
}

std::vector<double> oracle_scores(const Dataset& ds) {
  std::vector<double> s;
  for (const auto& t : ds.trials) s.push_back(t.label ? 1.0 : 0.0);
  return s;
}

}  // namespace

TEST_CASE("auc equals exhaustive pair counting on random sets with ties") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng() % 49;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7);
      y[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(auc(s, y) == pairwise_auc(s, y));
  }
}

TEST_CASE("auc small cases and invariances") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  CHECK(auc(s, y) == 0.75);
  CHECK(auc(std::vector<double>{1, 1, 1, 1}, y) == 0.5);

  std::vector<double> shifted, flipped, cubed;
  for (double v : s) {
    shifted.push_back(3 * v + 2);
    flipped.push_back(-v);
    cubed.push_back(v * v * v);
  }
  CHECK(auc(shifted, y) == auc(s, y));
  CHECK(auc(cubed, y) == auc(s, y));
  CHECK(auc(s, y) + auc(flipped, y) == doctest::Approx(1.0));

  CHECK_THROWS_AS(auc(s, std::vector<std::uint8_t>{1, 1, 1, 1}), MetricError);
  CHECK_THROWS_AS(auc(std::vector<double>{}, std::vector<std::uint8_t>{}), MetricError);
}

TEST_CASE("auc of duplicated trials is unchanged") {
  const std::vector<double> s{0.2, 0.9, 0.5, 0.1, 0.7};
  const std::vector<std::uint8_t> y{0, 1, 0, 1, 1};
  std::vector<double> s2 = s;
  std::vector<std::uint8_t> y2 = y;
  s2.insert(s2.end(), s.begin(), s.end());
  y2.insert(y2.end(), y.begin(), y.end());
  CHECK(auc(s2, y2) == doctest::Approx(auc(s, y)));
}

TEST_CASE("speller decode") {
  const SpellerLayout layout;
  std::vector<Flash> flashes;
  for (std::uint32_t c = 1; c <= 12; ++c) flashes.push_back({c, 0.0});
  flashes[2].score = 5.0;   // row 2
  flashes[10].score = 4.0;  // column 4
  CHECK(speller_decode(flashes, layout) == Command{2, 4});

  for (auto& f : flashes) f.score = 1.0;
  CHECK(speller_decode(flashes, layout) == Command{0, 0});

  // Repeated flashes accumulate.
  std::vector<Flash> rep = flashes;
  for (auto& f : rep) f.score = 0.0;
  rep.push_back({4, 0.6});
  rep.push_back({4, 0.6});
  rep.push_back({3, 1.0});
  rep.push_back({8, 0.3});
  CHECK(speller_decode(rep, layout) == Command{3, 1});

  std::vector<Flash> missing(flashes.begin(), flashes.end() - 1);
  CHECK_THROWS_AS(speller_decode(missing, layout), ProtocolError);
  std::vector<Flash> bad = flashes;
  bad.push_back({13, 1.0});
  CHECK_THROWS_AS(speller_decode(bad, layout), ProtocolError);
}

TEST_CASE("oracle scores decode every selection; monotone transforms keep commands") {
  std::mt19937_64 rng(5);
  Dataset ds;
  ds.n_samples = 4;
  ds.n_channels = 1;
  std::vector<Command> targets;
  for (int i = 0; i < 1000; ++i) targets.push_back({static_cast<std::uint32_t>(rng() % 6), static_cast<std::uint32_t>(rng() % 6)});
  add_selections(ds, 1, targets, rng);
  const SpellerLayout layout;
  const auto sel = group_selections(ds, layout);
  REQUIRE(sel.size() == 1000);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < sel.size(); ++k) {
    CHECK(sel[k].target == targets[k]);
    std::vector<Flash> f, g;
    for (auto i : sel[k].trials) {
      const double s = (ds.trials[i].label ? 1.0 : 0.0) + 0.3 * noise(rng);
      f.push_back({ds.trials[i].stimulus_code, ds.trials[i].label ? 1.0 : 0.0});
      g.push_back({ds.trials[i].stimulus_code, s});
    }
    correct += speller_decode(f, layout) == sel[k].target;
    auto g_exp = g, g_aff = g;
    for (auto& x : g_exp) x.score = std::exp(x.score);
    for (auto& x : g_aff) x.score = 2.5 * x.score + 7.0;
    CHECK(speller_decode(g_aff, layout) == speller_decode(g, layout));
    // exp is monotone per flash; with one flash per code the argmax is preserved.
    CHECK(speller_decode(g_exp, layout) == speller_decode(g, layout));
  }
  CHECK(correct == 1000);
}

TEST_CASE("random scores select at chance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SpellerLayout layout;
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::vector<Flash> f;
    for (std::uint32_t c = 1; c <= 12; ++c) f.push_back({c, u(rng)});
    hits += speller_decode(f, layout) == Command{0, 0};
  }
  CHECK(std::abs(hits / static_cast<double>(n) - 1.0 / 36.0) < 0.01);
}

TEST_CASE("group_selections rejects malformed blocks") {
  std::mt19937_64 rng(1);
  Dataset ds;
  ds.n_channels = 1;
  ds.n_samples = 4;
  add_selections(ds, 1, {{1, 1}}, rng);
  const SpellerLayout layout;
  SUBCASE("incomplete block") {
    ds.trials.pop_back();
    CHECK_THROWS_AS(group_selections(ds, layout), ProtocolError);
  }
  SUBCASE("two target rows") {
    for (auto& t : ds.trials)
      if (t.stimulus_code <= 6) t.label = 1;
    CHECK_THROWS_AS(group_selections(ds, layout), ProtocolError);
  }
  SUBCASE("repeated code in a block") {
    ds.trials[1].stimulus_code = ds.trials[0].stimulus_code;
    CHECK_THROWS_AS(group_selections(ds, layout), ProtocolError);
  }
}

TEST_CASE("evaluate_scores aggregates per subject") {
  std::mt19937_64 rng(2);
  Dataset ds;
  ds.n_channels = 1;
  ds.n_samples = 4;
  add_selections(ds, 1, {{0, 0}, {1, 2}}, rng);
  add_selections(ds, 2, {{3, 3}}, rng);
  add_selections(ds, 3, {{5, 4}}, rng);
  auto scores = oracle_scores(ds);
  // Subject 2: invert one target so AUC drops to 1 - 10/20 * 1/2 ... computed by pair counting.
  std::vector<double> s2;
  std::vector<std::uint8_t> y2;
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < ds.trials.size(); ++i) {
    if (ds.trials[i].subject_id != 2) continue;
    if (ds.trials[i].label == 1 && flipped++ == 0) scores[i] = -1.0;
    s2.push_back(scores[i]);
    y2.push_back(ds.trials[i].label);
  }
  const double auc2 = pairwise_auc(s2, y2);
  CHECK(auc2 == 0.5);
  const auto r = evaluate_scores(ds, scores, EvalOptions{});
  REQUIRE(r.subjects.size() == 3);
  CHECK(r.subjects[0].auc == 1.0);
  CHECK(r.subjects[1].auc == auc2);
  CHECK(r.subjects[2].auc == 1.0);
  const double mean = (2.0 + auc2) / 3.0;
  const double var = (2 * (1.0 - mean) * (1.0 - mean) + (auc2 - mean) * (auc2 - mean)) / 2.0;
  CHECK(r.auc_mean == doctest::Approx(mean));
  CHECK(r.auc_std == doctest::Approx(std::sqrt(var)));
  CHECK(r.n_trials == 48);
  CHECK(r.n_selections == 4);
  CHECK(r.subjects[0].speller_acc == 1.0);
  CHECK(r.subjects[1].speller_acc == 0.0);
  CHECK(r.speller_acc == 0.75);
  CHECK(r.to_csv().rfind("subject_id,auc,n_trials,speller_acc\n", 0) == 0);

  CHECK_THROWS_AS(evaluate_scores(ds, std::vector<double>(3), EvalOptions{}), MetricError);
  CHECK_THROWS_AS(evaluate_scores(Dataset{}, std::vector<double>{}, EvalOptions{}), MetricError);
}

TEST_CASE("evaluation is invariant to monotone score transforms") {
  std::mt19937_64 rng(4);
  Dataset ds;
  ds.n_channels = 1;
  ds.n_samples = 4;
  add_selections(ds, 1, {{0, 3}, {2, 2}, {4, 1}}, rng);
  add_selections(ds, 2, {{1, 5}, {3, 0}}, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> s, t;
  for (const auto& tr : ds.trials) {
    s.push_back(tr.label + g(rng));
    t.push_back(4.0 * s.back() - 1.0);
  }
  const auto a = evaluate_scores(ds, s, EvalOptions{});
  const auto b = evaluate_scores(ds, t, EvalOptions{});
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.speller_acc == b.speller_acc);
}

TEST_CASE("mean_std") {
  const std::vector<double> v{1.0, 2.0, NAN, 4.0};
  const auto [m, s] = mean_std(v);
  CHECK(m == doctest::Approx(7.0 / 3.0));
  CHECK(s == doctest::Approx(std::sqrt(((4.0 / 3) * (4.0 / 3) + (1.0 / 3) * (1.0 / 3) + (5.0 / 3) * (5.0 / 3)) / 2)));
  CHECK(mean_std(std::vector<double>{3.0}).second == 0.0);
}

TEST_CASE("fingerprint is stable FNV-1a") {
  CHECK(fingerprint_of("") == "cbf29ce484222325");
  CHECK(fingerprint_of("a") == "af63dc4c8601ec8c");
}

TEST_CASE("shrinkage LDA") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t dim = 3, n = 400;
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t label = i % 2;
    y.push_back(label);
    for (std::size_t d = 0; d < dim; ++d) x.push_back(g(rng) + (label && d == 0 ? 6.0 : 0.0));
  }
  SUBCASE("separated blobs") {
    const auto m = lda_fit(x, dim, y, 0.1);
    std::vector<double> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(m.score(std::span(x).subspan(i * dim, dim)));
    CHECK(auc(s, y) >= 0.99);
    CHECK(m.w[0] > 0.0);
  }
  SUBCASE("full shrinkage points along the mean difference") {
    const auto m = lda_fit(x, dim, y, 1.0);
    double mu[2][3] = {};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) mu[y[i]][d] += x[i * dim + d] / (n / 2.0);
    const double cos = [&] {
      double dot = 0, a = 0, b = 0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = mu[1][d] - mu[0][d];
        dot += diff * m.w[d];
        a += diff * diff;
        b += m.w[d] * m.w[d];
      }
      return dot / std::sqrt(a * b);
    }();
    CHECK(cos == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("identical class distributions are near chance") {
    std::vector<double> x0;
    for (std::size_t i = 0; i < 4000 * dim; ++i) x0.push_back(g(rng));
    std::vector<std::uint8_t> y0;
    for (std::size_t i = 0; i < 4000; ++i) y0.push_back(i % 2);
    const auto m = lda_fit(std::span(x0).first(2000 * dim), dim, std::span(y0).first(2000), 0.1);
    std::vector<double> s;
    for (std::size_t i = 2000; i < 4000; ++i) s.push_back(m.score(std::span(x0).subspan(i * dim, dim)));
    CHECK(std::abs(auc(s, std::span(y0).subspan(2000)) - 0.5) < 0.05);
  }
  SUBCASE("singular covariance without shrinkage") {
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(x[i * dim]);
      xs.push_back(2.0 * x[i * dim]);
    }
    try {
      lda_fit(xs, 2, y, 0.0);
      FAIL("expected DegenerateError");
    } catch (const DegenerateError& e) {
      CHECK(std::string(e.what()).find("shrinkage") != std::string::npos);
    }
    CHECK_NOTHROW(lda_fit(xs, 2, y, 0.2));
  }
  SUBCASE("bad shrinkage and missing class") {
    CHECK_THROWS_AS(lda_fit(x, dim, y, 1.5), ConfigError);
    std::vector<std::uint8_t> ones(n, 1);
    CHECK_THROWS_AS(lda_fit(x, dim, ones, 0.1), DegenerateError);
  }
}

TEST_CASE("lda features average non-overlapping windows") {
  Trial t;
  t.data = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(lda_features(t, 2, 4, 2) == std::vector<double>{1.5, 3.5, 5.5, 7.5});
  CHECK(lda_features(t, 2, 4, 1) == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
}
