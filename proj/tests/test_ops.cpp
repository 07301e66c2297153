#include <doctest.h>

#include <cmath>
#include <random>

#include "erpcl/autodiff/ops.hpp"
#include "erpcl/error.hpp"
#include "erpcl/rng.hpp"

using namespace erpcl;
using T = Tensor<double>;

namespace {

T randn(Rng& rng, Shape shape, bool grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return T::from(std::move(shape), std::move(v), grad);
}

// Zero-padded cross-correlation, left pad (P-1)/2.
std::vector<double> correlate_same(const std::vector<double>& x, const std::vector<double>& k) {
  const long n = static_cast<long>(x.size()), p = static_cast<long>(k.size());
  const long pad = (p - 1) / 2;
  std::vector<double> y(x.size(), 0.0);
  for (long t = 0; t < n; ++t)
    for (long j = 0; j < p; ++j) {
      const long src = t + j - pad;
      if (src >= 0 && src < n) y[static_cast<std::size_t>(t)] += k[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(src)];
    }
  return y;
}

std::vector<double> row(const T& t, std::size_t r) {
  const std::size_t n = t.dim(1);
  return {t.data().begin() + static_cast<long>(r * n), t.data().begin() + static_cast<long>((r + 1) * n)};
}

}  // namespace

TEST_CASE("conv1d_same matches a direct correlation loop") {
  Rng rng(1);
  Tape<double> tape;
  for (std::size_t p : {1, 2, 3, 4, 7, 12}) {
    CAPTURE(p);
    auto x = randn(rng, {3, 10});
    auto k = randn(rng, {2, p});
    auto b = randn(rng, {2});
    auto y = ops::conv1d_same(tape, x, k, std::optional<T>(b));
    REQUIRE(y.shape() == Shape{6, 10});
    for (std::size_t kk = 0; kk < 2; ++kk)
      for (std::size_t c = 0; c < 3; ++c) {
        const auto ref = correlate_same(row(x, c), row(k, kk));
        const auto got = row(y, kk * 3 + c);
        for (std::size_t t = 0; t < 10; ++t) CHECK(got[t] == doctest::Approx(ref[t] + b.at(kk)));
      }
  }
}

TEST_CASE("even kernels put the extra zero on the right") {
  Tape<double> tape;
  // Kernel [0, 1] with left pad 0 reads x[t+1]: a left shift.
  auto x = T::from({1, 4}, {1, 2, 3, 4});
  auto k = T::from({1, 2}, {0, 1});
  auto y = ops::conv1d_same(tape, x, k);
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) == std::vector<double>{2, 3, 4, 0});
  // Kernel [1, 0, 0] with left pad 1 reads x[t-1]: a right shift.
  auto k3 = T::from({1, 3}, {1, 0, 0});
  auto y3 = ops::conv1d_same(tape, x, k3);
  CHECK(std::vector<double>(y3.data().begin(), y3.data().end()) == std::vector<double>{0, 1, 2, 3});
}

TEST_CASE("conv1d_same rejects empty kernels and tolerates long ones") {
  Tape<double> tape;
  auto x = T::from({1, 3}, {1, 2, 3});
  CHECK_THROWS_AS(ops::conv1d_same(tape, x, T::zeros({1, 0})), ShapeError);
  auto y = ops::conv1d_same(tape, x, T::full({1, 5}, 1.0));
  CHECK(y.numel() == 3);
  CHECK(y.at(1) == doctest::Approx(6.0));
}

TEST_CASE("conv1d sums per-channel correlations") {
  Rng rng(2);
  Tape<double> tape;
  auto x = randn(rng, {3, 9});
  auto w = randn(rng, {2, 3, 4});
  auto b = randn(rng, {2});
  auto y = ops::conv1d(tape, x, w, b);
  REQUIRE(y.shape() == Shape{2, 9});
  for (std::size_t f = 0; f < 2; ++f) {
    std::vector<double> ref(9, b.at(f));
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> k(w.data().begin() + static_cast<long>((f * 3 + c) * 4),
                            w.data().begin() + static_cast<long>((f * 3 + c + 1) * 4));
      const auto part = correlate_same(row(x, c), k);
      for (std::size_t t = 0; t < 9; ++t) ref[t] += part[t];
    }
    for (std::size_t t = 0; t < 9; ++t) CHECK(y.at(f, t) == doctest::Approx(ref[t]));
  }
  CHECK_THROWS_AS(ops::conv1d(tape, x, randn(rng, {2, 2, 4}), b), ShapeError);
}

TEST_CASE("channel and grouped collapse") {
  Tape<double> tape;
  auto x = T::from({2, 3}, {1, 2, 3, 10, 20, 30});
  auto y = ops::channel_collapse(tape, x, T::from({2}, {2, -1}));
  CHECK(y.shape() == Shape{1, 3});
  CHECK(y.at(0, 2) == -24.0);

  auto x4 = T::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  auto g = ops::grouped_collapse(tape, x4, T::from({2, 2}, {1, 1, 1, -1}));
  CHECK(g.shape() == Shape{2, 2});
  CHECK(g.at(0, 0) == 4.0);  // 1 + 3
  CHECK(g.at(1, 1) == -2.0);  // 6 - 8
  CHECK_THROWS_AS(ops::grouped_collapse(tape, x4, T::zeros({3, 2})), ShapeError);
}

TEST_CASE("avg_pool_time drops the tail and rejects empty windows") {
  Tape<double> tape;
  auto x = T::from({1, 7}, {1, 3, 5, 7, 9, 11, 100});
  auto y = ops::avg_pool_time(tape, x, 3);
  CHECK(y.shape() == Shape{1, 2});
  CHECK(y.at(0, 0) == 3.0);
  CHECK(y.at(0, 1) == 9.0);
  CHECK_THROWS_AS(ops::avg_pool_time(tape, x, 0), ShapeError);
  CHECK_THROWS_AS(ops::avg_pool_time(tape, x, 8), ShapeError);
}

TEST_CASE("elu") {
  Tape<double> tape;
  auto y = ops::elu(tape, T::from({3}, {-1, 0, 2}));
  CHECK(y.at(0) == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(y.at(1) == 0.0);
  CHECK(y.at(2) == 2.0);
}

TEST_CASE("dropout keeps the mean and honours rate 0") {
  Tape<double> tape;
  std::mt19937_64 rng(3);
  auto x = T::full({1, 20000}, 1.0);
  auto same = ops::dropout(tape, x, 0.0, rng);
  CHECK(same.same_storage(x));
  auto y = ops::dropout(tape, x, 0.25, rng);
  double sum = 0;
  std::size_t zeros = 0;
  for (double v : y.data()) {
    sum += v;
    zeros += v == 0.0;
    if (v != 0.0) CHECK(v == doctest::Approx(1.0 / 0.75));
  }
  CHECK(sum / 20000 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(static_cast<double>(zeros) / 20000 == doctest::Approx(0.25).epsilon(0.05));
  CHECK_THROWS_AS(ops::dropout(tape, x, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(ops::dropout(tape, x, -0.1, rng), ConfigError);
}

TEST_CASE("batch_norm normalizes per feature and tracks running moments") {
  Tape<double> tape;
  auto x = T::from({4, 2}, {1, 10, 2, 20, 3, 30, 4, 40});
  auto gamma = T::from({2}, {1, 2});
  auto beta = T::from({2}, {0, 1});
  auto state = ops::BatchNormState<double>::init(2);
  auto y = ops::batch_norm(tape, x, gamma, beta, state, ops::NormMode::batch);
  // Feature 0: mean 2.5, biased variance 1.25.
  CHECK(y.at(0, 0) == doctest::Approx(-1.5 / std::sqrt(1.25 + 1e-5)));
  CHECK(y.at(3, 1) == doctest::Approx(2.0 * 15.0 / std::sqrt(125.0 + 1e-5) + 1.0));
  // Running moments: 0.9 * old + 0.1 * batch, unbiased variance.
  CHECK(state.running_mean[0] == doctest::Approx(0.25));
  CHECK(state.running_var[0] == doctest::Approx(0.9 + 0.1 * (5.0 / 3.0)));

  auto before = state.running_mean;
  auto r = ops::batch_norm(tape, x, gamma, beta, state, ops::NormMode::running);
  CHECK(state.running_mean == before);
  CHECK(r.at(0, 0) == doctest::Approx((1 - 0.25) / std::sqrt(state.running_var[0] + 1e-5)));

  CHECK_THROWS_AS(ops::batch_norm(tape, T::from({1, 2}, {1, 2}), gamma, beta, state, ops::NormMode::batch),
                  DegenerateError);
}

TEST_CASE("dense, stack, concat, select, reshape") {
  Tape<double> tape;
  auto x = T::from({2}, {1, 2});
  auto y = ops::dense(tape, x, T::from({2, 3}, {1, 0, 1, 0, 1, 1}), T::from({3}, {0, 0, 1}));
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) == std::vector<double>{1, 2, 4});

  auto s = ops::stack(tape, std::vector<T>{x, x});
  CHECK(s.shape() == Shape{2, 2});
  auto c = ops::concat_rows(tape, std::vector<T>{T::zeros({1, 3}), T::full({2, 3}, 1.0)});
  CHECK(c.shape() == Shape{3, 3});
  CHECK(c.at(2, 2) == 1.0);
  CHECK_THROWS_AS(ops::concat_rows(tape, std::vector<T>{T::zeros({1, 3}), T::zeros({1, 2})}), ShapeError);
  CHECK(ops::select(tape, c, 0).at(0) == 0.0);
  CHECK_THROWS_AS(ops::select(tape, c, 3), ShapeError);
  CHECK(ops::reshape(tape, c, Shape{9}).rank() == 1);
  CHECK_THROWS_AS(ops::reshape(tape, c, Shape{8}), ShapeError);
  CHECK(ops::flatten(tape, c).numel() == 9);
}

TEST_CASE("cosine similarity") {
  Tape<double> tape;
  auto a = T::from({2}, {1, 0});
  CHECK(ops::cosine_sim(tape, a, T::from({2}, {0, 3})).item() == doctest::Approx(0.0));
  CHECK(ops::cosine_sim(tape, a, T::from({2}, {-2, 0})).item() == doctest::Approx(-1.0));
  CHECK_THROWS_AS(ops::cosine_sim(tape, a, T::zeros({2})), DegenerateError);
}

TEST_CASE("softmax cross-entropy against the log-sum-exp formula") {
  Tape<double> tape;
  auto s = T::from({3}, {0.2, -0.5, 0.9});
  const double tau = 0.5;
  double denom = 0;
  for (double v : {0.2, -0.5, 0.9}) denom += std::exp(v / tau);
  CHECK(ops::softmax_xent(tape, s, 1, tau).item() == doctest::Approx(-std::log(std::exp(-0.5 / tau) / denom)));
  // Large similarities stay finite thanks to the max shift.
  auto big = T::from({2}, {800, 790});
  CHECK(std::isfinite(ops::softmax_xent(tape, big, 1, 1.0).item()));
  CHECK_THROWS_AS(ops::softmax_xent(tape, s, 3, tau), ShapeError);
  CHECK_THROWS_AS(ops::softmax_xent(tape, s, 0, 0.0), ConfigError);
}

TEST_CASE("binary cross-entropy with logits") {
  Tape<double> tape;
  const double z = 1.3;
  auto logit = T::scalar(z);
  CHECK(ops::bce_with_logits(tape, logit, 1.0).item() == doctest::Approx(std::log1p(std::exp(-z))));
  CHECK(ops::bce_with_logits(tape, logit, 0.0).item() == doctest::Approx(std::log1p(std::exp(z))));
  CHECK(std::isfinite(ops::bce_with_logits(tape, T::scalar(-1000.0), 1.0).item()));
  CHECK_THROWS_AS(ops::bce_with_logits(tape, logit, 0.5), ConfigError);
}
