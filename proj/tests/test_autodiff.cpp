#include <doctest.h>

#include "erpcl/autodiff/ops.hpp"
#include "erpcl/error.hpp"
#include "erpcl/gradcheck.hpp"

using namespace erpcl;
using T = Tensor<double>;

TEST_CASE("tensor factories and accessors") {
  auto z = T::zeros({2, 3});
  CHECK(z.rank() == 2);
  CHECK(z.numel() == 6);
  CHECK(z.dim(1) == 3);
  CHECK(!z.requires_grad());
  auto f = T::from({2, 2}, {1, 2, 3, 4}, true);
  CHECK(f.at(1, 0) == 3.0);
  CHECK(f.requires_grad());
  CHECK(T::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(T::from({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(f.item(), RankError);
  CHECK(shape_str({2, 3}) == "[2x3]");
}

TEST_CASE("copies alias, clone does not") {
  auto a = T::from({2}, {1, 2}, true);
  auto b = a;
  b.mutable_data()[0] = 5;
  CHECK(a.at(0) == 5);
  auto c = a.clone();
  c.mutable_data()[0] = 7;
  CHECK(a.at(0) == 5);
  CHECK(!c.same_storage(a));
}

TEST_CASE("ops on constants do not touch the tape") {
  Tape<double> tape;
  auto a = T::from({3}, {1, 2, 3});
  auto s = ops::sum(tape, ops::scale(tape, a, 2.0));
  CHECK(s.item() == 12.0);
  CHECK(tape.empty());
}

TEST_CASE("backward computes d(sum(a*b))/da = b") {
  Tape<double> tape;
  auto a = T::from({3}, {1, 2, 3}, true);
  auto b = T::from({3}, {4, 5, 6});
  auto loss = ops::sum(tape, ops::mul(tape, a, b));
  tape.backward(loss);
  CHECK(a.grad()[0] == 4.0);
  CHECK(a.grad()[2] == 6.0);
  CHECK(!b.has_grad());
}

TEST_CASE("leaf gradients accumulate across backward calls") {
  Tape<double> tape;
  auto a = T::from({2}, {1.5, -2}, true);
  auto loss = ops::sum(tape, ops::mul(tape, a, a));
  tape.backward(loss);
  const std::vector<double> once(a.grad().begin(), a.grad().end());
  tape.backward(loss);
  CHECK(a.grad()[0] == 2 * once[0]);
  CHECK(a.grad()[1] == 2 * once[1]);
  a.zero_grad();
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("shared subexpressions receive the sum of both paths") {
  Tape<double> tape;
  auto x = T::from({1}, {3}, true);
  auto y = ops::mul(tape, x, x);  // x^2
  auto loss = ops::sum(tape, ops::add(tape, y, ops::scale(tape, y, 2.0)));  // 3 x^2
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(18.0));
}

TEST_CASE("backward rejects non-scalar or foreign losses") {
  Tape<double> tape, other;
  auto a = T::from({2}, {1, 2}, true);
  auto v = ops::scale(tape, a, 2.0);
  CHECK_THROWS_AS(tape.backward(v), RankError);
  auto s = ops::sum(other, a);
  CHECK_THROWS_AS(tape.backward(s), Error);
}

TEST_CASE("gradcheck flags a wrong gradient") {
  // A deliberately broken op: forward x^2, backward claims 3x.
  auto x = T::from({2}, {0.7, -1.1}, true);
  auto broken = [&](Tape<double>& tape) {
    auto out = T::from({}, {x.at(0) * x.at(0) + x.at(1) * x.at(1)});
    tape.record(out, [x, out] {
      auto g = x.grad_buffer();
      for (std::size_t i = 0; i < 2; ++i) g[i] += out.grad()[0] * 3.0 * x.at(i);
    });
    return out;
  };
  const auto bad = gradcheck("broken", broken, {x});
  CHECK_FALSE(bad.passed);
  CHECK(bad.max_rel_error > 0.1);

  auto fine = [&](Tape<double>& tape) { return ops::sum(tape, ops::mul(tape, x, x)); };
  CHECK(gradcheck("square", fine, {x}).passed);
}
