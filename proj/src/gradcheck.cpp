#include "erpcl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "erpcl/autodiff/ops.hpp"
#include "erpcl/contrastive/loss.hpp"
#include "erpcl/model/networks.hpp"
#include "erpcl/rng.hpp"

namespace erpcl {
namespace {

using T = Tensor<double>;

T random_tensor(Rng& rng, Shape shape, bool grad = true, double scale = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal() * scale;
  return T::from(std::move(shape), std::move(v), grad);
}

// Magnitudes in [lo, 1.5] with random sign.
T away_from_zero(Rng& rng, Shape shape, double lo = 0.5) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    const double m = rng.uniform(lo, 1.5);
    x = rng.uniform() < 0.5 ? -m : m;
  }
  return T::from(std::move(shape), std::move(v), true);
}

// Contracts a tensor of any shape with fixed random weights into a scalar.
T probe(Tape<double>& tape, const T& out, const T& weights) { return ops::sum(tape, ops::mul(tape, out, weights)); }

}  // namespace

GradcheckResult gradcheck(const std::string& name, const ScalarFn& fn, std::vector<T> inputs,
                          const GradcheckOptions& options) {
  GradcheckResult result;
  result.name = name;
  for (auto& x : inputs) x.zero_grad();
  {
    Tape<double> tape;
    const T loss = fn(tape);
    tape.backward(loss);
  }
  for (std::size_t xi = 0; xi < inputs.size(); ++xi) {
    auto& x = inputs[xi];
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    auto data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + options.step;
      Tape<double> t1;
      const double fp = fn(t1).item();
      data[i] = orig - options.step;
      Tape<double> t2;
      const double fm = fn(t2).item();
      data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      double err = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      if (!std::isfinite(err)) err = INFINITY;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = xi;
        result.worst_index = i;
      }
      ++result.n_checked;
    }
  }
  result.passed = result.n_checked > 0 && result.max_rel_error < options.tolerance;
  return result;
}

std::vector<GradcheckResult> gradcheck_suite(std::uint64_t seed, const GradcheckOptions& options) {
  Rng rng(derive_seed(seed, 41));
  std::vector<GradcheckResult> out;

  {
    auto x = random_tensor(rng, {3, 10});
    auto k = random_tensor(rng, {2, 5});
    auto b = random_tensor(rng, {2});
    auto w = random_tensor(rng, {6, 10}, false);
    out.push_back(gradcheck(
        "conv1d_same (odd kernel)", [&](Tape<double>& t) { return probe(t, ops::conv1d_same(t, x, k, std::optional<T>(b)), w); },
        {x, k, b}, options));
  }
  {
    auto x = random_tensor(rng, {2, 9});
    auto k = random_tensor(rng, {3, 4});
    auto w = random_tensor(rng, {6, 9}, false);
    out.push_back(gradcheck(
        "conv1d_same (even kernel)", [&](Tape<double>& t) { return probe(t, ops::conv1d_same(t, x, k), w); },
        {x, k}, options));
  }
  {
    auto x = random_tensor(rng, {3, 8});
    auto k = random_tensor(rng, {2, 3, 4});
    auto b = random_tensor(rng, {2});
    auto w = random_tensor(rng, {2, 8}, false);
    out.push_back(gradcheck(
        "conv1d", [&](Tape<double>& t) { return probe(t, ops::conv1d(t, x, k, b), w); }, {x, k, b}, options));
  }
  {
    auto x = random_tensor(rng, {4, 7});
    auto c = random_tensor(rng, {4});
    auto w = random_tensor(rng, {1, 7}, false);
    out.push_back(gradcheck(
        "channel_collapse", [&](Tape<double>& t) { return probe(t, ops::channel_collapse(t, x, c), w); }, {x, c},
        options));
  }
  {
    auto x = random_tensor(rng, {6, 5});
    auto g = random_tensor(rng, {2, 3});
    auto w = random_tensor(rng, {2, 5}, false);
    out.push_back(gradcheck(
        "grouped_collapse", [&](Tape<double>& t) { return probe(t, ops::grouped_collapse(t, x, g), w); }, {x, g},
        options));
  }
  {
    auto x = random_tensor(rng, {3, 10});
    auto w = random_tensor(rng, {3, 3}, false);
    out.push_back(gradcheck(
        "avg_pool_time", [&](Tape<double>& t) { return probe(t, ops::avg_pool_time(t, x, 3), w); }, {x}, options));
  }
  {
    // The second derivative of ELU jumps at zero.
    auto x = away_from_zero(rng, {3, 6}, 0.2);
    auto w = random_tensor(rng, {3, 6}, false);
    out.push_back(
        gradcheck("elu", [&](Tape<double>& t) { return probe(t, ops::elu(t, x), w); }, {x}, options));
  }
  {
    auto x = random_tensor(rng, {4, 6});
    auto w = random_tensor(rng, {4, 6}, false);
    const std::uint64_t mask_seed = rng.next();
    out.push_back(gradcheck(
        "dropout",
        [&](Tape<double>& t) {
          std::mt19937_64 r(mask_seed);
          return probe(t, ops::dropout(t, x, 0.25, r), w);
        },
        {x}, options));
  }
  {
    auto x = random_tensor(rng, {5, 4});
    auto gamma = random_tensor(rng, {4});
    auto beta = random_tensor(rng, {4});
    auto w = random_tensor(rng, {5, 4}, false);
    out.push_back(gradcheck(
        "batch_norm (batch)",
        [&](Tape<double>& t) {
          auto state = ops::BatchNormState<double>::init(4);
          return probe(t, ops::batch_norm(t, x, gamma, beta, state, ops::NormMode::batch), w);
        },
        {x, gamma, beta}, options));
  }
  {
    auto x = random_tensor(rng, {3, 4});
    auto gamma = random_tensor(rng, {4});
    auto beta = random_tensor(rng, {4});
    auto w = random_tensor(rng, {3, 4}, false);
    auto state = ops::BatchNormState<double>::init(4);
    for (std::size_t i = 0; i < 4; ++i) {
      state.running_mean[i] = rng.normal();
      state.running_var[i] = rng.uniform(0.5, 2.0);
    }
    out.push_back(gradcheck(
        "batch_norm (running)",
        [&](Tape<double>& t) { return probe(t, ops::batch_norm(t, x, gamma, beta, state, ops::NormMode::running), w); },
        {x, gamma, beta}, options));
  }
  {
    auto x = random_tensor(rng, {2, 3});
    auto dw = random_tensor(rng, {6, 2});
    auto db = random_tensor(rng, {2});
    auto w = random_tensor(rng, {2}, false);
    out.push_back(gradcheck(
        "dense", [&](Tape<double>& t) { return probe(t, ops::dense(t, x, dw, db), w); }, {x, dw, db}, options));
  }
  {
    auto a = random_tensor(rng, {2, 3});
    auto b = random_tensor(rng, {2, 3});
    auto w = random_tensor(rng, {2, 2, 3}, false);
    out.push_back(gradcheck(
        "stack", [&](Tape<double>& t) { return probe(t, ops::stack(t, std::vector<T>{a, b}), w); }, {a, b}, options));
  }
  {
    auto a = random_tensor(rng, {2, 3});
    auto b = random_tensor(rng, {1, 3});
    auto w = random_tensor(rng, {3, 3}, false);
    out.push_back(gradcheck(
        "concat_rows", [&](Tape<double>& t) { return probe(t, ops::concat_rows(t, std::vector<T>{a, b}), w); },
        {a, b}, options));
  }
  {
    auto x = random_tensor(rng, {3, 4});
    auto w = random_tensor(rng, {4}, false);
    out.push_back(gradcheck(
        "select", [&](Tape<double>& t) { return probe(t, ops::select(t, x, 1), w); }, {x}, options));
  }
  {
    auto x = random_tensor(rng, {3, 4});
    auto w = random_tensor(rng, {2, 6}, false);
    out.push_back(gradcheck(
        "reshape", [&](Tape<double>& t) { return probe(t, ops::reshape(t, x, Shape{2, 6}), w); }, {x}, options));
  }
  {
    auto x = random_tensor(rng, {3, 4});
    out.push_back(gradcheck("sum", [&](Tape<double>& t) { return ops::sum(t, x); }, {x}, options));
  }
  {
    auto a = random_tensor(rng, {5});
    auto b = random_tensor(rng, {5});
    auto w = random_tensor(rng, {5}, false);
    out.push_back(gradcheck(
        "add", [&](Tape<double>& t) { return probe(t, ops::add(t, a, b), w); }, {a, b}, options));
    out.push_back(gradcheck(
        "mul", [&](Tape<double>& t) { return probe(t, ops::mul(t, a, b), w); }, {a, b}, options));
    out.push_back(gradcheck(
        "scale", [&](Tape<double>& t) { return probe(t, ops::scale(t, a, -1.7), w); }, {a}, options));
  }
  {
    auto a = random_tensor(rng, {2, 4});
    auto b = random_tensor(rng, {2, 4});
    out.push_back(gradcheck("cosine_sim", [&](Tape<double>& t) { return ops::cosine_sim(t, a, b); }, {a, b}, options));
  }
  {
    auto s = random_tensor(rng, {6}, true, 0.5);
    out.push_back(gradcheck(
        "softmax_xent", [&](Tape<double>& t) { return ops::softmax_xent(t, s, 2, 0.5); }, {s}, options));
  }
  {
    auto z = random_tensor(rng, {}, true, 2.0);
    out.push_back(gradcheck(
        "bce_with_logits (label 1)", [&](Tape<double>& t) { return ops::bce_with_logits(t, z, 1.0); }, {z},
        options));
    out.push_back(gradcheck(
        "bce_with_logits (label 0)", [&](Tape<double>& t) { return ops::bce_with_logits(t, z, 0.0); }, {z},
        options));
  }
  {
    std::vector<T> embeddings;
    for (int i = 0; i < 6; ++i) embeddings.push_back(random_tensor(rng, {5}));
    out.push_back(gradcheck(
        "contrastive batch_loss",
        [&](Tape<double>& t) {
          contrastive::PairEmbeddings<double> batch;
          batch.a = {{embeddings[0], true}, {embeddings[1], false}, {embeddings[2], false}};
          batch.b = {{embeddings[3], true}, {embeddings[4], false}, {embeddings[5], false}};
          return contrastive::batch_loss(t, batch, contrastive::LossConfig{});
        },
        embeddings, options));
  }

  const ModelConfig config = ModelConfig::reduced();
  const Shape input_shape{config.encoder.n_channels, config.encoder.n_samples};
  {
    auto params = init_params<double>(config, derive_seed(seed, 42));
    // Batch norm is scale invariant in the weights feeding it: a near-zero tap
    // pushes a feature's batch variance below eps, where the loss bends too sharply
    // for h = 1e-3. Draw every weight with magnitude in [0.5, 1.5] instead.
    for (auto& p : params.all_params()) {
      auto bounded = away_from_zero(rng, p.tensor.shape());
      std::copy(bounded.data().begin(), bounded.data().end(), p.tensor.mutable_data().begin());
    }
    std::vector<T> xs;
    for (int i = 0; i < 6; ++i) xs.push_back(random_tensor(rng, input_shape, false));
    const std::uint64_t dropout_seed = rng.next();
    std::vector<T> inputs;
    for (auto& p : params.all_params()) inputs.push_back(p.tensor);
    out.push_back(gradcheck(
        "end-to-end contrastive",
        [&](Tape<double>& t) {
          std::mt19937_64 r(dropout_seed);
          std::vector<T> h;
          for (auto& x : xs) h.push_back(encoder_forward(t, params, x));
          auto z = projector_forward(t, params, h, ForwardMode::train(r));
          contrastive::PairEmbeddings<double> batch;
          batch.a = {{z[0], true}, {z[1], false}, {z[2], false}};
          batch.b = {{z[3], true}, {z[4], false}, {z[5], false}};
          return contrastive::batch_loss(t, batch, contrastive::LossConfig{});
        },
        inputs, options));
  }
  {
    auto params = init_params<double>(config, derive_seed(seed, 43));
    auto x = random_tensor(rng, input_shape, false);
    std::vector<T> inputs;
    for (auto& p : params.encoder_params()) inputs.push_back(p.tensor);
    for (auto& p : params.classifier_params()) inputs.push_back(p.tensor);
    out.push_back(gradcheck(
        "end-to-end bce",
        [&](Tape<double>& t) {
          auto logit = classifier_forward(t, params, encoder_forward(t, params, x));
          return ops::bce_with_logits(t, logit, 1.0);
        },
        inputs, options));
  }
  return out;
}

std::string format_gradcheck_table(const std::vector<GradcheckResult>& results) {
  std::string s;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %8s %14s  %s\n", "check", "grads", "max_rel_err", "status");
  s += line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-28s %8zu %14.3e  %s\n", r.name.c_str(), r.n_checked, r.max_rel_error,
                  r.passed ? "ok" : "FAIL");
    s += line;
  }
  return s;
}

}  // namespace erpcl
