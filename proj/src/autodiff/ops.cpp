#include "erpcl/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "erpcl/error.hpp"
#include "erpcl/log.hpp"
#include "erpcl/simd/kernels.hpp"

namespace erpcl::ops {
namespace {

using std::ptrdiff_t;
using std::size_t;

template <class T>
void require_rank(const Tensor<T>& t, size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_str(t.shape()));
  }
}

template <class T>
void require_numel(const Tensor<T>& t, size_t n, const char* what) {
  if (t.numel() != n) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + " values, got shape " +
                     shape_str(t.shape()));
  }
}

template <class T, class... Rest>
bool any_grad(const Tensor<T>& first, const Rest&... rest) {
  return (first.requires_grad() || ... || rest.requires_grad());
}

template <class T>
Tensor<T> make_out(Shape shape, std::vector<T> data, bool requires_grad) {
  return Tensor<T>::from(std::move(shape), std::move(data), requires_grad);
}

inline ptrdiff_t left_pad(size_t kernel_len) { return static_cast<ptrdiff_t>((kernel_len - 1) / 2); }

void warn_long_kernel(size_t p, size_t n) {
  log::warn("convolution kernel length " + std::to_string(p) + " exceeds signal length " +
            std::to_string(n) + "; output is dominated by padding");
}

// Row copied into dst (length len) after `lead` zeros, zero-filled behind.
template <class T>
void pad_row(const T* row, size_t n, size_t lead, T* dst, size_t len) {
  std::fill(dst, dst + lead, T(0));
  std::copy(row, row + n, dst + lead);
  std::fill(dst + lead + n, dst + len, T(0));
}

// Each of `rows` rows of length n zero-padded to n + p - 1 with `lead` zeros in front.
template <class T>
std::vector<T> pad_rows(const T* x, size_t rows, size_t n, size_t p, size_t lead) {
  const size_t len = n + p - 1;
  std::vector<T> out(rows * len);
  for (size_t r = 0; r < rows; ++r) pad_row(x + r * n, n, lead, out.data() + r * len, len);
  return out;
}

template <class T>
std::vector<T> reversed_rows(const T* w, size_t rows, size_t p) {
  std::vector<T> out(rows * p);
  for (size_t r = 0; r < rows; ++r) std::reverse_copy(w + r * p, w + (r + 1) * p, out.begin() + r * p);
  return out;
}

template <class T>
Tensor<T> collapse_impl(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, size_t groups, size_t channels) {
  const size_t n = x.dim(1);
  const auto& kt = simd::active<T>();
  std::vector<T> out(groups * n, T(0));
  const auto xd = x.data();
  const auto wd = w.data();
  for (size_t g = 0; g < groups; ++g) {
    for (size_t c = 0; c < channels; ++c) {
      kt.axpy(wd[g * channels + c], xd.data() + (g * channels + c) * n, out.data() + g * n, n);
    }
  }
  auto y = make_out<T>({groups, n}, std::move(out), any_grad(x, w));
  if (y.requires_grad()) {
    tape.record(y, [x, w, y, groups, channels, n]() mutable {
      const auto& kt = simd::active<T>();
      const auto gy = y.grad();
      const auto xd = x.data();
      const auto wd = w.data();
      if (x.requires_grad()) {
        auto gx = x.grad_buffer();
        for (size_t g = 0; g < groups; ++g)
          for (size_t c = 0; c < channels; ++c)
            kt.axpy(wd[g * channels + c], gy.data() + g * n, gx.data() + (g * channels + c) * n, n);
      }
      if (w.requires_grad()) {
        auto gw = w.grad_buffer();
        for (size_t g = 0; g < groups; ++g)
          for (size_t c = 0; c < channels; ++c)
            gw[g * channels + c] += kt.dot(gy.data() + g * n, xd.data() + (g * channels + c) * n, n);
      }
    });
  }
  return y;
}

}  // namespace

template <class T>
Tensor<T> conv1d_same(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& kernels,
                      const std::optional<Tensor<T>>& bias) {
  require_rank(x, 2, "conv1d_same input");
  require_rank(kernels, 2, "conv1d_same kernels");
  const size_t c_in = x.dim(0);
  const size_t n = x.dim(1);
  const size_t k_out = kernels.dim(0);
  const size_t p_len = kernels.dim(1);
  if (p_len == 0) throw ShapeError("conv1d_same: kernel length must be >= 1");
  if (bias) require_numel(*bias, k_out, "conv1d_same bias");
  if (p_len > n) warn_long_kernel(p_len, n);

  const auto& kt = simd::active<T>();
  const size_t pad = static_cast<size_t>(left_pad(p_len));
  const size_t len = n + p_len - 1;
  const auto xp = pad_rows(x.data().data(), c_in, n, p_len, pad);
  std::vector<T> out(k_out * c_in * n, T(0));
  const auto kd = kernels.data();
  for (size_t k = 0; k < k_out; ++k) {
    for (size_t c = 0; c < c_in; ++c) {
      T* row = out.data() + (k * c_in + c) * n;
      if (bias) std::fill(row, row + n, bias->at(k));
      kt.correlate(xp.data() + c * len, kd.data() + k * p_len, p_len, row, n);
    }
  }
  const bool needs = any_grad(x, kernels) || (bias && bias->requires_grad());
  auto y = make_out<T>({k_out * c_in, n}, std::move(out), needs);
  if (needs) {
    tape.record(y, [x, kernels, bias, y, c_in, n, k_out, p_len, pad, len]() mutable {
      const auto& kt = simd::active<T>();
      const auto gy = y.grad();
      const auto kd = kernels.data();
      const auto xp = kernels.requires_grad() ? pad_rows(x.data().data(), c_in, n, p_len, pad) : std::vector<T>{};
      const auto kr = reversed_rows(kd.data(), k_out, p_len);
      std::vector<T> gp(len);
      for (size_t k = 0; k < k_out; ++k) {
        for (size_t c = 0; c < c_in; ++c) {
          const T* grow = gy.data() + (k * c_in + c) * n;
          if (x.requires_grad()) {
            pad_row(grow, n, p_len - 1 - pad, gp.data(), len);
            kt.correlate(gp.data(), kr.data() + k * p_len, p_len, x.grad_buffer().data() + c * n, n);
          }
          if (kernels.requires_grad())
            kt.correlate_grad(grow, xp.data() + c * len, n, kernels.grad_buffer().data() + k * p_len, p_len);
          if (bias && bias->requires_grad()) bias->grad_buffer()[k] += kt.sum(grow, n);
        }
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> conv1d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  require_rank(x, 2, "conv1d input");
  require_rank(w, 3, "conv1d weights");
  const size_t c_in = x.dim(0);
  const size_t n = x.dim(1);
  const size_t f_out = w.dim(0);
  const size_t p_len = w.dim(2);
  if (w.dim(1) != c_in) {
    throw ShapeError("conv1d: weights " + shape_str(w.shape()) + " do not match input " + shape_str(x.shape()));
  }
  if (p_len == 0) throw ShapeError("conv1d: kernel length must be >= 1");
  require_numel(bias, f_out, "conv1d bias");
  if (p_len > n) warn_long_kernel(p_len, n);

  const auto& kt = simd::active<T>();
  const size_t pad = static_cast<size_t>(left_pad(p_len));
  const size_t len = n + p_len - 1;
  const auto xp = pad_rows(x.data().data(), c_in, n, p_len, pad);
  std::vector<T> out(f_out * n);
  const auto wd = w.data();
  for (size_t f = 0; f < f_out; ++f) {
    T* row = out.data() + f * n;
    std::fill(row, row + n, bias.at(f));
    for (size_t c = 0; c < c_in; ++c) kt.correlate(xp.data() + c * len, wd.data() + (f * c_in + c) * p_len, p_len, row, n);
  }
  auto y = make_out<T>({f_out, n}, std::move(out), any_grad(x, w, bias));
  if (y.requires_grad()) {
    tape.record(y, [x, w, bias, y, c_in, n, f_out, p_len, pad, len]() mutable {
      const auto& kt = simd::active<T>();
      const auto gy = y.grad();
      const auto xp = w.requires_grad() ? pad_rows(x.data().data(), c_in, n, p_len, pad) : std::vector<T>{};
      const auto wr = x.requires_grad() ? reversed_rows(w.data().data(), f_out * c_in, p_len) : std::vector<T>{};
      std::vector<T> gp(len);
      for (size_t f = 0; f < f_out; ++f) {
        const T* grow = gy.data() + f * n;
        if (x.requires_grad()) pad_row(grow, n, p_len - 1 - pad, gp.data(), len);
        for (size_t c = 0; c < c_in; ++c) {
          const size_t base = (f * c_in + c) * p_len;
          if (x.requires_grad()) kt.correlate(gp.data(), wr.data() + base, p_len, x.grad_buffer().data() + c * n, n);
          if (w.requires_grad()) kt.correlate_grad(grow, xp.data() + c * len, n, w.grad_buffer().data() + base, p_len);
        }
        if (bias.requires_grad()) bias.grad_buffer()[f] += kt.sum(grow, n);
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> channel_collapse(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& weights) {
  require_rank(x, 2, "channel_collapse input");
  require_numel(weights, x.dim(0), "channel_collapse weights");
  return collapse_impl(tape, x, weights, 1, x.dim(0));
}

template <class T>
Tensor<T> grouped_collapse(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& weights) {
  require_rank(x, 2, "grouped_collapse input");
  require_rank(weights, 2, "grouped_collapse weights");
  const size_t groups = weights.dim(0);
  const size_t channels = weights.dim(1);
  if (groups * channels != x.dim(0)) {
    throw ShapeError("grouped_collapse: weights " + shape_str(weights.shape()) + " do not match input " +
                     shape_str(x.shape()));
  }
  return collapse_impl(tape, x, weights, groups, channels);
}

template <class T>
Tensor<T> avg_pool_time(Tape<T>& tape, const Tensor<T>& x, size_t window) {
  require_rank(x, 2, "avg_pool_time input");
  if (window == 0) throw ShapeError("avg_pool_time: window must be >= 1");
  const size_t rows = x.dim(0);
  const size_t n = x.dim(1);
  if (window > n) {
    throw ShapeError("avg_pool_time: window " + std::to_string(window) + " exceeds time length " +
                     std::to_string(n) + " (empty time axis)");
  }
  const size_t n_out = n / window;
  const T inv = T(1) / static_cast<T>(window);
  std::vector<T> out(rows * n_out);
  const auto xd = x.data();
  for (size_t r = 0; r < rows; ++r) {
    for (size_t j = 0; j < n_out; ++j) {
      T acc = 0;
      for (size_t i = 0; i < window; ++i) acc += xd[r * n + j * window + i];
      out[r * n_out + j] = acc * inv;
    }
  }
  auto y = make_out<T>({rows, n_out}, std::move(out), x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y, rows, n, n_out, window, inv]() mutable {
      const auto gy = y.grad();
      auto gx = x.grad_buffer();
      for (size_t r = 0; r < rows; ++r)
        for (size_t j = 0; j < n_out; ++j)
          for (size_t i = 0; i < window; ++i) gx[r * n + j * window + i] += gy[r * n_out + j] * inv;
    });
  }
  return y;
}

template <class T>
Tensor<T> elu(Tape<T>& tape, const Tensor<T>& x) {
  const auto xd = x.data();
  std::vector<T> out(xd.size());
  for (size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : std::expm1(xd[i]);
  auto y = make_out<T>(x.shape(), std::move(out), x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y]() mutable {
      const auto gy = y.grad();
      const auto xd = x.data();
      const auto yd = y.data();
      auto gx = x.grad_buffer();
      for (size_t i = 0; i < xd.size(); ++i) gx[i] += gy[i] * (xd[i] > T(0) ? T(1) : yd[i] + T(1));
    });
  }
  return y;
}

template <class T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& x, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (rate == 0.0) return x;
  const double keep = 1.0 - rate;
  const T gain = static_cast<T>(1.0 / keep);
  const auto xd = x.data();
  std::vector<T> mask(xd.size());
  for (auto& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < keep ? gain : T(0);
  }
  std::vector<T> out(xd.size());
  for (size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] * mask[i];
  auto y = make_out<T>(x.shape(), std::move(out), x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y, mask = std::move(mask)]() mutable {
      const auto gy = y.grad();
      auto gx = x.grad_buffer();
      for (size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
    });
  }
  return y;
}

template <class T>
BatchNormState<T> BatchNormState<T>::init(size_t features) {
  BatchNormState s;
  s.running_mean.assign(features, T(0));
  s.running_var.assign(features, T(1));
  return s;
}

template <class T>
Tensor<T> batch_norm(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, NormMode mode) {
  require_rank(x, 2, "batch_norm input");
  const size_t batch = x.dim(0);
  const size_t feats = x.dim(1);
  require_numel(gamma, feats, "batch_norm gamma");
  require_numel(beta, feats, "batch_norm beta");
  if (state.running_mean.size() != feats || state.running_var.size() != feats) {
    throw ShapeError("batch_norm: running moments hold " + std::to_string(state.running_mean.size()) +
                     " features, input has " + std::to_string(feats));
  }
  if (mode == NormMode::batch && batch < 2) {
    throw DegenerateError("batch_norm: batch statistics need at least 2 samples, got " + std::to_string(batch));
  }

  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  std::vector<T> inv_std(feats);
  std::vector<T> xhat(batch * feats);
  std::vector<T> out(batch * feats);

  for (size_t f = 0; f < feats; ++f) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == NormMode::batch) {
      for (size_t b = 0; b < batch; ++b) mean += xd[b * feats + f];
      mean /= static_cast<double>(batch);
      for (size_t b = 0; b < batch; ++b) {
        const double d = xd[b * feats + f] - mean;
        var += d * d;
      }
      const double biased = var / static_cast<double>(batch);
      const double unbiased = var / static_cast<double>(batch - 1);
      var = biased;
      state.running_mean[f] = static_cast<T>(state.momentum * state.running_mean[f] + (1.0 - state.momentum) * mean);
      state.running_var[f] = static_cast<T>(state.momentum * state.running_var[f] + (1.0 - state.momentum) * unbiased);
    } else {
      mean = state.running_mean[f];
      var = state.running_var[f];
    }
    const double is = 1.0 / std::sqrt(var + state.eps);
    inv_std[f] = static_cast<T>(is);
    for (size_t b = 0; b < batch; ++b) {
      const size_t i = b * feats + f;
      xhat[i] = static_cast<T>((xd[i] - mean) * is);
      out[i] = gd[f] * xhat[i] + bd[f];
    }
  }

  auto y = make_out<T>(x.shape(), std::move(out), any_grad(x, gamma, beta));
  if (y.requires_grad()) {
    tape.record(y, [x, gamma, beta, y, xhat = std::move(xhat), inv_std = std::move(inv_std), batch, feats,
                    mode]() mutable {
      const auto gy = y.grad();
      const auto gd = gamma.data();
      for (size_t f = 0; f < feats; ++f) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (size_t b = 0; b < batch; ++b) {
          const size_t i = b * feats + f;
          sum_g += gy[i];
          sum_gx += static_cast<double>(gy[i]) * xhat[i];
        }
        if (gamma.requires_grad()) gamma.grad_buffer()[f] += static_cast<T>(sum_gx);
        if (beta.requires_grad()) beta.grad_buffer()[f] += static_cast<T>(sum_g);
        if (!x.requires_grad()) continue;
        auto gx = x.grad_buffer();
        const double scale = static_cast<double>(gd[f]) * inv_std[f];
        if (mode == NormMode::batch) {
          const double nb = static_cast<double>(batch);
          for (size_t b = 0; b < batch; ++b) {
            const size_t i = b * feats + f;
            gx[i] += static_cast<T>(scale / nb * (nb * gy[i] - sum_g - xhat[i] * sum_gx));
          }
        } else {
          for (size_t b = 0; b < batch; ++b) {
            const size_t i = b * feats + f;
            gx[i] += static_cast<T>(scale * gy[i]);
          }
        }
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> dense(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(w, 2, "dense weights");
  const size_t f_in = w.dim(0);
  const size_t f_out = w.dim(1);
  require_numel(x, f_in, "dense input");
  require_numel(b, f_out, "dense bias");
  const auto& kt = simd::active<T>();
  const auto xd = x.data();
  const auto wd = w.data();
  std::vector<T> out(b.data().begin(), b.data().end());
  for (size_t f = 0; f < f_in; ++f) kt.axpy(xd[f], wd.data() + f * f_out, out.data(), f_out);
  auto y = make_out<T>({f_out}, std::move(out), any_grad(x, w, b));
  if (y.requires_grad()) {
    tape.record(y, [x, w, b, y, f_in, f_out]() mutable {
      const auto& kt = simd::active<T>();
      const auto gy = y.grad();
      const auto xd = x.data();
      const auto wd = w.data();
      if (x.requires_grad()) {
        auto gx = x.grad_buffer();
        for (size_t f = 0; f < f_in; ++f) gx[f] += kt.dot(wd.data() + f * f_out, gy.data(), f_out);
      }
      if (w.requires_grad()) {
        auto gw = w.grad_buffer();
        for (size_t f = 0; f < f_in; ++f) kt.axpy(xd[f], gy.data(), gw.data() + f * f_out, f_out);
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (size_t o = 0; o < f_out; ++o) gb[o] += gy[o];
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> stack(Tape<T>& tape, const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw ShapeError("stack: no inputs");
  const Shape& inner = xs.front().shape();
  const size_t per = xs.front().numel();
  std::vector<T> out;
  out.reserve(per * xs.size());
  bool needs = false;
  for (const auto& t : xs) {
    if (t.shape() != inner) {
      throw ShapeError("stack: shape " + shape_str(t.shape()) + " differs from " + shape_str(inner));
    }
    out.insert(out.end(), t.data().begin(), t.data().end());
    needs = needs || t.requires_grad();
  }
  Shape shape{xs.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  auto y = make_out<T>(std::move(shape), std::move(out), needs);
  if (needs) {
    tape.record(y, [xs, y, per]() mutable {
      const auto gy = y.grad();
      for (size_t k = 0; k < xs.size(); ++k) {
        if (!xs[k].requires_grad()) continue;
        auto gx = xs[k].grad_buffer();
        for (size_t i = 0; i < per; ++i) gx[i] += gy[k * per + i];
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> concat_rows(Tape<T>& tape, const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_rows: no inputs");
  if (xs.front().rank() == 0) throw ShapeError("concat_rows: scalar input");
  const Shape tail(xs.front().shape().begin() + 1, xs.front().shape().end());
  size_t rows = 0;
  bool needs = false;
  std::vector<T> out;
  for (const auto& t : xs) {
    if (t.rank() == 0 || !std::equal(tail.begin(), tail.end(), t.shape().begin() + 1, t.shape().end())) {
      throw ShapeError("concat_rows: shape " + shape_str(t.shape()) + " incompatible with trailing dims " +
                       shape_str(tail));
    }
    rows += t.dim(0);
    out.insert(out.end(), t.data().begin(), t.data().end());
    needs = needs || t.requires_grad();
  }
  Shape shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  auto y = make_out<T>(std::move(shape), std::move(out), needs);
  if (needs) {
    tape.record(y, [xs, y]() mutable {
      const auto gy = y.grad();
      size_t offset = 0;
      for (auto& t : xs) {
        if (t.requires_grad()) {
          auto gx = t.grad_buffer();
          for (size_t i = 0; i < gx.size(); ++i) gx[i] += gy[offset + i];
        }
        offset += t.numel();
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> select(Tape<T>& tape, const Tensor<T>& x, size_t i) {
  if (x.rank() == 0) throw RankError("select: scalar input");
  if (i >= x.dim(0)) {
    throw ShapeError("select: index " + std::to_string(i) + " out of range for shape " + shape_str(x.shape()));
  }
  const Shape tail(x.shape().begin() + 1, x.shape().end());
  const size_t per = shape_numel(tail);
  const auto xd = x.data();
  std::vector<T> out(xd.begin() + i * per, xd.begin() + (i + 1) * per);
  auto y = make_out<T>(tail, std::move(out), x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y, i, per]() mutable {
      const auto gy = y.grad();
      auto gx = x.grad_buffer();
      for (size_t j = 0; j < per; ++j) gx[i * per + j] += gy[j];
    });
  }
  return y;
}

template <class T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  auto y = make_out<T>(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()), x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y]() mutable {
      const auto gy = y.grad();
      auto gx = x.grad_buffer();
      for (size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

template <class T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  auto y = make_out<T>({}, {static_cast<T>(acc)}, x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y]() mutable {
      const T g = y.grad()[0];
      for (auto& v : x.grad_buffer()) v += g;
    });
  }
  return y;
}

template <class T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  std::vector<T> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  auto y = make_out<T>(a.shape(), std::move(out), any_grad(a, b));
  if (y.requires_grad()) {
    tape.record(y, [a, b, y]() mutable {
      const auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  std::vector<T> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  auto y = make_out<T>(a.shape(), std::move(out), any_grad(a, b));
  if (y.requires_grad()) {
    tape.record(y, [a, b, y]() mutable {
      const auto& kt = simd::active<T>();
      const auto gy = y.grad();
      if (a.requires_grad()) kt.fma(gy.data(), b.data().data(), a.grad_buffer().data(), gy.size());
      if (b.requires_grad()) kt.fma(gy.data(), a.data().data(), b.grad_buffer().data(), gy.size());
    });
  }
  return y;
}

template <class T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T factor) {
  std::vector<T> out(x.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * factor;
  auto y = make_out<T>(x.shape(), std::move(out), x.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [x, y, factor]() mutable {
      const auto gy = y.grad();
      simd::active<T>().axpy(factor, gy.data(), x.grad_buffer().data(), gy.size());
    });
  }
  return y;
}

template <class T>
Tensor<T> cosine_sim(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.numel() != b.numel()) {
    throw ShapeError("cosine_sim: lengths " + std::to_string(a.numel()) + " and " + std::to_string(b.numel()) +
                     " differ");
  }
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  const auto ad = a.data();
  const auto bd = b.data();
  for (size_t i = 0; i < ad.size(); ++i) {
    ab += static_cast<double>(ad[i]) * bd[i];
    aa += static_cast<double>(ad[i]) * ad[i];
    bb += static_cast<double>(bd[i]) * bd[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DegenerateError("cosine_sim: zero-norm vector");
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  const double s = ab / (na * nb);
  auto y = make_out<T>({}, {static_cast<T>(s)}, any_grad(a, b));
  if (y.requires_grad()) {
    tape.record(y, [a, b, y, na, nb, s]() mutable {
      const double g = y.grad()[0];
      const auto ad = a.data();
      const auto bd = b.data();
      const double inv_ab = 1.0 / (na * nb);
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (size_t i = 0; i < ad.size(); ++i) ga[i] += static_cast<T>(g * (bd[i] * inv_ab - s * ad[i] / (na * na)));
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (size_t i = 0; i < bd.size(); ++i) gb[i] += static_cast<T>(g * (ad[i] * inv_ab - s * bd[i] / (nb * nb)));
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> softmax_xent(Tape<T>& tape, const Tensor<T>& sims, size_t positive, double tau) {
  if (!(tau > 0.0)) throw ConfigError("softmax_xent: temperature must be > 0");
  const size_t n = sims.numel();
  if (n == 0) throw ShapeError("softmax_xent: no candidates");
  if (positive >= n) throw ShapeError("softmax_xent: positive index out of range");
  const auto sd = sims.data();
  double zmax = -INFINITY;
  for (T v : sd) zmax = std::max(zmax, static_cast<double>(v) / tau);
  double denom = 0.0;
  for (T v : sd) denom += std::exp(static_cast<double>(v) / tau - zmax);
  const double loss = zmax + std::log(denom) - static_cast<double>(sd[positive]) / tau;
  auto y = make_out<T>({}, {static_cast<T>(loss)}, sims.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [sims, y, positive, tau, zmax, denom]() mutable {
      const double g = y.grad()[0];
      const auto sd = sims.data();
      auto gs = sims.grad_buffer();
      for (size_t i = 0; i < sd.size(); ++i) {
        const double p = std::exp(static_cast<double>(sd[i]) / tau - zmax) / denom;
        gs[i] += static_cast<T>(g * (p - (i == positive ? 1.0 : 0.0)) / tau);
      }
    });
  }
  return y;
}

template <class T>
Tensor<T> bce_with_logits(Tape<T>& tape, const Tensor<T>& logit, T label) {
  require_numel(logit, 1, "bce_with_logits logit");
  if (label != T(0) && label != T(1)) throw ConfigError("bce_with_logits: label must be 0 or 1");
  const double z = logit.at(0);
  const double y_lab = label;
  const double loss = std::max(z, 0.0) - z * y_lab + std::log1p(std::exp(-std::abs(z)));
  auto y = make_out<T>({}, {static_cast<T>(loss)}, logit.requires_grad());
  if (y.requires_grad()) {
    tape.record(y, [logit, y, z, y_lab]() mutable {
      const double g = y.grad()[0];
      const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      logit.grad_buffer()[0] += static_cast<T>(g * (sig - y_lab));
    });
  }
  return y;
}

#define ERPCL_INSTANTIATE_OPS(T)                                                                          \
  template Tensor<T> conv1d_same(Tape<T>&, const Tensor<T>&, const Tensor<T>&,                            \
                                 const std::optional<Tensor<T>>&);                                         \
  template Tensor<T> conv1d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> channel_collapse(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> grouped_collapse(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> avg_pool_time(Tape<T>&, const Tensor<T>&, size_t);                                   \
  template Tensor<T> elu(Tape<T>&, const Tensor<T>&);                                                     \
  template Tensor<T> dropout(Tape<T>&, const Tensor<T>&, double, std::mt19937_64&);                       \
  template struct BatchNormState<T>;                                                                      \
  template Tensor<T> batch_norm(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                BatchNormState<T>&, NormMode);                                            \
  template Tensor<T> dense(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> stack(Tape<T>&, const std::vector<Tensor<T>>&);                                      \
  template Tensor<T> concat_rows(Tape<T>&, const std::vector<Tensor<T>>&);                                \
  template Tensor<T> select(Tape<T>&, const Tensor<T>&, size_t);                                          \
  template Tensor<T> reshape(Tape<T>&, const Tensor<T>&, Shape);                                          \
  template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                                                     \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                                \
  template Tensor<T> cosine_sim(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> softmax_xent(Tape<T>&, const Tensor<T>&, size_t, double);                            \
  template Tensor<T> bce_with_logits(Tape<T>&, const Tensor<T>&, T);

ERPCL_INSTANTIATE_OPS(float)
ERPCL_INSTANTIATE_OPS(double)

}  // namespace erpcl::ops
