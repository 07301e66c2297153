// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.

#include <immintrin.h>

#include <cmath>

#include "erpcl/simd/kernels.hpp"

namespace erpcl::simd::avx2 {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d hi64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, hi64));
}

// 256-bit lanes for float and double behind one interface.
template <class T>
struct Lanes;

template <>
struct Lanes<float> {
  using V = __m256;
  static constexpr std::size_t width = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V set1(float a) { return _mm256_set1_ps(a); }
  static V load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, V v) { _mm256_storeu_ps(p, v); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static float sum(V v) { return hsum(v); }
};

template <>
struct Lanes<double> {
  using V = __m256d;
  static constexpr std::size_t width = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V set1(double a) { return _mm256_set1_pd(a); }
  static V load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, V v) { _mm256_storeu_pd(p, v); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static double sum(V v) { return hsum(v); }
};

// Output blocks of 8 vectors stay in registers across the whole kernel.
template <class T>
void correlate(const T* x, const T* w, std::size_t p, T* y, std::size_t n) {
  using L = Lanes<T>;
  constexpr std::size_t W = L::width;
  constexpr std::size_t B = 8;
  std::size_t t = 0;
  for (; t + B * W <= n; t += B * W) {
    typename L::V acc[B];
    for (std::size_t b = 0; b < B; ++b) acc[b] = L::load(y + t + b * W);
    for (std::size_t j = 0; j < p; ++j) {
      const auto wj = L::set1(w[j]);
      const T* xs = x + t + j;
      for (std::size_t b = 0; b < B; ++b) acc[b] = L::fmadd(wj, L::load(xs + b * W), acc[b]);
    }
    for (std::size_t b = 0; b < B; ++b) L::store(y + t + b * W, acc[b]);
  }
  for (; t + W <= n; t += W) {
    auto acc = L::load(y + t);
    for (std::size_t j = 0; j < p; ++j) acc = L::fmadd(L::set1(w[j]), L::load(x + t + j), acc);
    L::store(y + t, acc);
  }
  for (; t < n; ++t) {
    T acc = 0;
    for (std::size_t j = 0; j < p; ++j) acc += w[j] * x[t + j];
    y[t] += acc;
  }
}

// Four taps share each load of g.
template <class T>
void correlate_grad(const T* g, const T* x, std::size_t n, T* gw, std::size_t p) {
  using L = Lanes<T>;
  constexpr std::size_t W = L::width;
  std::size_t j = 0;
  for (; j + 4 <= p; j += 4) {
    typename L::V acc[4] = {L::zero(), L::zero(), L::zero(), L::zero()};
    std::size_t t = 0;
    for (; t + W <= n; t += W) {
      const auto gv = L::load(g + t);
      for (std::size_t k = 0; k < 4; ++k) acc[k] = L::fmadd(gv, L::load(x + t + j + k), acc[k]);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      T s = L::sum(acc[k]);
      for (std::size_t r = t; r < n; ++r) s += g[r] * x[r + j + k];
      gw[j + k] += s;
    }
  }
  for (; j < p; ++j) {
    auto acc = L::zero();
    std::size_t t = 0;
    for (; t + W <= n; t += W) acc = L::fmadd(L::load(g + t), L::load(x + t + j), acc);
    T s = L::sum(acc);
    for (; t < n; ++t) s += g[t] * x[t + j];
    gw[j] += s;
  }
}

float dot_f32(const float* x, const float* y, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double dot_f64(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_f32(float a, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void fma_f32(const float* x, const float* z, float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(z + i),
                                            _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += x[i] * z[i];
}

void fma_f64(const double* x, const double* z, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += x[i] * z[i];
}

float sum_f32(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_f64(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void adam_f32(float* w, float* m, float* v, const float* g, std::size_t n,
              const AdamCoeffs<float>& c) {
  const __m256 b1 = _mm256_set1_ps(c.beta1);
  const __m256 b2 = _mm256_set1_ps(c.beta2);
  const __m256 omb1 = _mm256_set1_ps(1.0f - c.beta1);
  const __m256 omb2 = _mm256_set1_ps(1.0f - c.beta2);
  const __m256 wd = _mm256_set1_ps(c.weight_decay);
  const __m256 inv_bc1 = _mm256_set1_ps(1.0f / c.bias_correction1);
  const __m256 inv_bc2 = _mm256_set1_ps(1.0f / c.bias_correction2);
  const __m256 lr = _mm256_set1_ps(c.lr);
  const __m256 eps = _mm256_set1_ps(c.eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 wi = _mm256_loadu_ps(w + i);
    __m256 gi = _mm256_fmadd_ps(wd, wi, _mm256_loadu_ps(g + i));
    __m256 mi = _mm256_fmadd_ps(b1, _mm256_loadu_ps(m + i), _mm256_mul_ps(omb1, gi));
    __m256 vi = _mm256_fmadd_ps(b2, _mm256_loadu_ps(v + i), _mm256_mul_ps(omb2, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vi, inv_bc2)), eps);
    __m256 step = _mm256_div_ps(_mm256_mul_ps(lr, _mm256_mul_ps(mi, inv_bc1)), denom);
    _mm256_storeu_ps(w + i, _mm256_sub_ps(wi, step));
  }
  for (; i < n; ++i) {
    const float grad = g[i] + c.weight_decay * w[i];
    m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * grad;
    v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * grad * grad;
    w[i] -= c.lr * (m[i] / c.bias_correction1) / (std::sqrt(v[i] / c.bias_correction2) + c.eps);
  }
}

void adam_f64(double* w, double* m, double* v, const double* g, std::size_t n,
              const AdamCoeffs<double>& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d wd = _mm256_set1_pd(c.weight_decay);
  const __m256d inv_bc1 = _mm256_set1_pd(1.0 / c.bias_correction1);
  const __m256d inv_bc2 = _mm256_set1_pd(1.0 / c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wi = _mm256_loadu_pd(w + i);
    __m256d gi = _mm256_fmadd_pd(wd, wi, _mm256_loadu_pd(g + i));
    __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(omb1, gi));
    __m256d vi = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(omb2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_bc2)), eps);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mi, inv_bc1)), denom);
    _mm256_storeu_pd(w + i, _mm256_sub_pd(wi, step));
  }
  for (; i < n; ++i) {
    const double grad = g[i] + c.weight_decay * w[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad * grad;
    w[i] -= c.lr * (m[i] / c.bias_correction1) / (std::sqrt(v[i] / c.bias_correction2) + c.eps);
  }
}

const KernelTable<float> kTableF32{Isa::avx2, dot_f32, axpy_f32, fma_f32, sum_f32,
    correlate<float>, correlate_grad<float>, adam_f32};
const KernelTable<double> kTableF64{Isa::avx2, dot_f64, axpy_f64, fma_f64, sum_f64,
    correlate<double>, correlate_grad<double>, adam_f64};

}  // namespace

template <>
const KernelTable<float>& table<float>() {
  return kTableF32;
}

template <>
const KernelTable<double>& table<double>() {
  return kTableF64;
}

}  // namespace erpcl::simd::avx2
