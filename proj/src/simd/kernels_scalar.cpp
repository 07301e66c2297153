#include <cmath>

#include "erpcl/simd/kernels.hpp"

namespace erpcl::simd::scalar {
namespace {

template <class T>
T dot(const T* x, const T* y, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
void axpy(T a, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
void fma(const T* x, const T* z, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i] * z[i];
}

template <class T>
T sum(const T* x, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <class T>
void correlate(const T* x, const T* w, std::size_t p, T* y, std::size_t n) {
  for (std::size_t t = 0; t < n; ++t) {
    T acc = 0;
    for (std::size_t j = 0; j < p; ++j) acc += w[j] * x[t + j];
    y[t] += acc;
  }
}

template <class T>
void correlate_grad(const T* g, const T* x, std::size_t n, T* gw, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) gw[j] += dot(g, x + j, n);
}

template <class T>
void adam(T* w, T* m, T* v, const T* g, std::size_t n, const AdamCoeffs<T>& c) {
  const T one_minus_b1 = T(1) - c.beta1;
  const T one_minus_b2 = T(1) - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const T grad = g[i] + c.weight_decay * w[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * grad;
    v[i] = c.beta2 * v[i] + one_minus_b2 * grad * grad;
    const T m_hat = m[i] / c.bias_correction1;
    const T v_hat = v[i] / c.bias_correction2;
    w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

template <class T>
const KernelTable<T> kTable{Isa::scalar, dot<T>, axpy<T>, fma<T>, sum<T>, correlate<T>, correlate_grad<T>, adam<T>};

}  // namespace

template <class T>
const KernelTable<T>& table() {
  return kTable<T>;
}

template const KernelTable<float>& table<float>();
template const KernelTable<double>& table<double>();

}  // namespace erpcl::simd::scalar
