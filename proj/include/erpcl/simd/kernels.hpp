#pragma once

// Inner-loop kernels shared by the tensor ops and the optimizer.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2+FMA
// variant. The variant is picked once at startup from CPUID; ERPCL_SIMD=scalar in
// the environment (or force_isa) pins the reference path. Vector variants may
// reassociate sums, so results agree with the reference to rounding, not bitwise.
// All pointers may be unaligned; n may be zero.

#include <cstddef>
#include <string_view>

namespace erpcl::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

template <class T>
struct AdamCoeffs {
  T lr;
  T beta1;
  T beta2;
  T eps;
  T weight_decay;
  T bias_correction1;  // 1 - beta1^t
  T bias_correction2;  // 1 - beta2^t
};

template <class T>
struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  T (*dot)(const T* x, const T* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(T a, const T* x, T* y, std::size_t n);
  // y[i] += x[i] * z[i]
  void (*fma)(const T* x, const T* z, T* y, std::size_t n);
  // sum_i x[i]
  T (*sum)(const T* x, std::size_t n);
  // y[t] += sum_{j<p} w[j] * x[t + j] for t < n; x holds n + p - 1 values
  void (*correlate)(const T* x, const T* w, std::size_t p, T* y, std::size_t n);
  // gw[j] += sum_{t<n} g[t] * x[t + j] for j < p; x holds n + p - 1 values
  void (*correlate_grad)(const T* g, const T* x, std::size_t n, T* gw, std::size_t p);
  // L2-coupled Adam: g' = g + wd*w; m,v updated in place; w -= lr * mhat / (sqrt(vhat) + eps)
  void (*adam)(T* w, T* m, T* v, const T* g, std::size_t n, const AdamCoeffs<T>& c);
};

/// Kernels for a specific instruction set. Throws erpcl::ConfigError if the CPU lacks it.
template <class T>
const KernelTable<T>& kernels_for(Isa isa);

/// Kernels for the currently selected instruction set.
template <class T>
const KernelTable<T>& active();

Isa active_isa();
bool isa_supported(Isa isa);
/// Pins the dispatch target process-wide. Throws if unsupported.
void force_isa(Isa isa);

namespace scalar {
template <class T>
const KernelTable<T>& table();
}

#if defined(ERPCL_HAVE_AVX2)
namespace avx2 {
template <class T>
const KernelTable<T>& table();
}
#endif

}  // namespace erpcl::simd
