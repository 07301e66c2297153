#include <atomic>
#include <cstdlib>
#include <string>

#include "erpcl/error.hpp"
#include "erpcl/log.hpp"
#include "erpcl/simd/kernels.hpp"

namespace erpcl::simd {
namespace {

bool cpu_has_avx2() {
#if defined(ERPCL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("ERPCL_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2") {
      if (cpu_has_avx2()) return Isa::avx2;
      log::warn("ERPCL_SIMD=avx2 requested but CPU lacks AVX2/FMA; using scalar kernels");
      return Isa::scalar;
    }
    log::warn("ignoring unknown ERPCL_SIMD value '" + want + "'");
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "?";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  static const bool has_avx2 = cpu_has_avx2();
  return has_avx2;
}

template <class T>
const KernelTable<T>& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw ConfigError("instruction set '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  }
#if defined(ERPCL_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2::table<T>();
#endif
  return scalar::table<T>();
}

template <class T>
const KernelTable<T>& active() {
  return kernels_for<T>(selected().load(std::memory_order_relaxed));
}

Isa active_isa() { return selected().load(); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ConfigError("instruction set '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  }
  selected().store(isa);
}

template const KernelTable<float>& kernels_for<float>(Isa);
template const KernelTable<double>& kernels_for<double>(Isa);
template const KernelTable<float>& active<float>();
template const KernelTable<double>& active<double>();

}  // namespace erpcl::simd
