#include <atomic>
#include <cstdlib>
#include <string_view>

#include "jfsce/kernels.hpp"

namespace jfsce::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(JFSCE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  Isa isa = detected_isa();
  if (const char* env = std::getenv("JFSCE_ISA")) {
    if (std::string_view(env) == "scalar") isa = Isa::scalar;
  }
  return isa;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  active().store(isa, std::memory_order_relaxed);
  return isa;
}

#if defined(JFSCE_HAVE_AVX2)
#define JFSCE_DISPATCH(fn, ...)                          \
  if (active_isa() == Isa::avx2) return avx2::fn(__VA_ARGS__); \
  return scalar::fn(__VA_ARGS__)
#else
#define JFSCE_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

cplx dot(std::span<const cplx> a, std::span<const cplx> b) { JFSCE_DISPATCH(dot, a, b); }

cplx dotc(std::span<const cplx> a, std::span<const cplx> b) { JFSCE_DISPATCH(dotc, a, b); }

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  JFSCE_DISPATCH(axpy, alpha, x, y);
}

double norm2(std::span<const cplx> a) { JFSCE_DISPATCH(norm2, a); }

#undef JFSCE_DISPATCH

}  // namespace jfsce::kernels
