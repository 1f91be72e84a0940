#pragma once

// Complex-double inner loops shared by convolution, correlation and
// equalization. Each kernel has a scalar reference implementation and, on
// x86-64 builds, an AVX2/FMA variant. The public entry points dispatch at
// runtime to the best variant the CPU supports.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace jfsce::kernels {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// Best variant available on this CPU and build.
Isa detected_isa();

// Variant currently used by the dispatching entry points. Defaults to
// detected_isa(); the JFSCE_ISA environment variable ("scalar"/"avx2")
// overrides it at first use.
Isa active_isa();

// Forces a variant. Requesting avx2 on a machine without it falls back to
// scalar. Returns the variant actually selected.
Isa set_active_isa(Isa isa);

// sum_i a[i] * b[i]; spans must have equal length.
cplx dot(std::span<const cplx> a, std::span<const cplx> b);

// sum_i a[i] * conj(b[i]).
cplx dotc(std::span<const cplx> a, std::span<const cplx> b);

// y[i] += alpha * x[i].
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);

// sum_i |a[i]|^2.
double norm2(std::span<const cplx> a);

namespace scalar {
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
cplx dotc(std::span<const cplx> a, std::span<const cplx> b);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
double norm2(std::span<const cplx> a);
}  // namespace scalar

#if defined(JFSCE_HAVE_AVX2)
namespace avx2 {
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
cplx dotc(std::span<const cplx> a, std::span<const cplx> b);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
double norm2(std::span<const cplx> a);
}  // namespace avx2
#endif

}  // namespace jfsce::kernels
