// AVX2/FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; callers reach it through the runtime dispatch in dispatch.cpp.

#include <immintrin.h>

#include <cassert>

#include "jfsce/kernels.hpp"

namespace jfsce::kernels::avx2 {

namespace {

// A 256-bit register holds two complex doubles laid out [re0, im0, re1, im1].
inline const double* raw(std::span<const cplx> s) {
  return reinterpret_cast<const double*>(s.data());
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Folds [x0, y0, x1, y1] into (x0 + x1, y0 + y1).
inline void hsum_pairs(__m256d v, double& even, double& odd) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  even = _mm_cvtsd_f64(s);
  odd = _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const double* pa = raw(a);
  const double* pb = raw(b);
  // straight: [ar*br, ai*bi], swapped: [ar*bi, ai*br]
  __m256d straight0 = _mm256_setzero_pd(), swapped0 = _mm256_setzero_pd();
  __m256d straight1 = _mm256_setzero_pd(), swapped1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb0 = _mm256_loadu_pd(pb + 2 * i);
    const __m256d va1 = _mm256_loadu_pd(pa + 2 * i + 4);
    const __m256d vb1 = _mm256_loadu_pd(pb + 2 * i + 4);
    straight0 = _mm256_fmadd_pd(va0, vb0, straight0);
    swapped0 = _mm256_fmadd_pd(va0, _mm256_permute_pd(vb0, 0x5), swapped0);
    straight1 = _mm256_fmadd_pd(va1, vb1, straight1);
    swapped1 = _mm256_fmadd_pd(va1, _mm256_permute_pd(vb1, 0x5), swapped1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    straight0 = _mm256_fmadd_pd(va, vb, straight0);
    swapped0 = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), swapped0);
  }
  double rr, ii, ri, ir;
  hsum_pairs(_mm256_add_pd(straight0, straight1), rr, ii);
  hsum_pairs(_mm256_add_pd(swapped0, swapped1), ri, ir);
  double re = rr - ii;
  double im = ri + ir;
  for (; i < n; ++i) {
    re += a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
  }
  return {re, im};
}

cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const double* pa = raw(a);
  const double* pb = raw(b);
  __m256d straight0 = _mm256_setzero_pd(), swapped0 = _mm256_setzero_pd();
  __m256d straight1 = _mm256_setzero_pd(), swapped1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb0 = _mm256_loadu_pd(pb + 2 * i);
    const __m256d va1 = _mm256_loadu_pd(pa + 2 * i + 4);
    const __m256d vb1 = _mm256_loadu_pd(pb + 2 * i + 4);
    straight0 = _mm256_fmadd_pd(va0, vb0, straight0);
    swapped0 = _mm256_fmadd_pd(va0, _mm256_permute_pd(vb0, 0x5), swapped0);
    straight1 = _mm256_fmadd_pd(va1, vb1, straight1);
    swapped1 = _mm256_fmadd_pd(va1, _mm256_permute_pd(vb1, 0x5), swapped1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    straight0 = _mm256_fmadd_pd(va, vb, straight0);
    swapped0 = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), swapped0);
  }
  double rr, ii, ri, ir;
  hsum_pairs(_mm256_add_pd(straight0, straight1), rr, ii);
  hsum_pairs(_mm256_add_pd(swapped0, swapped1), ri, ir);
  double re = rr + ii;
  double im = ir - ri;
  for (; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].imag() * b[i].real() - a[i].real() * b[i].imag();
  }
  return {re, im};
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  assert(x.size() == y.size());
  const std::size_t n = x.size();
  const double* px = raw(x);
  double* py = reinterpret_cast<double*>(y.data());
  const __m256d re = _mm256_set1_pd(alpha.real());
  const __m256d im = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * i);
    const __m256d vy = _mm256_loadu_pd(py + 2 * i);
    // [im*xi, im*xr] then fmaddsub gives [re*xr - im*xi, re*xi + im*xr]
    const __m256d cross = _mm256_mul_pd(im, _mm256_permute_pd(vx, 0x5));
    const __m256d prod = _mm256_fmaddsub_pd(re, vx, cross);
    _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(vy, prod));
  }
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = cplx(y[i].real() + alpha.real() * xr - alpha.imag() * xi,
                y[i].imag() + alpha.real() * xi + alpha.imag() * xr);
  }
}

double norm2(std::span<const cplx> a) {
  const std::size_t n = a.size();
  const double* pa = raw(a);
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d v1 = _mm256_loadu_pd(pa + 2 * i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d v = _mm256_loadu_pd(pa + 2 * i);
    acc0 = _mm256_fmadd_pd(v, v, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

}  // namespace jfsce::kernels::avx2
