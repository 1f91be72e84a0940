#include "jfsce/kernels.hpp"

#include <cassert>

namespace jfsce::kernels::scalar {

// Real/imaginary parts are expanded by hand so the compiler never routes
// through the NaN-recovering complex multiply helper.

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br - ai * bi;
    im += ar * bi + ai * br;
  }
  return {re, im};
}

cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
  assert(a.size() == b.size());
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    re += ar * br + ai * bi;
    im += ai * br - ar * bi;
  }
  return {re, im};
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  assert(x.size() == y.size());
  const double sr = alpha.real(), si = alpha.imag();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = cplx(y[i].real() + sr * xr - si * xi, y[i].imag() + sr * xi + si * xr);
  }
}

double norm2(std::span<const cplx> a) {
  double s = 0.0;
  for (const cplx& v : a) s += v.real() * v.real() + v.imag() * v.imag();
  return s;
}

}  // namespace jfsce::kernels::scalar
