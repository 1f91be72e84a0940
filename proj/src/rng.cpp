#include "jfsce/rng.hpp"

#include <cmath>

namespace jfsce {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = mix64(base);
  for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

cplx Rng::complex_gaussian(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

CVector Rng::complex_gaussian_vector(Eigen::Index n, double variance) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_gaussian(variance);
  return v;
}

}  // namespace jfsce
