#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "jfsce/types.hpp"

namespace jfsce {

// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Combines a base seed with a list of stream coordinates (grid point, trial,
// ...) into a child seed. Order matters; equal inputs give equal outputs.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) noexcept;

// Seedable, splittable generator. Every stochastic operation in the library
// takes one of these (or a seed to build one) explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, {stream})); }

  std::mt19937_64& engine() noexcept { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double gaussian() { return normal_(engine_); }

  // Circularly symmetric complex Gaussian with total variance `variance`
  // (variance / 2 per real and imaginary part).
  cplx complex_gaussian(double variance);

  // Fills a vector with i.i.d. complex Gaussian samples.
  CVector complex_gaussian_vector(Eigen::Index n, double variance);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace jfsce
