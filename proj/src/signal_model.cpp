#include "jfsce/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jfsce/kernels.hpp"
#include "jfsce/rng.hpp"

namespace jfsce {

void FrameConfig::validate() const {
  if (data_frame_len < 1) throw ParameterError("data frame length M must be >= 1");
  if (cir_memory < 0) throw ParameterError("CIR memory L must be >= 0");
  if (num_equations < 1) throw ParameterError("number of equations NE must be >= 1");
  if (training_period < 1) throw ParameterError("training period P must be >= 1");
}

int Cir::sparsity() const {
  int k = 0;
  for (Eigen::Index i = 0; i < taps.size(); ++i) k += taps[i] != cplx(0.0) ? 1 : 0;
  return k;
}

Cir benchmark_cir() {
  Cir h;
  h.taps = CVector::Zero(101);
  h.taps[0] = -0.5;
  h.taps[7] = 0.1;
  h.taps[14] = 0.9;
  h.taps[33] = -0.3;
  h.taps[49] = 0.5;
  h.taps[51] = -0.25;
  h.taps[69] = -0.3;
  h.taps[73] = 0.3;
  h.taps[89] = 0.4;
  h.taps[100] = -0.1;
  return h;
}

Cir random_sparse_cir(int memory, int sparsity, std::uint64_t seed) {
  if (memory < 0) throw ParameterError("CIR memory must be >= 0");
  if (sparsity < 1 || sparsity > memory + 1)
    throw ParameterError("sparsity must lie in [1, L+1], got " + std::to_string(sparsity));
  Rng rng(seed);
  std::vector<int> lags(static_cast<std::size_t>(memory));
  std::iota(lags.begin(), lags.end(), 1);
  std::shuffle(lags.begin(), lags.end(), rng.engine());
  Cir h;
  h.taps = CVector::Zero(memory + 1);
  const double var = 1.0 / sparsity;
  auto draw = [&] {
    cplx v;
    do v = rng.complex_gaussian(var);
    while (v == cplx(0.0));
    return v;
  };
  h.taps[0] = draw();
  for (int j = 0; j < sparsity - 1; ++j) h.taps[lags[static_cast<std::size_t>(j)]] = draw();
  return h;
}

DelayModel DelayModel::from_total(long total, int data_frame_len) {
  if (total < 0) throw ParameterError("delay must be non-negative");
  if (data_frame_len < 1) throw ParameterError("data frame length must be >= 1");
  DelayModel d;
  d.total = total;
  d.frame_delay = static_cast<int>(total / data_frame_len);
  d.boundary = static_cast<int>(total % data_frame_len);
  return d;
}

double noise_variance_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

CombinedChannel build_combined_channel(const Cir& h, int boundary, int data_frame_len) {
  if (data_frame_len < 1) throw ParameterError("data frame length must be >= 1");
  if (boundary < 0 || boundary > data_frame_len - 1)
    throw BoundaryRangeError("frame boundary " + std::to_string(boundary) + " outside [0, " +
                             std::to_string(data_frame_len - 1) + "]");
  const int L = h.memory();
  if (L < 0) throw ParameterError("CIR must have at least one tap");
  CombinedChannel c;
  c.boundary = boundary;
  c.taps = CVector::Zero(data_frame_len + L);
  c.taps.segment(boundary, L + 1) = h.taps;
  for (int j = 0; j <= L; ++j)
    if (h.taps[j] != cplx(0.0)) c.support.push_back(boundary + j);
  return c;
}

CVector channel_output(std::span<const cplx> history, std::span<const cplx> x,
                       std::span<const cplx> taps, const NoiseSpec& noise) {
  const std::size_t n = x.size();
  const std::size_t hist = history.size();
  std::vector<cplx> s;
  s.reserve(hist + n);
  s.insert(s.end(), history.begin(), history.end());
  s.insert(s.end(), x.begin(), x.end());

  CVector y = CVector::Zero(static_cast<Eigen::Index>(n));
  std::span<cplx> out(y.data(), n);
  for (std::size_t l = 0; l < taps.size(); ++l) {
    const cplx h = taps[l];
    if (h == cplx(0.0)) continue;
    // y[i] += h * s[hist + i - l] for every i with hist + i - l >= 0.
    const std::size_t skip = l > hist ? l - hist : 0;
    if (skip >= n) continue;
    const std::size_t first = hist + skip - l;
    kernels::axpy(h, std::span<const cplx>(s).subspan(first, n - skip), out.subspan(skip));
  }
  if (noise.variance > 0.0) {
    Rng rng(noise.seed);
    for (std::size_t i = 0; i < n; ++i) out[i] += rng.complex_gaussian(noise.variance);
  }
  return y;
}

CVector channel_output(std::span<const cplx> history, std::span<const cplx> x,
                       const CombinedChannel& channel, const NoiseSpec& noise) {
  return channel_output(history, x,
                        std::span<const cplx>(channel.taps.data(),
                                              static_cast<std::size_t>(channel.taps.size())),
                        noise);
}

cplx qpsk_symbol(unsigned bits) {
  const double a = 1.0 / std::sqrt(2.0);
  const double re = (bits & 0x2u) ? -a : a;
  const double im = (bits & 0x1u) ? -a : a;
  return {re, im};
}

CVector generate_qpsk(int count, std::uint64_t seed) {
  if (count < 1) throw ParameterError("QPSK symbol count must be >= 1");
  Rng rng(seed);
  CVector x(count);
  std::uint64_t word = 0;
  int left = 0;
  for (int i = 0; i < count; ++i) {
    if (left == 0) {
      word = rng.engine()();
      left = 32;
    }
    x[i] = qpsk_symbol(static_cast<unsigned>(word & 0x3u));
    word >>= 2;
    --left;
  }
  return x;
}

}  // namespace jfsce
