#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jfsce/types.hpp"

namespace jfsce {

// Frame geometry. The training frame is exactly as long as needed for
// `num_equations` equations over a combined channel of length M + L:
//   training_len = M + L + NE - 1.
struct FrameConfig {
  int data_frame_len = 1000;   // M
  int cir_memory = 100;        // L
  int num_equations = 148;     // NE
  int training_period = 1;     // P (frames per period, loopback only)

  int training_len() const { return data_frame_len + cir_memory + num_equations - 1; }
  int combined_len() const { return data_frame_len + cir_memory; }
  // (P - 1) data frames plus one training frame.
  int block_len() const { return (training_period - 1) * data_frame_len + training_len(); }

  // Throws ParameterError when a field is out of range.
  void validate() const;
};

// Symbol-spaced channel impulse response h_0 .. h_L.
struct Cir {
  CVector taps;

  int memory() const { return static_cast<int>(taps.size()) - 1; }
  int sparsity() const;
  double energy() const { return taps.squaredNorm(); }
};

// 101-tap benchmark channel with ten nonzero taps and its strongest
// component at lag 14.
Cir benchmark_cir();

// k-sparse channel of memory L. Tap 0 is always active (the first arrival
// defines the frame boundary); the other k - 1 positions are drawn uniformly
// from 1..L. Amplitudes are CN(0, 1/k) so the expected energy is one.
Cir random_sparse_cir(int memory, int sparsity, std::uint64_t seed);

// D = m * M + boundary.
struct DelayModel {
  long total = 0;
  int frame_delay = 0;
  int boundary = 0;

  static DelayModel from_total(long total, int data_frame_len);
};

// Delayed, zero-padded channel of fixed length M + L.
struct CombinedChannel {
  CVector taps;
  int boundary = 0;
  std::vector<int> support;

  int length() const { return static_cast<int>(taps.size()); }
};

struct NoiseSpec {
  double variance = 0.0;       // total per complex sample
  std::uint64_t seed = 0;
};

// SNR is E|x|^2 / sigma^2 with unit-energy symbols.
double noise_variance_from_snr_db(double snr_db);

CombinedChannel build_combined_channel(const Cir& h, int boundary, int data_frame_len);

// y(n) = sum_l s(n - l) * taps[l] + z(n) where s = history ++ x. The returned
// vector is aligned with x. History holds the symbols preceding x, oldest
// first; lags reaching before the supplied history read zeros. The full
// history for a combined channel is length() - 1 symbols.
CVector channel_output(std::span<const cplx> history, std::span<const cplx> x,
                       std::span<const cplx> taps, const NoiseSpec& noise);
CVector channel_output(std::span<const cplx> history, std::span<const cplx> x,
                       const CombinedChannel& channel, const NoiseSpec& noise);

// Unit-energy Gray-mapped QPSK: bit pair (b0 b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
cplx qpsk_symbol(unsigned bits);
CVector generate_qpsk(int count, std::uint64_t seed);

}  // namespace jfsce
