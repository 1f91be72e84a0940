#pragma once

// Sparse FIR linear MMSE equalizer.
//
// The equalizer output is x~(n) = sum_k y(n - k) w_k for k = 0 .. N - 1 and is
// compared against x(n - delay). With H the N x (N + len - 1) convolution
// matrix of the channel estimate, H(k, j) = h[j - k], the taps minimise
//   ||H^T w - e_delay||^2 + sigma^2 ||w||^2,
// i.e. conj(w) = R^-1 h_delay with R = H H^H + sigma^2 I, and the design MSE
// is 1 - h_delay^H R^-1 h_delay for unit-energy symbols.

#include <vector>

#include "jfsce/types.hpp"

namespace jfsce {

struct EqualizerOptions {
  // Delays kept for greedy tap selection, ranked by the dense design MSE.
  // 0 searches every delay in the window.
  int greedy_delay_candidates = 8;
  // Channels longer than this restrict the delay search to the span between
  // the 1% and 99% points of the cumulative tap energy.
  int prune_length = 500;
};

struct EqualizerDesign {
  CVector w;                // N taps, zero outside `active`
  std::vector<int> active;  // ascending
  int delay = 0;
  double design_mse = 1.0;
  int num_taps = 0;
  bool jittered = false;    // a restricted system was singular and regularised
};

// Searches the delay and, when budget < N, greedily selects `budget` taps.
// Throws ParameterError for N < 1, budget outside [1, N] or an all-zero channel.
EqualizerDesign design_mmse_equalizer(const CVector& channel, int num_taps, double noise_variance,
                                      int budget, const EqualizerOptions& options = {});

// Same design at one fixed delay.
EqualizerDesign design_mmse_equalizer_at(const CVector& channel, int num_taps, double noise_variance,
                                         int budget, int delay);

// Best design MSE for every budget 1 .. max_budget over the same delay
// candidates design_mmse_equalizer uses; entry b - 1 equals
// design_mmse_equalizer(..., b).design_mse.
std::vector<double> design_mse_by_budget(const CVector& channel, int num_taps, double noise_variance,
                                         int max_budget, const EqualizerOptions& options = {});

// Equalizer output x~(n) for every n of y; samples before the start of y read as zero.
CVector equalize(const EqualizerDesign& design, const CVector& y);

// Mean |x~(n) - x(n - delay)|^2 over n in [begin, end). y and x share one
// timeline. Throws WindowError when the range is empty or needs samples
// before index 0 or past the end of either stream.
double evaluate_symbol_mse(const EqualizerDesign& design, const CVector& y, const CVector& x,
                           Eigen::Index begin, Eigen::Index end);

// Over every evaluable n: n >= N - 1 and n >= delay.
double evaluate_symbol_mse(const EqualizerDesign& design, const CVector& y, const CVector& x);

// Nearest unit-energy QPSK point per sample.
CVector slice_qpsk(const CVector& soft);

}  // namespace jfsce
