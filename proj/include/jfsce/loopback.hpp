#pragma once

// Software replay of a looped-back SDR link: periodic QPSK blocks with one
// training frame every P frames, RRC pulse shaping at 4x oversampling, a
// two-tap symbol-spaced multipath channel, AWGN, matched filtering and
// decimation back to one sample per symbol. The receiver side is the
// three-block buffer (previous, central, next) the equalizer works on.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jfsce/signal_model.hpp"
#include "jfsce/types.hpp"

namespace jfsce {

struct LoopbackConfig {
  FrameConfig frame{100, 5, 43, 10};  // M, L, NE, P
  int oversampling = 4;
  double rolloff = 0.5;
  int span = 12;                      // RRC span in symbols
  int channel_index = 1;              // i of the manual channel
  int delay = 0;                      // D, symbol delay of the training frame in [0, M_bar)

  int block_len() const { return frame.block_len(); }  // M_bar
  void validate() const;
};

// Root-raised-cosine taps, span * osf + 1 long, symmetric, unit energy.
RVector rrc_taps(double rolloff, int span, int osf);

// Two-tap channel: taps[0] = 1, taps[i] = 0.7.
Cir manual_cir(int index);

struct LoopbackTruth {
  int delay = 0;        // D
  int frame_delay = 0;  // m
  int boundary = 0;     // D_bar = D - m M
  // Symbol-spaced response of the TX filter, channel, RX filter and
  // decimator, lags 0 .. i + span.
  Cir composite;
  double precursor_peak = 0.0;  // largest |response| at negative lags
};

struct LoopbackRun {
  CVector stream;     // 3 M_bar received symbols: previous, central, next block
  CVector block;      // the M_bar transmitted symbols; training frame first
  LoopbackTruth truth;

  CVector training(const FrameConfig& frame) const { return block.head(frame.training_len()); }
};

// `noise.variance` is per oversampled sample ahead of the receive filter;
// with unit-energy RRC taps it equals the per-symbol noise variance.
LoopbackRun run_loopback(const LoopbackConfig& cfg, const NoiseSpec& noise, std::uint64_t seed);

// Training samples to use for a training-frame delay D, as 1-based
// inclusive positions within the central block: frame delay
// m = min(floor(D / M), P) and window [m M + 1, m M + M~].
struct TrainingWindow {
  int frame_delay = 0;
  int first = 1;
  int last = 1;

  // 0-based index of the first window sample in the three-block stream.
  int stream_offset(const FrameConfig& frame) const { return frame.block_len() + first - 1; }
};

TrainingWindow locate_training_window(int delay, const FrameConfig& frame);

// Receiver-side estimate of D: the lag in [0, M_bar) of the central block
// where the training sequence correlates best (lowest lag on ties).
int detect_training_delay(const CVector& stream, const CVector& training, const FrameConfig& frame);

// Transmitted symbols on the stream timeline as seen by a receiver that
// uses frame delay m: x(u) = block[(u - m M) mod M_bar]. With the
// combined channel placed at D - m M, stream(u) = sum_l h~[l] x(u - l) + noise.
CVector aligned_symbols(const CVector& block, int frame_delay, const FrameConfig& frame);

// Interleaved little-endian complex64 samples at `path`, plus a text header
// at `path` + ".txt" with sample rate, seed and configuration.
void write_iq_dump(const std::filesystem::path& path, const CVector& samples, const LoopbackConfig& cfg,
                   double noise_variance, std::uint64_t seed);

}  // namespace jfsce
