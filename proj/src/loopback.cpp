#include "jfsce/loopback.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <span>

#include "jfsce/kernels.hpp"
#include "jfsce/rng.hpp"

namespace jfsce {

namespace {

// Full linear convolution of a complex signal with real taps.
CVector convolve(const CVector& x, const RVector& taps) {
  const Eigen::Index n = x.size(), k = taps.size();
  CVector out = CVector::Zero(n + k - 1);
  for (Eigen::Index j = 0; j < k; ++j) out.segment(j, n) += taps[j] * x;
  return out;
}

CVector upsample(const CVector& symbols, int osf) {
  CVector out = CVector::Zero(symbols.size() * osf);
  for (Eigen::Index i = 0; i < symbols.size(); ++i) out[i * osf] = symbols[i];
  return out;
}

// Manual channel applied on the oversampled stream: lag i symbols is lag
// i * osf samples.
CVector apply_manual_channel(const CVector& x, const Cir& h, int osf) {
  CVector out = CVector::Zero(x.size() + h.memory() * osf);
  for (Eigen::Index l = 0; l < h.taps.size(); ++l) {
    if (h.taps[l] == cplx(0.0)) continue;
    out.segment(l * osf, x.size()) += h.taps[l] * x;
  }
  return out;
}

}  // namespace

void LoopbackConfig::validate() const {
  frame.validate();
  if (oversampling < 1) throw ParameterError("oversampling factor must be >= 1");
  if (span < 1) throw ParameterError("RRC span must be >= 1 symbol");
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ParameterError("RRC roll-off must lie in (0, 1]");
  if (channel_index < 1) throw ParameterError("manual channel index must be >= 1");
  if (delay < 0 || delay >= block_len())
    throw BoundaryRangeError("training delay D must lie in [0, M_bar)");
}

RVector rrc_taps(double rolloff, int span, int osf) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ParameterError("RRC roll-off must lie in (0, 1]");
  if (span < 1 || osf < 1) throw ParameterError("RRC span and oversampling must be >= 1");
  const int count = span * osf + 1;
  const double b = rolloff;
  const double pi = std::numbers::pi;
  RVector taps(count);
  for (int j = 0; j < count; ++j) {
    const double t = (j - 0.5 * span * osf) / osf;
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - b + 4.0 * b / pi;
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-12) {
      v = b / std::sqrt(2.0) *
          ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
    } else {
      v = (std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b))) /
          (pi * t * (1.0 - 16.0 * b * b * t * t));
    }
    taps[j] = v;
  }
  // Mirror so the taps are symmetric to the last bit.
  for (int j = 0; j < count / 2; ++j) taps[count - 1 - j] = taps[j];
  return taps / taps.norm();
}

Cir manual_cir(int index) {
  if (index < 1) throw ParameterError("manual channel index must be >= 1");
  Cir h;
  h.taps = CVector::Zero(index + 1);
  h.taps[0] = 1.0;
  h.taps[index] = 0.7;
  return h;
}

TrainingWindow locate_training_window(int delay, const FrameConfig& frame) {
  frame.validate();
  if (delay < 0 || delay >= frame.block_len())
    throw BoundaryRangeError("training delay D must lie in [0, M_bar)");
  TrainingWindow w;
  w.frame_delay = std::min(delay / frame.data_frame_len, frame.training_period);
  w.first = w.frame_delay * frame.data_frame_len + 1;
  w.last = w.frame_delay * frame.data_frame_len + frame.training_len();
  return w;
}

LoopbackRun run_loopback(const LoopbackConfig& cfg, const NoiseSpec& noise, std::uint64_t seed) {
  cfg.validate();
  if (noise.variance < 0.0) throw ParameterError("noise variance must be non-negative");
  const int mbar = cfg.block_len();
  const int osf = cfg.oversampling;
  const int group = cfg.span * osf / 2;  // per filter, in samples
  const RVector rrc = rrc_taps(cfg.rolloff, cfg.span, osf);
  const Cir channel = manual_cir(cfg.channel_index);

  LoopbackRun run;
  run.block = generate_qpsk(mbar, seed);

  // Three repetitions; the second period of the shaped, multipath signal is
  // free of start-up transients and repeats from then on.
  CVector repeated(3 * mbar);
  for (int r = 0; r < 3; ++r) repeated.segment(r * mbar, mbar) = run.block;
  const CVector shaped = apply_manual_channel(convolve(upsample(repeated, osf), rrc), channel, osf);
  const Eigen::Index period = static_cast<Eigen::Index>(mbar) * osf;
  const CVector steady = shaped.segment(period, period);

  // Circular delay by D symbols, then AWGN on every oversampled sample.
  const int out_len = 3 * mbar;
  const Eigen::Index samples = static_cast<Eigen::Index>(out_len - 1) * osf + 2 * group + 1;
  CVector received(samples);
  const Eigen::Index shift = static_cast<Eigen::Index>(cfg.delay) * osf;
  for (Eigen::Index u = 0; u < samples; ++u) {
    const Eigen::Index v = ((u - shift) % period + period) % period;
    received[u] = steady[v];
  }
  if (noise.variance > 0.0) {
    Rng rng(noise.seed);
    for (Eigen::Index u = 0; u < samples; ++u) received[u] += rng.complex_gaussian(noise.variance);
  }

  // Matched filter and decimation with both group delays compensated.
  run.stream.resize(out_len);
  for (int t = 0; t < out_len; ++t) {
    const Eigen::Index at = static_cast<Eigen::Index>(t) * osf + 2 * group;
    cplx acc(0.0);
    for (Eigen::Index k = 0; k < rrc.size(); ++k) acc += rrc[k] * received[at - k];
    run.stream[t] = acc;
  }

  // Impulse probe through the same chain for the composite response.
  const int lead = cfg.span + 1;
  CVector probe = CVector::Zero(lead + cfg.channel_index + cfg.span + 2);
  probe[lead] = 1.0;
  const CVector probed = convolve(apply_manual_channel(convolve(upsample(probe, osf), rrc), channel, osf), rrc);
  auto response = [&](int lag) {
    const Eigen::Index at = static_cast<Eigen::Index>(lead + lag) * osf + 2 * group;
    return at >= 0 && at < probed.size() ? probed[at] : cplx(0.0);
  };
  LoopbackTruth& truth = run.truth;
  truth.delay = cfg.delay;
  const TrainingWindow w = locate_training_window(cfg.delay, cfg.frame);
  truth.frame_delay = w.frame_delay;
  truth.boundary = cfg.delay - w.frame_delay * cfg.frame.data_frame_len;
  truth.composite.taps.resize(cfg.channel_index + cfg.span + 1);
  for (int l = 0; l <= cfg.channel_index + cfg.span; ++l) truth.composite.taps[l] = response(l);
  for (int l = -cfg.span; l < 0; ++l) truth.precursor_peak = std::max(truth.precursor_peak, std::abs(response(l)));
  return run;
}

int detect_training_delay(const CVector& stream, const CVector& training, const FrameConfig& frame) {
  const int mbar = frame.block_len();
  const auto len = static_cast<Eigen::Index>(training.size());
  if (stream.size() < 3 * static_cast<Eigen::Index>(mbar))
    throw InsufficientSamplesError("stream shorter than the three-block buffer");
  const std::span<const cplx> ref(training.data(), static_cast<std::size_t>(len));
  int best = 0;
  double best_mag = -1.0;
  for (int d = 0; d < mbar; ++d) {
    const Eigen::Index from = mbar + d;
    if (from + len > stream.size()) break;
    const double mag = std::abs(kernels::dotc({stream.data() + from, static_cast<std::size_t>(len)}, ref));
    if (mag > best_mag) {
      best_mag = mag;
      best = d;
    }
  }
  return best;
}

CVector aligned_symbols(const CVector& block, int frame_delay, const FrameConfig& frame) {
  const int mbar = frame.block_len();
  if (block.size() != mbar) throw DimensionError("block must hold M_bar symbols");
  CVector x(3 * mbar);
  const long offset = static_cast<long>(frame_delay) * frame.data_frame_len;
  for (long u = 0; u < 3L * mbar; ++u) x[u] = block[((u - offset) % mbar + mbar) % mbar];
  return x;
}

void write_iq_dump(const std::filesystem::path& path, const CVector& samples, const LoopbackConfig& cfg,
                   double noise_variance, std::uint64_t seed) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw Error("cannot open IQ dump " + path.string());
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    float parts[2] = {static_cast<float>(samples[i].real()), static_cast<float>(samples[i].imag())};
    for (float f : parts) {
      std::uint32_t word;
      std::memcpy(&word, &f, sizeof word);
      if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
      bin.write(reinterpret_cast<const char*>(&word), sizeof word);
    }
  }
  if (!bin) throw Error("failed writing IQ dump " + path.string());

  std::filesystem::path header = path;
  header += ".txt";
  std::ofstream txt(header);
  if (!txt) throw Error("cannot open IQ header " + header.string());
  txt.precision(17);
  txt << "format = complex64 little-endian interleaved I/Q\n"
      << "samples = " << samples.size() << "\n"
      << "sample_rate = 1 per symbol\n"
      << "seed = " << seed << "\n"
      << "noise_variance = " << noise_variance << "\n"
      << "data_frame_len = " << cfg.frame.data_frame_len << "\n"
      << "cir_memory = " << cfg.frame.cir_memory << "\n"
      << "num_equations = " << cfg.frame.num_equations << "\n"
      << "training_period = " << cfg.frame.training_period << "\n"
      << "oversampling = " << cfg.oversampling << "\n"
      << "rolloff = " << cfg.rolloff << "\n"
      << "span = " << cfg.span << "\n"
      << "channel_index = " << cfg.channel_index << "\n"
      << "delay = " << cfg.delay << "\n";
  if (!txt) throw Error("failed writing IQ header " + header.string());
}

}  // namespace jfsce
