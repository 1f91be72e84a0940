#pragma once

#include <span>

#include "jfsce/signal_model.hpp"
#include "jfsce/types.hpp"

namespace jfsce {

// y = X h + z over the full combined channel.
struct MeasurementSystem {
  CVector y;         // NE received samples, newest first
  CMatrix matrix;    // NE x (M + L), entry (r, c) = training[M~ - 1 - r - c]
  CVector training;  // M~ known training symbols
};

// Reduced system of the separate sync-then-estimate receiver: only the L + 1
// columns starting at the detected boundary are kept.
struct ConventionalSystem {
  CVector y;
  CMatrix matrix;    // NE x (L + 1)
  int boundary = 0;
};

// Hankel training matrix; requires training.size() == M + L + NE - 1.
CMatrix build_training_matrix(std::span<const cplx> training, const FrameConfig& cfg);

// Last NE of the M~ collected samples, in reverse order.
CVector collect_received_vector(std::span<const cplx> samples, const FrameConfig& cfg);

// Columns boundary .. boundary + L of the training matrix, built directly.
CMatrix build_conventional_matrix(std::span<const cplx> training, int boundary,
                                  const FrameConfig& cfg);

MeasurementSystem make_measurement_system(std::span<const cplx> samples,
                                          std::span<const cplx> training, const FrameConfig& cfg);

ConventionalSystem make_conventional_system(std::span<const cplx> samples,
                                            std::span<const cplx> training, int boundary,
                                            const FrameConfig& cfg);

inline std::span<const cplx> as_span(const CVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace jfsce
