#include "jfsce/measurement.hpp"

#include <string>

namespace jfsce {

namespace {

void check_training_len(std::span<const cplx> training, const FrameConfig& cfg) {
  const auto expected = static_cast<std::size_t>(cfg.training_len());
  if (training.size() != expected)
    throw DimensionError("training length " + std::to_string(training.size()) +
                         " != M~ = M + L + NE - 1 = " + std::to_string(expected));
}

void check_boundary(int boundary, const FrameConfig& cfg) {
  if (boundary < 0 || boundary > cfg.data_frame_len - 1)
    throw BoundaryRangeError("boundary estimate " + std::to_string(boundary) + " outside [0, " +
                             std::to_string(cfg.data_frame_len - 1) + "]");
}

}  // namespace

CMatrix build_training_matrix(std::span<const cplx> training, const FrameConfig& cfg) {
  cfg.validate();
  check_training_len(training, cfg);
  const int rows = cfg.num_equations;
  const int cols = cfg.combined_len();
  const int last = cfg.training_len() - 1;
  CMatrix X(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) X(r, c) = training[static_cast<std::size_t>(last - r - c)];
  return X;
}

CVector collect_received_vector(std::span<const cplx> samples, const FrameConfig& cfg) {
  cfg.validate();
  const auto expected = static_cast<std::size_t>(cfg.training_len());
  if (samples.size() != expected)
    throw DimensionError("received block has " + std::to_string(samples.size()) +
                         " samples, expected M~ = " + std::to_string(expected));
  CVector y(cfg.num_equations);
  for (int r = 0; r < cfg.num_equations; ++r) y[r] = samples[expected - 1 - static_cast<std::size_t>(r)];
  return y;
}

CMatrix build_conventional_matrix(std::span<const cplx> training, int boundary,
                                  const FrameConfig& cfg) {
  cfg.validate();
  check_training_len(training, cfg);
  check_boundary(boundary, cfg);
  const int rows = cfg.num_equations;
  const int cols = cfg.cir_memory + 1;
  const int last = cfg.training_len() - 1 - boundary;
  CMatrix X(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) X(r, c) = training[static_cast<std::size_t>(last - r - c)];
  return X;
}

MeasurementSystem make_measurement_system(std::span<const cplx> samples,
                                          std::span<const cplx> training, const FrameConfig& cfg) {
  MeasurementSystem s;
  s.y = collect_received_vector(samples, cfg);
  s.matrix = build_training_matrix(training, cfg);
  s.training = Eigen::Map<const CVector>(training.data(), static_cast<Eigen::Index>(training.size()));
  return s;
}

ConventionalSystem make_conventional_system(std::span<const cplx> samples,
                                            std::span<const cplx> training, int boundary,
                                            const FrameConfig& cfg) {
  ConventionalSystem s;
  s.y = collect_received_vector(samples, cfg);
  s.matrix = build_conventional_matrix(training, boundary, cfg);
  s.boundary = boundary;
  return s;
}

}  // namespace jfsce
