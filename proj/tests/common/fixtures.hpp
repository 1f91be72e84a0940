#pragma once

// Shared instance builders and brute-force oracles for the test binaries.
// The oracles deliberately avoid the library's own fast paths.

#include <complex>
#include <cstdint>
#include <vector>

#include "jfsce/estimators.hpp"
#include "jfsce/measurement.hpp"
#include "jfsce/rng.hpp"
#include "jfsce/signal_model.hpp"

namespace fixtures {

using jfsce::cplx;
using jfsce::CMatrix;
using jfsce::CVector;

inline CVector random_vector(Eigen::Index n, std::uint64_t seed, double variance = 1.0) {
  jfsce::Rng rng(seed);
  return rng.complex_gaussian_vector(n, variance);
}

// y(n) = sum_l taps[l] s(n - l) with s(n) = 0 for n < 0, written as a plain
// double loop over the full output.
inline CVector direct_convolution(const CVector& s, const CVector& taps) {
  CVector y = CVector::Zero(s.size());
  for (Eigen::Index n = 0; n < s.size(); ++n)
    for (Eigen::Index l = 0; l < taps.size() && l <= n; ++l) y[n] += taps[l] * s[n - l];
  return y;
}

// One received training frame on the synthetic model.
struct ModelInstance {
  jfsce::FrameConfig frame;
  jfsce::CombinedChannel truth;
  CVector symbols;   // history, training, data
  CVector received;  // channel output aligned with `symbols`
  CVector training;
  CVector samples;   // received samples under the training frame
  jfsce::MeasurementSystem system;
  int history = 0;
};

inline ModelInstance make_instance(const jfsce::FrameConfig& frame, const jfsce::Cir& h, int boundary,
                                   double noise_variance, std::uint64_t seed, int tail = 0) {
  ModelInstance in;
  in.frame = frame;
  in.truth = jfsce::build_combined_channel(h, boundary, frame.data_frame_len);
  in.history = frame.combined_len() - 1;
  const int mt = frame.training_len();
  in.symbols = jfsce::generate_qpsk(in.history + mt + tail, jfsce::derive_seed(seed, {2}));
  in.received = jfsce::channel_output({}, jfsce::as_span(in.symbols), in.truth,
                                      jfsce::NoiseSpec{noise_variance, jfsce::derive_seed(seed, {3})});
  in.training = in.symbols.segment(in.history, mt);
  in.samples = in.received.segment(in.history, mt);
  in.system = jfsce::make_measurement_system(jfsce::as_span(in.samples), jfsce::as_span(in.training), frame);
  return in;
}

inline std::vector<int> support_of(const CVector& v, double tol = 0.0) {
  std::vector<int> s;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > tol) s.push_back(static_cast<int>(i));
  return s;
}

// Log evidence of the SBL model up to a constant:
// -log det(S) - y^H S^-1 y with S = sigma^2 I + X diag(gamma) X^H.
inline double sbl_log_evidence(const CMatrix& X, const CVector& y, const Eigen::VectorXd& gamma,
                               double noise_variance) {
  CMatrix S = X * gamma.cast<cplx>().asDiagonal() * X.adjoint();
  S.diagonal().array() += noise_variance;
  const Eigen::LDLT<CMatrix> ldlt(S);
  const Eigen::VectorXd d = ldlt.vectorD().real();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) logdet += std::log(d[i]);
  const cplx quad = y.dot(ldlt.solve(y));
  return -logdet - quad.real();
}

}  // namespace fixtures
