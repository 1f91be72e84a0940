#pragma once

// Frame-boundary and channel estimators.
//
// Every estimator returns an EstimateReport whose `estimate` has the full
// combined-channel length M + L, so the downstream equalizer never needs to
// know which method produced it. The separate sync-then-estimate receiver
// embeds its (L + 1)-tap estimate at the detected boundary.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jfsce/measurement.hpp"
#include "jfsce/signal_model.hpp"
#include "jfsce/types.hpp"

namespace jfsce {

enum class Method {
  conventional,
  genie_conventional,
  classical,
  omp,
  cosamp,
  rl1,
  sbl,
  emgmamp,
  ideal,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
const std::vector<Method>& all_methods();
std::string method_list();  // comma-separated, for error messages

// Report flags. None of them is an error; they record fallbacks taken.
enum ReportFlag : unsigned {
  kMaxIterReached = 1u << 0,
  kStagnation = 1u << 1,
  kJitterRegularized = 1u << 2,
  kDampedFallback = 1u << 3,
  kMergeUnderdetermined = 1u << 4,  // CoSaMP with 3k > NE
};

struct EstimateReport {
  CVector estimate;
  Method method = Method::ideal;
  std::optional<int> boundary;  // set by the conventional receivers only
  int iterations = 0;
  double wall_seconds = 0.0;
  double condition_number = std::numeric_limits<double>::quiet_NaN();
  unsigned flags = 0;
  std::vector<double> residual_trace;  // residual norm after each iteration (greedy solvers)

  bool has_flag(ReportFlag f) const { return (flags & f) != 0; }
};

struct SolverParams {
  int sparsity = 1;                        // k
  std::optional<double> penalty;           // R-l1 lambda; default 4 sigma sqrt(M + L - k)
  double weight_damping = 1e-3;            // R-l1 epsilon, relative to max |h| of the first pass
  int max_iter = 200;
  double tol = 1e-10;
  double noise_variance = 0.0;             // sigma^2, known to SBL / EMGMAMP / lambda rule
  int reweight_passes = 5;                 // R-l1 outer passes
  int inner_max_iter = 2000;               // R-l1 proximal-gradient iterations per pass
  double inner_tol = 1e-7;                 // relative iterate change ending a pass
  double prune_ratio = 1e-6;               // SBL: gamma below ratio * max(gamma) is zero
  double sbl_tol = 1e-6;                   // SBL: max |gamma change| relative to max(gamma)
};

// Bernoulli / Gaussian-mixture prior learned by EMGMAMP.
struct GmComponent {
  double weight = 1.0;
  cplx mean{0.0, 0.0};
  double variance = 1.0;
};

struct GmPrior {
  double sparsity_rate = 0.1;  // eta
  std::vector<GmComponent> components;
  double noise_variance = 1.0;  // phi

  // Throws ParameterError when weights are negative, do not sum to one,
  // or a variance is not positive.
  void validate() const;
};

struct EmGmAmpOptions {
  int components = 3;
  double damping = 0.7;          // step toward each new GAMP iterate
  int max_em_iter = 30;
  int max_gamp_iter = 30;
  double em_tol = 1e-5;          // relative change of the estimate ending the EM loop
  double gamp_tol = 1e-6;        // relative change ending one GAMP run
  bool learn_noise = true;
  std::optional<GmPrior> initial_prior;
};

struct SblState {
  RVector gamma;       // prior variances, one per unknown
  CVector mean;        // posterior mean
  CMatrix covariance;  // posterior covariance (Hermitian PSD)
  bool jittered = false;
};

// Cross-correlates the received block against the training sequence and
// returns argmax_d |sum_n received(n + d) conj(training(n))| over
// d in [0, M - 1]; lags running past the block use the available overlap.
int correlate_boundary(std::span<const cplx> received, std::span<const cplx> training,
                       int data_frame_len);

EstimateReport conventional_estimate(const ConventionalSystem& system, const FrameConfig& cfg,
                                     Method tag = Method::conventional);
EstimateReport classical_jfsce(const MeasurementSystem& system);
EstimateReport omp(const MeasurementSystem& system, const SolverParams& params);
EstimateReport cosamp(const MeasurementSystem& system, const SolverParams& params);
EstimateReport reweighted_l1(const MeasurementSystem& system, const SolverParams& params);
EstimateReport sbl(const MeasurementSystem& system, const SolverParams& params);
EstimateReport emgmamp(const MeasurementSystem& system, const SolverParams& params,
                       const EmGmAmpOptions& options = {});
EstimateReport ideal_estimate(const CombinedChannel& truth);

// One SBL EM step from the given prior variances: E-step posterior, then
// gamma <- |mu|^2 + diag(Sigma).
SblState sbl_em_step(const MeasurementSystem& system, const RVector& gamma, double noise_variance);

// Default R-l1 penalty 4 sigma sqrt(M + L - k).
double default_l1_penalty(double noise_variance, int combined_len, int sparsity);

// Sparsity rate from inverting NE = c k log((M + L) / k) at c = 1.
double sparsity_rate_from_measurements(int num_equations, int combined_len);

// Smallest index whose magnitude reaches threshold * max, clipped to [0, M-1].
int derive_boundary(const CVector& estimate, int data_frame_len, double threshold = 0.1);
int derive_boundary(const EstimateReport& report, int data_frame_len, double threshold = 0.1);

}  // namespace jfsce
