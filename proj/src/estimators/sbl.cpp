#include <algorithm>
#include <cmath>

#include "detail.hpp"

namespace jfsce {

namespace {

struct Posterior {
  CVector mean;
  RVector variance;    // diag(Sigma)
  CMatrix covariance;  // only when requested
  bool jittered = false;
};

// Posterior of h under h ~ CN(0, diag(gamma)), y = X h + CN(0, sigma^2 I).
// Sigma = (Gamma^-1 + X^H X / sigma^2)^-1 is evaluated as
// G (I + G X^H X G / sigma^2)^-1 G with G = Gamma^1/2, which stays well
// conditioned as entries of gamma collapse to zero.
Posterior posterior(const CMatrix& gram, const CVector& xhy, const RVector& gamma,
                    double noise_variance, bool full_covariance) {
  const Eigen::Index n = gamma.size();
  const RVector g = gamma.cwiseMax(0.0).cwiseSqrt();
  CMatrix B = (g.asDiagonal() * gram * g.asDiagonal()) / noise_variance;
  B.diagonal().array() += 1.0;

  Posterior out;
  Eigen::LLT<CMatrix> llt(B);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * B.diagonal().real().sum() / static_cast<double>(n);
    B.diagonal().array() += jitter;
    llt.compute(B);
    out.jittered = true;
  }
  // B^-1 = L^-H L^-1; diag(B^-1)_i is the squared norm of column i of L^-1.
  CMatrix Linv = CMatrix::Identity(n, n);
  llt.matrixL().solveInPlace(Linv);
  const RVector binv_diag = Linv.colwise().squaredNorm().transpose();

  const CVector rhs = g.asDiagonal() * xhy / noise_variance;
  out.mean = g.asDiagonal() * llt.solve(rhs);
  out.variance = gamma.cwiseMax(0.0).cwiseProduct(binv_diag);
  if (full_covariance) {
    const CMatrix binv = Linv.adjoint() * Linv;
    out.covariance = g.asDiagonal() * binv * g.asDiagonal();
  }
  return out;
}

double effective_noise(const MeasurementSystem& system, double noise_variance, bool& jittered) {
  if (noise_variance > 0.0) return noise_variance;
  jittered = true;
  const double scale = system.y.squaredNorm() / std::max<Eigen::Index>(system.y.size(), 1);
  return std::max(1e-12 * scale, 1e-300);
}

}  // namespace

SblState sbl_em_step(const MeasurementSystem& system, const RVector& gamma, double noise_variance) {
  const CMatrix& X = system.matrix;
  if (gamma.size() != X.cols()) throw DimensionError("gamma length must equal M + L");
  if ((gamma.array() < 0.0).any()) throw ParameterError("SBL hyper-parameters must be non-negative");
  bool jittered = false;
  const double sigma2 = effective_noise(system, noise_variance, jittered);
  const CMatrix gram = X.adjoint() * X;
  const CVector xhy = X.adjoint() * system.y;
  Posterior post = posterior(gram, xhy, gamma, sigma2, true);
  SblState s;
  s.mean = std::move(post.mean);
  s.covariance = std::move(post.covariance);
  s.gamma = s.mean.cwiseAbs2() + post.variance;
  s.jittered = jittered || post.jittered;
  return s;
}

EstimateReport sbl(const MeasurementSystem& system, const SolverParams& params) {
  detail::Stopwatch clock;
  const CMatrix& X = system.matrix;
  if (system.y.size() != X.rows()) throw DimensionError("received vector length must equal NE");
  const Eigen::Index n = X.cols();

  EstimateReport report;
  report.method = Method::sbl;
  bool jittered = false;
  const double sigma2 = effective_noise(system, params.noise_variance, jittered);

  const CMatrix gram = X.adjoint() * X;
  const CVector xhy = X.adjoint() * system.y;
  RVector gamma = RVector::Ones(n);
  CVector mean = CVector::Zero(n);
  bool converged = false;
  for (int it = 0; it < params.max_iter; ++it) {
    const Posterior post = posterior(gram, xhy, gamma, sigma2, false);
    jittered = jittered || post.jittered;
    const RVector next = post.mean.cwiseAbs2() + post.variance;
    const double change = (next - gamma).cwiseAbs().maxCoeff();
    gamma = next;
    mean = post.mean;
    ++report.iterations;
    if (change <= params.sbl_tol * std::max(gamma.maxCoeff(), 1e-300)) {
      converged = true;
      break;
    }
  }
  if (!converged) report.flags |= kMaxIterReached;
  if (jittered) report.flags |= kJitterRegularized;

  const double floor = params.prune_ratio * gamma.maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i)
    if (gamma[i] < floor) mean[i] = 0.0;
  report.estimate = std::move(mean);
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace jfsce
