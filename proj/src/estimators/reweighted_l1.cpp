#include <algorithm>
#include <cmath>

#include "detail.hpp"

namespace jfsce {

namespace {

struct ProxResult {
  int iterations = 0;
  bool converged = false;
};

// Complex soft threshold: shrinks each magnitude by thresh[i], keeps phase.
void soft_threshold(const CVector& u, const RVector& thresh, CVector& out) {
  out.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double m = std::abs(u[i]);
    out[i] = m > thresh[i] ? u[i] * ((m - thresh[i]) / m) : cplx(0.0);
  }
}

// Accelerated proximal gradient (FISTA with backtracking and adaptive
// restart) on ||y - X h||^2 + penalty * sum_i w_i |h_i|, warm-started at h.
ProxResult weighted_lasso(const CMatrix& X, const CVector& y, double penalty, const RVector& w,
                          CVector& h, double& lipschitz, int max_iter, double tol) {
  ProxResult out;
  CVector Xh = X * h;
  CVector z = h, Xz = Xh;
  double t = 1.0;
  double objective = (y - Xh).squaredNorm() + penalty * w.dot(h.cwiseAbs());
  CVector p, Xp;
  for (int it = 0; it < max_iter; ++it) {
    const CVector rz = y - Xz;
    const double fz = rz.squaredNorm();
    const CVector grad = -2.0 * (X.adjoint() * rz);
    for (;;) {
      soft_threshold(z - grad / lipschitz, (penalty / lipschitz) * w, p);
      Xp = X * p;
      const double fp = (y - Xp).squaredNorm();
      const CVector step = p - z;
      const double bound = fz + grad.dot(step).real() + 0.5 * lipschitz * step.squaredNorm();
      if (fp <= bound * (1.0 + 1e-12) + 1e-300) break;
      lipschitz *= 2.0;
    }
    ++out.iterations;
    const double new_objective = (y - Xp).squaredNorm() + penalty * w.dot(p.cwiseAbs());
    const double change = (p - h).norm();
    const double scale = std::max(p.norm(), 1e-300);

    if (new_objective > objective) {
      // restart momentum from the last accepted point
      t = 1.0;
      z = h;
      Xz = Xh;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    z = p + beta * (p - h);
    Xz = Xp + beta * (Xp - Xh);
    h = p;
    Xh = Xp;
    t = t_next;
    objective = new_objective;
    if (change <= tol * scale) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

EstimateReport reweighted_l1(const MeasurementSystem& system, const SolverParams& params) {
  detail::Stopwatch clock;
  const CMatrix& X = system.matrix;
  const CVector& y = system.y;
  const Eigen::Index rows = X.rows(), cols = X.cols();
  if (y.size() != rows) throw DimensionError("received vector length must equal NE");
  const double penalty =
      params.penalty ? *params.penalty
                     : default_l1_penalty(params.noise_variance, static_cast<int>(cols), params.sparsity);
  if (penalty < 0.0) throw ParameterError("R-l1 penalty lambda must be non-negative");
  if (!(params.weight_damping > 0.0)) throw ParameterError("R-l1 epsilon must be positive");

  // Largest squared column norm is a lower bound on ||X||_2^2; backtracking
  // grows the local Lipschitz estimate from there.
  double lipschitz = 2.0 * X.colwise().squaredNorm().maxCoeff();
  if (!(lipschitz > 0.0)) lipschitz = 1.0;

  EstimateReport report;
  report.method = Method::rl1;
  CVector h = CVector::Zero(cols);
  RVector weights = RVector::Ones(cols);
  double eps = params.weight_damping;

  for (int pass = 0; pass < std::max(params.reweight_passes, 1); ++pass) {
    const CVector previous = h;
    const ProxResult inner =
        weighted_lasso(X, y, penalty, weights, h, lipschitz, params.inner_max_iter, params.inner_tol);
    report.iterations += inner.iterations;
    if (!inner.converged) report.flags |= kMaxIterReached;
    report.residual_trace.push_back((y - X * h).norm());

    if (pass == 0) {
      const double peak = h.cwiseAbs().maxCoeff();
      eps = params.weight_damping * (peak > 0.0 ? peak : 1.0);
    }
    // Scaled reweighting eps / (|h_i| + eps): an exactly-zero coefficient
    // keeps unit weight, so the penalty sets the same zero-set threshold in
    // every pass while active coefficients are progressively unshrunk.
    for (Eigen::Index i = 0; i < cols; ++i) weights[i] = eps / (std::abs(h[i]) + eps);

    if (pass > 0 && (h - previous).norm() <= params.inner_tol * std::max(h.norm(), 1e-300)) break;
  }

  report.estimate = std::move(h);
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace jfsce
