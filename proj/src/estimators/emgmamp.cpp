#include <algorithm>
#include <cmath>
#include <numbers>

#include "detail.hpp"

namespace jfsce {

namespace {

constexpr double kSnrInit = 100.0;
constexpr double kVarFloor = 1e-14;

// Per-coefficient posterior under the Bernoulli / Gaussian-mixture prior
// given a scalar AWGN observation r = x + CN(0, rvar).
struct Denoised {
  CVector mean;
  RVector var;
  RVector active;   // posterior probability of being nonzero
  Eigen::MatrixXd resp;     // n x L component responsibilities
  CMatrix comp_mean;        // n x L component posterior means
  Eigen::MatrixXd comp_var; // n x L component posterior variances
};

void denoise(const GmPrior& prior, const CVector& r, const RVector& rvar, Denoised& out) {
  const Eigen::Index n = r.size();
  const auto L = static_cast<Eigen::Index>(prior.components.size());
  out.mean.resize(n);
  out.var.resize(n);
  out.active.resize(n);
  out.resp.resize(n, L);
  out.comp_mean.resize(n, L);
  out.comp_var.resize(n, L);
  const double log_off = std::log(std::max(1.0 - prior.sparsity_rate, 0.0));
  std::vector<double> logw(static_cast<std::size_t>(L) + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = rvar[j];
    const cplx rj = r[j];
    logw[0] = log_off - std::log(std::numbers::pi * v) - std::norm(rj) / v;
    double peak = logw[0];
    for (Eigen::Index l = 0; l < L; ++l) {
      const GmComponent& c = prior.components[static_cast<std::size_t>(l)];
      const double s = c.variance + v;
      logw[static_cast<std::size_t>(l) + 1] = std::log(prior.sparsity_rate * c.weight) -
                                              std::log(std::numbers::pi * s) - std::norm(rj - c.mean) / s;
      peak = std::max(peak, logw[static_cast<std::size_t>(l) + 1]);
    }
    double total = 0.0;
    for (double& lw : logw) {
      lw = std::exp(lw - peak);
      total += lw;
    }
    cplx m(0.0);
    double second = 0.0, act = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) {
      const GmComponent& c = prior.components[static_cast<std::size_t>(l)];
      const double w = logw[static_cast<std::size_t>(l) + 1] / total;
      const double s = c.variance + v;
      const cplx cm = (rj * c.variance + c.mean * v) / s;
      const double cv = c.variance * v / s;
      out.resp(j, l) = w;
      out.comp_mean(j, l) = cm;
      out.comp_var(j, l) = cv;
      m += w * cm;
      second += w * (cv + std::norm(cm));
      act += w;
    }
    out.mean[j] = m;
    out.var[j] = std::max(second - std::norm(m), kVarFloor);
    out.active[j] = act;
  }
}

GmPrior initial_prior(const CMatrix& X, const CVector& y, int components) {
  const auto m = static_cast<double>(X.rows());
  const auto n = static_cast<int>(X.cols());
  GmPrior p;
  p.sparsity_rate = sparsity_rate_from_measurements(static_cast<int>(X.rows()), n);
  p.noise_variance = std::max(y.squaredNorm() / ((kSnrInit + 1.0) * m), kVarFloor);
  const double energy = std::max(y.squaredNorm() - m * p.noise_variance, kVarFloor);
  const double active_var = std::max(energy / (p.sparsity_rate * X.squaredNorm()), kVarFloor);
  // Log-spaced component variances whose weighted mean equals active_var.
  components = std::max(components, 1);
  std::vector<double> scales;
  double mean_scale = 0.0;
  for (int l = 0; l < components; ++l) {
    const double e = components == 1 ? 0.0 : 2.0 * l / (components - 1) - 1.0;
    scales.push_back(std::pow(4.0, e));
    mean_scale += scales.back() / components;
  }
  for (int l = 0; l < components; ++l)
    p.components.push_back({1.0 / components, cplx(0.0), active_var * scales[static_cast<std::size_t>(l)] / mean_scale});
  return p;
}

struct GampState {
  CVector xhat;
  RVector xvar;
  CVector shat;
  RVector svar;
  CVector zhat;
  RVector zvar;
  CVector rhat;
  RVector rvar;
};

GampState prior_state(const GmPrior& prior, Eigen::Index m, Eigen::Index n) {
  cplx mean(0.0);
  double second = 0.0;
  for (const auto& c : prior.components) {
    mean += c.weight * c.mean;
    second += c.weight * (c.variance + std::norm(c.mean));
  }
  mean *= prior.sparsity_rate;
  second *= prior.sparsity_rate;
  GampState s;
  s.xhat = CVector::Constant(n, mean);
  s.xvar = RVector::Constant(n, std::max(second - std::norm(mean), kVarFloor));
  s.shat = CVector::Zero(m);
  s.svar = RVector::Zero(m);
  return s;
}

struct GampRun {
  int iterations = 0;
  bool diverged = false;
};

// Sum-product GAMP with an AWGN output channel, damped by `step`.
GampRun run_gamp(const CMatrix& A, const Eigen::MatrixXd& S, const CVector& y, const GmPrior& prior,
                 double step, int max_iter, double tol, GampState& st, Denoised& den) {
  GampRun run;
  const double psi = prior.noise_variance;
  const double reference = y.squaredNorm();
  bool first = st.svar.isZero();
  for (int it = 0; it < max_iter; ++it) {
    const RVector pvar = (S * st.xvar).cwiseMax(kVarFloor);
    const CVector phat = A * st.xhat - pvar.cwiseProduct(st.shat.real()).cast<cplx>() -
                         cplx(0.0, 1.0) * pvar.cwiseProduct(st.shat.imag()).cast<cplx>();
    const RVector denom = (pvar.array() + psi).matrix();
    const CVector shat_new = (y - phat).cwiseQuotient(denom.cast<cplx>());
    const RVector svar_new = denom.cwiseInverse();
    st.zhat = (pvar.cast<cplx>().cwiseProduct(y) + psi * phat).cwiseQuotient(denom.cast<cplx>());
    st.zvar = pvar.cwiseProduct(denom.cwiseInverse()) * psi;
    if (first) {
      st.shat = shat_new;
      st.svar = svar_new;
      first = false;
    } else {
      st.shat = step * shat_new + (1.0 - step) * st.shat;
      st.svar = step * svar_new + (1.0 - step) * st.svar;
    }

    st.rvar = (S.transpose() * st.svar).cwiseMax(kVarFloor).cwiseInverse();
    st.rhat = st.xhat + st.rvar.cast<cplx>().cwiseProduct(A.adjoint() * st.shat);
    denoise(prior, st.rhat, st.rvar, den);

    const CVector xold = st.xhat;
    st.xhat = step * den.mean + (1.0 - step) * st.xhat;
    st.xvar = step * den.var + (1.0 - step) * st.xvar;
    ++run.iterations;

    if ((y - A * st.xhat).squaredNorm() > 5.0 * reference) {
      run.diverged = true;
      break;
    }
    if ((st.xhat - xold).norm() <= tol * std::max(st.xhat.norm(), 1e-300)) break;
  }
  return run;
}

void em_update(GmPrior& prior, const Denoised& den, const CVector& y, const GampState& st,
               bool learn_noise) {
  const Eigen::Index n = den.mean.size();
  const double total_active = den.active.sum();
  prior.sparsity_rate = std::clamp(total_active / static_cast<double>(n), 1e-8, 1.0 - 1e-8);
  if (total_active > 0.0) {
    for (std::size_t l = 0; l < prior.components.size(); ++l) {
      const auto col = static_cast<Eigen::Index>(l);
      const double w = den.resp.col(col).sum();
      if (w <= 1e-12) continue;
      GmComponent& c = prior.components[l];
      c.weight = w / total_active;
      c.mean = den.resp.col(col).cast<cplx>().dot(den.comp_mean.col(col)) / w;
      double v = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        v += den.resp(j, col) * (std::norm(c.mean - den.comp_mean(j, col)) + den.comp_var(j, col));
      c.variance = std::max(v / w, kVarFloor);
    }
    double sum = 0.0;
    for (const auto& c : prior.components) sum += c.weight;
    for (auto& c : prior.components) c.weight /= sum;
  }
  if (learn_noise) {
    const double m = static_cast<double>(y.size());
    prior.noise_variance =
        std::max(((y - st.zhat).squaredNorm() + st.zvar.sum()) / m, kVarFloor);
  }
}

}  // namespace

EstimateReport emgmamp(const MeasurementSystem& system, const SolverParams& params,
                       const EmGmAmpOptions& options) {
  detail::Stopwatch clock;
  const CMatrix& A = system.matrix;
  const CVector& y = system.y;
  if (y.size() != A.rows()) throw DimensionError("received vector length must equal NE");
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw ParameterError("EMGMAMP damping must lie in (0, 1]");

  GmPrior prior = options.initial_prior ? *options.initial_prior
                                        : initial_prior(A, y, options.components);
  if (!options.learn_noise && params.noise_variance > 0.0) prior.noise_variance = params.noise_variance;
  prior.validate();

  const Eigen::MatrixXd S = A.cwiseAbs2();
  EstimateReport report;
  report.method = Method::emgmamp;

  double step = options.damping;
  GampState st = prior_state(prior, A.rows(), A.cols());
  Denoised den;
  const GmPrior start = prior;
  int restarts = 0;
  bool converged = false;
  for (int em = 0; em < options.max_em_iter; ++em) {
    const CVector before = st.xhat;
    const GampRun run = run_gamp(A, S, y, prior, step, options.max_gamp_iter, options.gamp_tol, st, den);
    report.iterations += run.iterations;
    if (run.diverged) {
      // Restart from the initial prior with heavier damping.
      report.flags |= kDampedFallback;
      if (++restarts > 4) break;
      step *= 0.5;
      prior = start;
      st = prior_state(prior, A.rows(), A.cols());
      continue;
    }
    em_update(prior, den, y, st, options.learn_noise || params.noise_variance <= 0.0);
    if (em > 0 && (st.xhat - before).norm() <= options.em_tol * std::max(st.xhat.norm(), 1e-300)) {
      converged = true;
      break;
    }
  }
  if (!converged) report.flags |= kMaxIterReached;

  report.estimate = st.xhat;
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace jfsce
