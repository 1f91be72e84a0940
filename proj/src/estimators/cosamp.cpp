#include <algorithm>
#include <string>

#include "detail.hpp"

namespace jfsce {

EstimateReport cosamp(const MeasurementSystem& system, const SolverParams& params) {
  detail::Stopwatch clock;
  const CMatrix& X = system.matrix;
  const CVector& y = system.y;
  const Eigen::Index rows = X.rows(), cols = X.cols();
  if (y.size() != rows) throw DimensionError("received vector length must equal NE");
  if (params.sparsity < 1) throw ParameterError("CoSaMP sparsity budget must be >= 1");
  const int k = static_cast<int>(std::min<Eigen::Index>(params.sparsity, cols));

  EstimateReport report;
  report.method = Method::cosamp;
  if (3 * k > rows) report.flags |= kMergeUnderdetermined;

  const double y_norm = y.norm();
  CVector h = CVector::Zero(cols);
  CVector residual = y;
  std::vector<int> support, previous;

  CVector best = h;
  double best_norm = y_norm;
  int without_progress = 0;
  double last_norm = y_norm;

  for (int it = 0; it < params.max_iter; ++it) {
    const RVector proxy = (X.adjoint() * residual).cwiseAbs();
    std::vector<int> merged = detail::largest_indices(proxy, 2 * k);
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    const CVector b = detail::restricted_least_squares(X, y, merged);
    RVector mags = RVector::Zero(cols);
    for (std::size_t i = 0; i < merged.size(); ++i)
      mags[merged[i]] = std::abs(b[static_cast<Eigen::Index>(i)]);
    support = detail::largest_indices(mags, k);

    // Keep the pruned LS coefficients as the new iterate.
    h.setZero();
    for (int idx : support) {
      const auto pos = std::lower_bound(merged.begin(), merged.end(), idx) - merged.begin();
      h[idx] = b[pos];
    }
    residual = y - detail::gather_columns(X, support) * h(support);

    const double rn = residual.norm();
    report.residual_trace.push_back(rn);
    ++report.iterations;

    if (rn < best_norm) {
      best_norm = rn;
      best = h;
    }
    without_progress = rn >= last_norm ? without_progress + 1 : 0;
    last_norm = rn;

    if (rn <= params.tol * y_norm) break;
    if (support == previous) break;
    if (without_progress >= 3) {
      report.flags |= kStagnation;
      break;
    }
    previous = support;
    if (it + 1 == params.max_iter) report.flags |= kMaxIterReached;
  }

  report.estimate = std::move(best);
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace jfsce
