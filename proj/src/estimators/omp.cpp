#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"

namespace jfsce {

EstimateReport omp(const MeasurementSystem& system, const SolverParams& params) {
  detail::Stopwatch clock;
  const CMatrix& X = system.matrix;
  const CVector& y = system.y;
  const Eigen::Index rows = X.rows(), cols = X.cols();
  if (y.size() != rows) throw DimensionError("received vector length must equal NE");
  if (params.sparsity < 1) throw ParameterError("OMP sparsity budget must be >= 1");
  if (params.sparsity > rows)
    throw ParameterError("OMP sparsity budget k = " + std::to_string(params.sparsity) +
                         " exceeds NE = " + std::to_string(rows));

  const int budget = static_cast<int>(std::min<Eigen::Index>(params.sparsity, cols));
  const double stop_norm = params.tol * y.norm();

  // Orthonormal basis Q of the selected columns and the matching upper
  // triangular R, grown one column per iteration (Gram-Schmidt with one
  // reorthogonalization pass).
  CMatrix Q(rows, budget);
  CMatrix R = CMatrix::Zero(budget, budget);
  std::vector<int> support;
  std::vector<char> selected(static_cast<std::size_t>(cols), 0);
  CVector residual = y;

  EstimateReport report;
  report.method = Method::omp;

  while (static_cast<int>(support.size()) < budget && residual.norm() > stop_norm &&
         report.iterations < params.max_iter) {
    const RVector proxy = (X.adjoint() * residual).cwiseAbs();
    const auto j = static_cast<int>(detail::argmax_lowest(proxy));
    if (selected[static_cast<std::size_t>(j)])
      throw NumericalStagnationError("OMP reselected column " + std::to_string(j) +
                                     " with a nonzero residual");

    const Eigen::Index s = static_cast<Eigen::Index>(support.size());
    CVector q = X.col(j);
    CVector coeffs = CVector::Zero(s);
    for (int pass = 0; pass < 2; ++pass) {
      if (s == 0) break;
      const CVector c = Q.leftCols(s).adjoint() * q;
      q -= Q.leftCols(s) * c;
      coeffs += c;
    }
    const double qn = q.norm();
    if (!(qn > 1e-12 * X.col(j).norm()))
      throw NumericalStagnationError("OMP selected column " + std::to_string(j) +
                                     " lying in the span of the current support");
    Q.col(s) = q / qn;
    R.col(s).head(s) = coeffs;
    R(s, s) = qn;
    residual -= Q.col(s) * Q.col(s).dot(residual);

    support.push_back(j);
    selected[static_cast<std::size_t>(j)] = 1;
    ++report.iterations;
    report.residual_trace.push_back(residual.norm());
  }

  report.estimate = CVector::Zero(cols);
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());
  if (s > 0) {
    const CVector rhs = Q.leftCols(s).adjoint() * y;
    const CVector c = R.topLeftCorner(s, s).triangularView<Eigen::Upper>().solve(rhs);
    for (Eigen::Index i = 0; i < s; ++i) report.estimate[support[static_cast<std::size_t>(i)]] = c[i];
  }
  if (report.iterations >= params.max_iter && s < budget) report.flags |= kMaxIterReached;
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace jfsce
