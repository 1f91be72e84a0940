#include <algorithm>
#include <cmath>

#include "detail.hpp"

namespace jfsce {

EstimateReport classical_jfsce(const MeasurementSystem& system) {
  detail::Stopwatch clock;
  const CMatrix& X = system.matrix;
  const Eigen::Index rows = X.rows(), cols = X.cols();
  if (system.y.size() != rows) throw DimensionError("received vector length must equal NE");

  // Pseudo-inverse through the eigen-decomposition of the smaller Gram
  // matrix; eigenvalues below a relative cutoff are treated as zero so the
  // result is the minimum-norm least-squares solution in every shape.
  const bool wide = rows <= cols;
  const CMatrix gram = wide ? CMatrix(X * X.adjoint()) : CMatrix(X.adjoint() * X);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  const RVector& lam = eig.eigenvalues();
  const double lmax = lam.size() ? lam.maxCoeff() : 0.0;
  const double cutoff = lmax * static_cast<double>(std::max(rows, cols)) *
                        std::numeric_limits<double>::epsilon();
  RVector inv = RVector::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] > cutoff) inv[i] = 1.0 / lam[i];
  }
  const CMatrix& V = eig.eigenvectors();
  CVector h;
  if (wide) {
    const CVector t = V * inv.asDiagonal() * (V.adjoint() * system.y);
    h = X.adjoint() * t;
  } else {
    h = V * (inv.asDiagonal() * (V.adjoint() * (X.adjoint() * system.y)));
  }

  EstimateReport r;
  r.method = Method::classical;
  r.estimate = std::move(h);
  const double smallest = lam.size() ? std::max(lam.minCoeff(), 0.0) : 0.0;
  r.condition_number = smallest > 0.0 ? std::sqrt(lmax / smallest)
                                      : std::numeric_limits<double>::infinity();
  r.wall_seconds = clock.seconds();
  return r;
}

}  // namespace jfsce
