#include <cmath>
#include <string>

#include "detail.hpp"

namespace jfsce {

namespace {
constexpr double kMaxCondition = 1e12;
}

EstimateReport conventional_estimate(const ConventionalSystem& system, const FrameConfig& cfg,
                                     Method tag) {
  detail::Stopwatch clock;
  const CMatrix& X = system.matrix;
  if (system.boundary < 0 || system.boundary > cfg.data_frame_len - 1)
    throw BoundaryRangeError("boundary estimate " + std::to_string(system.boundary) +
                             " outside [0, M-1]");
  if (X.cols() != cfg.cir_memory + 1 || X.rows() != system.y.size())
    throw DimensionError("conventional system must be NE x (L + 1)");

  Eigen::BDCSVD<CMatrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  const double smin = (X.rows() >= X.cols() && sv.size()) ? sv[sv.size() - 1] : 0.0;
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < kMaxCondition))
    throw IllConditionedError("conventional LS system is rank deficient (condition number " +
                                  std::to_string(cond) + ")",
                              cond);

  const CVector h = svd.solve(system.y);

  EstimateReport r;
  r.method = tag;
  r.estimate = CVector::Zero(cfg.combined_len());
  r.estimate.segment(system.boundary, h.size()) = h;
  r.boundary = system.boundary;
  r.condition_number = cond;
  r.wall_seconds = clock.seconds();
  return r;
}

}  // namespace jfsce
