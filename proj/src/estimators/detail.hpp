#pragma once

#include <chrono>
#include <vector>

#include "jfsce/estimators.hpp"

namespace jfsce::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Gathers the listed columns of X.
CMatrix gather_columns(const CMatrix& X, const std::vector<int>& cols);

// Least squares on a column subset; returns coefficients aligned with cols.
CVector restricted_least_squares(const CMatrix& X, const CVector& y, const std::vector<int>& cols);

// Indices of the `count` largest magnitudes, ties to the lower index,
// returned in ascending index order.
std::vector<int> largest_indices(const RVector& magnitudes, int count);

// argmax with ties broken toward the lowest index.
Eigen::Index argmax_lowest(const RVector& v);

}  // namespace jfsce::detail
