#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "detail.hpp"
#include "jfsce/kernels.hpp"

namespace jfsce {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 9> kMethodNames{{
    {Method::conventional, "conventional"},
    {Method::genie_conventional, "genie-conventional"},
    {Method::classical, "classical"},
    {Method::omp, "omp"},
    {Method::cosamp, "cosamp"},
    {Method::rl1, "rl1"},
    {Method::sbl, "sbl"},
    {Method::emgmamp, "emgmamp"},
    {Method::ideal, "ideal"},
}};

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames)
    if (method == m) return name;
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames)
    if (n == name) return method;
  return std::nullopt;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> v;
    for (const auto& entry : kMethodNames) v.push_back(entry.first);
    return v;
  }();
  return methods;
}

std::string method_list() {
  std::string out;
  for (const auto& entry : kMethodNames) {
    if (!out.empty()) out += ",";
    out += entry.second;
  }
  return out;
}

void GmPrior::validate() const {
  if (sparsity_rate < 0.0 || sparsity_rate > 1.0)
    throw ParameterError("sparsity rate must lie in [0, 1]");
  if (components.empty()) throw ParameterError("Gaussian mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0) throw ParameterError("mixture weights must be non-negative");
    if (!(c.variance > 0.0)) throw ParameterError("mixture variances must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("mixture weights must sum to one");
  if (!(noise_variance > 0.0)) throw ParameterError("noise variance must be positive");
}

int correlate_boundary(std::span<const cplx> received, std::span<const cplx> training,
                       int data_frame_len) {
  if (data_frame_len < 1) throw ParameterError("data frame length must be >= 1");
  if (received.size() < training.size())
    throw InsufficientSamplesError("received block (" + std::to_string(received.size()) +
                                   " samples) shorter than the training frame (" +
                                   std::to_string(training.size()) + ")");
  int best = 0;
  double best_mag = -1.0;
  for (int d = 0; d < data_frame_len; ++d) {
    const auto offset = static_cast<std::size_t>(d);
    if (offset >= received.size()) break;
    const std::size_t overlap = std::min(training.size(), received.size() - offset);
    const double mag = std::abs(kernels::dotc(received.subspan(offset, overlap), training.first(overlap)));
    if (mag > best_mag) {
      best_mag = mag;
      best = d;
    }
  }
  return best;
}

EstimateReport ideal_estimate(const CombinedChannel& truth) {
  EstimateReport r;
  r.estimate = truth.taps;
  r.method = Method::ideal;
  return r;
}

double default_l1_penalty(double noise_variance, int combined_len, int sparsity) {
  return 4.0 * std::sqrt(std::max(noise_variance, 0.0)) *
         std::sqrt(static_cast<double>(std::max(combined_len - sparsity, 0)));
}

double sparsity_rate_from_measurements(int num_equations, int combined_len) {
  // k log(n / k) is increasing on (0, n / e]; bisect for k there.
  const double n = combined_len;
  const double m = num_equations;
  double lo = 1e-9, hi = n / std::exp(1.0);
  auto f = [n](double k) { return k * std::log(n / k); };
  if (f(hi) <= m) return std::clamp(hi / n, 0.0, 1.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < m ? lo : hi) = mid;
  }
  return std::clamp(0.5 * (lo + hi) / n, 0.0, 1.0);
}

int derive_boundary(const CVector& estimate, int data_frame_len, double threshold) {
  const double peak = estimate.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw NoBoundaryError("estimate is identically zero; no boundary to derive");
  const double level = threshold * peak;
  Eigen::Index first = 0;
  for (Eigen::Index i = 0; i < estimate.size(); ++i) {
    if (std::abs(estimate[i]) >= level) {
      first = i;
      break;
    }
  }
  return static_cast<int>(std::clamp<Eigen::Index>(first, 0, data_frame_len - 1));
}

int derive_boundary(const EstimateReport& report, int data_frame_len, double threshold) {
  return derive_boundary(report.estimate, data_frame_len, threshold);
}

namespace detail {

CMatrix gather_columns(const CMatrix& X, const std::vector<int>& cols) {
  CMatrix out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return out;
}

CVector restricted_least_squares(const CMatrix& X, const CVector& y, const std::vector<int>& cols) {
  if (cols.empty()) return CVector();
  const CMatrix A = gather_columns(X, cols);
  return A.colPivHouseholderQr().solve(y);
}

std::vector<int> largest_indices(const RVector& magnitudes, int count) {
  std::vector<int> idx(static_cast<std::size_t>(magnitudes.size()));
  std::iota(idx.begin(), idx.end(), 0);
  count = std::clamp(count, 0, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(), [&](int a, int b) {
    if (magnitudes[a] != magnitudes[b]) return magnitudes[a] > magnitudes[b];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Eigen::Index argmax_lowest(const RVector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace detail

}  // namespace jfsce
