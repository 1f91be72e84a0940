#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "jfsce/estimators.hpp"

using namespace jfsce;

namespace {

double rel_err(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

std::vector<int> largest_k(const CVector& v, int k) {
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](int a, int b) { return std::abs(v[a]) > std::abs(v[b]); });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

const FrameConfig kBenchmark{1000, 100, 148, 1};
const FrameConfig kSmall{100, 20, 40, 1};

}  // namespace

TEST_CASE("correlation locks to the strongest path of the benchmark channel") {
  const auto in = fixtures::make_instance(kBenchmark, benchmark_cir(), 500, 0.0, 1, kBenchmark.data_frame_len);
  const CVector block = in.received.segment(in.history, kBenchmark.training_len() + kBenchmark.data_frame_len - 1);
  CHECK(correlate_boundary(as_span(block), as_span(in.training), 1000) == 514);
  CHECK_THROWS_AS(correlate_boundary(as_span(block).first(10), as_span(in.training), 1000),
                  InsufficientSamplesError);
}

TEST_CASE("OMP recovers a noiseless sparse channel exactly") {
  const auto in = fixtures::make_instance(kBenchmark, benchmark_cir(), 500, 0.0, 2);
  SolverParams p;
  p.sparsity = 10;
  const EstimateReport r = omp(in.system, p);
  CHECK(fixtures::support_of(r.estimate) == in.truth.support);
  CHECK(rel_err(r.estimate, in.truth.taps) < 1e-8);
  CHECK(r.iterations == 10);
}

TEST_CASE("OMP residual norm never increases") {
  for (int s = 0; s < 5; ++s) {
    const auto in = fixtures::make_instance(kSmall, random_sparse_cir(20, 6, 10 + s), 37, 0.05, 20 + s);
    SolverParams p;
    p.sparsity = 25;
    const EstimateReport r = omp(in.system, p);
    REQUIRE(r.residual_trace.size() == static_cast<std::size_t>(r.iterations));
    double prev = in.system.y.norm();
    for (double v : r.residual_trace) {
      CHECK(v <= prev * (1.0 + 1e-12));
      prev = v;
    }
  }
}

TEST_CASE("OMP parameter errors") {
  const auto in = fixtures::make_instance(kSmall, random_sparse_cir(20, 4, 1), 10, 0.0, 3);
  SolverParams p;
  p.sparsity = 41;
  CHECK_THROWS_AS(omp(in.system, p), ParameterError);
  p.sparsity = 0;
  CHECK_THROWS_AS(omp(in.system, p), ParameterError);
}

TEST_CASE("CoSaMP recovers a noiseless sparse channel exactly") {
  const auto in = fixtures::make_instance(kBenchmark, benchmark_cir(), 500, 0.0, 4);
  SolverParams p;
  p.sparsity = 10;
  const EstimateReport r = cosamp(in.system, p);
  CHECK(fixtures::support_of(r.estimate) == in.truth.support);
  CHECK(rel_err(r.estimate, in.truth.taps) < 1e-8);
  CHECK_FALSE(r.has_flag(kMergeUnderdetermined));

  SolverParams wide = p;
  wide.sparsity = 60;
  CHECK(cosamp(in.system, wide).has_flag(kMergeUnderdetermined));
}

TEST_CASE("classical estimate is the minimum-norm exact solution") {
  const auto in = fixtures::make_instance(kSmall, random_sparse_cir(20, 4, 5), 70, 0.0, 6);
  const EstimateReport r = classical_jfsce(in.system);
  const CMatrix& X = in.system.matrix;
  CHECK((X * r.estimate - in.system.y).norm() < 1e-10 * in.system.y.norm());
  // Pseudo-inverse oracle through a complete orthogonal decomposition.
  const CVector oracle = X.completeOrthogonalDecomposition().solve(in.system.y);
  CHECK(rel_err(r.estimate, oracle) < 1e-8);
  // Adding any null-space direction only increases the norm.
  const CVector z = fixtures::random_vector(X.cols(), 8);
  const CVector nz = z - X.completeOrthogonalDecomposition().pseudoInverse() * (X * z);
  CHECK((r.estimate + 0.1 * nz).norm() > r.estimate.norm());
  CHECK(std::isfinite(r.condition_number));
  // Dense: far more nonzeros than the channel has.
  CHECK(fixtures::support_of(r.estimate, 1e-6).size() > 50);
}

TEST_CASE("classical estimate in the tall regime is least squares") {
  const FrameConfig f{20, 4, 60, 1};
  const auto in = fixtures::make_instance(f, random_sparse_cir(4, 3, 5), 7, 0.01, 9);
  const EstimateReport r = classical_jfsce(in.system);
  const CMatrix& X = in.system.matrix;
  const CVector ls = X.colPivHouseholderQr().solve(in.system.y);
  CHECK(rel_err(r.estimate, ls) < 1e-8);
}

TEST_CASE("conventional estimator with the true boundary") {
  const FrameConfig f{50, 6, 20, 1};
  const Cir h = random_sparse_cir(6, 7, 12);
  const auto in = fixtures::make_instance(f, h, 21, 0.0, 13);
  const auto sys = make_conventional_system(as_span(in.samples), as_span(in.training), 21, f);
  const EstimateReport r = conventional_estimate(sys, f, Method::genie_conventional);
  CHECK(rel_err(r.estimate, in.truth.taps) < 1e-10);
  CHECK(r.boundary == 21);
  CHECK(r.method == Method::genie_conventional);

  const FrameConfig narrow{50, 6, 5, 1};
  const auto in2 = fixtures::make_instance(narrow, h, 21, 0.0, 13);
  const auto sys2 = make_conventional_system(as_span(in2.samples), as_span(in2.training), 21, narrow);
  CHECK_THROWS_AS(conventional_estimate(sys2, narrow), IllConditionedError);
}

TEST_CASE("reweighted l1 finds the support at high SNR") {
  const auto in = fixtures::make_instance(kSmall, random_sparse_cir(20, 4, 15), 33, 1e-4, 16);
  SolverParams p;
  p.sparsity = 4;
  p.noise_variance = 1e-4;
  const EstimateReport r = reweighted_l1(in.system, p);
  CHECK(largest_k(r.estimate, 4) == in.truth.support);
  CHECK(rel_err(r.estimate, in.truth.taps) < 0.05);
  CHECK(default_l1_penalty(0.01, 1100, 10) == doctest::Approx(4.0 * 0.1 * std::sqrt(1090.0)));
}

TEST_CASE("SBL evidence never decreases across EM steps") {
  for (int s = 0; s < 3; ++s) {
    const double sigma2 = 0.02;
    const auto in = fixtures::make_instance(FrameConfig{40, 10, 25, 1}, random_sparse_cir(10, 3, 40 + s),
                                            12, sigma2, 50 + s);
    Eigen::VectorXd gamma = Eigen::VectorXd::Ones(in.system.matrix.cols());
    double prev = fixtures::sbl_log_evidence(in.system.matrix, in.system.y, gamma, sigma2);
    for (int it = 0; it < 40; ++it) {
      const SblState st = sbl_em_step(in.system, gamma, sigma2);
      gamma = st.gamma;
      const double cur = fixtures::sbl_log_evidence(in.system.matrix, in.system.y, gamma, sigma2);
      CHECK(cur >= prev - 1e-9 * std::max(1.0, std::abs(prev)));
      prev = cur;
    }
  }
}

TEST_CASE("SBL posterior matches the closed form") {
  const double sigma2 = 0.05;
  const auto in = fixtures::make_instance(FrameConfig{20, 5, 12, 1}, random_sparse_cir(5, 2, 3), 4, sigma2, 5);
  const CMatrix& X = in.system.matrix;
  Eigen::VectorXd gamma = Eigen::VectorXd::LinSpaced(X.cols(), 0.1, 2.0);
  const SblState st = sbl_em_step(in.system, gamma, sigma2);
  CMatrix Sigma = (X.adjoint() * X / sigma2);
  Sigma.diagonal() += gamma.cwiseInverse().cast<cplx>();
  Sigma = Sigma.inverse().eval();
  const CVector mu = Sigma * X.adjoint() * in.system.y / sigma2;
  CHECK(rel_err(st.mean, mu) < 1e-8);
  const Eigen::VectorXd g = mu.cwiseAbs2() + Sigma.diagonal().real();
  CHECK((st.gamma - g).norm() < 1e-8 * g.norm());
  CHECK_THROWS_AS(sbl_em_step(in.system, -gamma, sigma2), ParameterError);
}

TEST_CASE("SBL and EMGMAMP estimate a sparse channel at high SNR") {
  const double sigma2 = 1e-3;
  const auto in = fixtures::make_instance(kSmall, random_sparse_cir(20, 4, 60), 25, sigma2, 61);
  SolverParams p;
  p.sparsity = 4;
  p.noise_variance = sigma2;
  const EstimateReport s = sbl(in.system, p);
  CHECK(rel_err(s.estimate, in.truth.taps) < 0.1);
  const EstimateReport e = emgmamp(in.system, p);
  CHECK(rel_err(e.estimate, in.truth.taps) < 0.1);
  CHECK(largest_k(e.estimate, 4) == in.truth.support);
}

TEST_CASE("EMGMAMP on the benchmark frame") {
  const double sigma2 = noise_variance_from_snr_db(20.0);
  const auto in = fixtures::make_instance(kBenchmark, benchmark_cir(), 500, sigma2, 62);
  SolverParams p;
  p.sparsity = 10;
  p.noise_variance = sigma2;
  const EstimateReport e = emgmamp(in.system, p);
  CHECK(e.estimate.size() == 1100);
  CHECK(rel_err(e.estimate, in.truth.taps) < 0.2);
  CHECK(derive_boundary(e, 1000) == 500);
  EmGmAmpOptions bad;
  bad.damping = 0.0;
  CHECK_THROWS_AS(emgmamp(in.system, p, bad), ParameterError);
}

TEST_CASE("Gaussian-mixture prior validation") {
  GmPrior g;
  g.components = {{0.5, {}, 1.0}, {0.5, {}, 2.0}};
  CHECK_NOTHROW(g.validate());
  g.components[0].weight = 0.6;
  CHECK_THROWS_AS(g.validate(), ParameterError);
  g.components = {{1.0, {}, 0.0}};
  CHECK_THROWS_AS(g.validate(), ParameterError);
  g.components.clear();
  CHECK_THROWS_AS(g.validate(), ParameterError);
}

TEST_CASE("sparsity rate inverts NE = k log(n / k)") {
  const double rate = sparsity_rate_from_measurements(148, 1100);
  const double k = rate * 1100;
  CHECK(k * std::log(1100 / k) == doctest::Approx(148).epsilon(1e-6));
  CHECK(sparsity_rate_from_measurements(100000, 1100) <= 1.0);
}

TEST_CASE("boundary from an estimate") {
  CVector v = CVector::Zero(50);
  v[12] = 0.05;
  v[20] = 1.0;
  CHECK(derive_boundary(v, 40) == 20);
  CHECK(derive_boundary(v, 40, 0.01) == 12);
  v[20] = 0.0;
  v[45] = 1.0;
  CHECK(derive_boundary(v, 40, 0.5) == 39);
  CHECK_THROWS_AS(derive_boundary(CVector::Zero(5), 4), NoBoundaryError);
}

TEST_CASE("method names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK_FALSE(parse_method("nope").has_value());
}
