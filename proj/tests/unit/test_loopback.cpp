#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "jfsce/equalizer.hpp"
#include "jfsce/estimators.hpp"
#include "jfsce/loopback.hpp"

using namespace jfsce;

namespace {

LoopbackConfig config(int index, int delay) {
  LoopbackConfig c;
  c.channel_index = index;
  c.delay = delay;
  return c;
}

struct Received {
  LoopbackRun run;
  TrainingWindow window;
  MeasurementSystem system;
  CVector x;
  int boundary = 0;
};

Received receive(const LoopbackConfig& c, double sigma2, std::uint64_t seed) {
  Received r;
  r.run = run_loopback(c, {sigma2, derive_seed(seed, {3})}, seed);
  const FrameConfig& f = c.frame;
  const CVector training = r.run.training(f);
  r.window = locate_training_window(detect_training_delay(r.run.stream, training, f), f);
  const CVector samples = r.run.stream.segment(r.window.stream_offset(f), f.training_len());
  r.system = make_measurement_system(as_span(samples), as_span(training), f);
  r.x = aligned_symbols(r.run.block, r.window.frame_delay, f);
  r.boundary = c.delay - r.window.frame_delay * f.data_frame_len;
  return r;
}

}  // namespace

TEST_CASE("RRC taps: symmetry, energy, Nyquist cascade") {
  const LoopbackConfig defaults;
  for (int span : {defaults.span, 16, 20}) {
    const RVector g = rrc_taps(defaults.rolloff, span, 4);
    REQUIRE(g.size() == 4 * span + 1);
    for (Eigen::Index j = 0; j < g.size(); ++j) CHECK(std::abs(g[j] - g[g.size() - 1 - j]) < 1e-12);
    CHECK(std::abs(g.squaredNorm() - 1.0) < 1e-9);

    // Cascade of transmit and receive filters sampled at symbol spacing.
    const Eigen::Index n = 2 * g.size() - 1;
    RVector c = RVector::Zero(n);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      for (Eigen::Index j = 0; j < g.size(); ++j) c[i + j] += g[i] * g[j];
    const Eigen::Index mid = g.size() - 1;
    CHECK(std::abs(c[mid] - 1.0) < 1e-3);
    for (Eigen::Index k = 4; mid + k < n; k += 4) {
      CHECK(std::abs(c[mid + k]) < 1e-3);
      CHECK(std::abs(c[mid - k]) < 1e-3);
    }
  }
  CHECK_THROWS_AS(rrc_taps(0.0, 10, 4), ParameterError);
  CHECK_THROWS_AS(rrc_taps(1.5, 10, 4), ParameterError);
}

TEST_CASE("manual two-tap channels") {
  CVector one(2);
  one << 1.0, 0.7;
  CHECK(manual_cir(1).taps == one);
  CVector six = CVector::Zero(7);
  six[0] = 1.0;
  six[6] = 0.7;
  CHECK(manual_cir(6).taps == six);
  for (int i = 1; i <= 8; ++i) CHECK(manual_cir(i).energy() == doctest::Approx(1.49));
  CHECK_THROWS_AS(manual_cir(0), ParameterError);
}

TEST_CASE("training windows by frame delay") {
  const FrameConfig f{100, 5, 43, 10};
  REQUIRE(f.block_len() == 1047);
  const auto w0 = locate_training_window(0, f);
  CHECK(w0.frame_delay == 0);
  CHECK(w0.first == 1);
  CHECK(w0.last == 147);
  const auto w99 = locate_training_window(99, f);
  CHECK(w99.frame_delay == 0);
  const auto wm = locate_training_window(100, f);
  CHECK(wm.frame_delay == 1);
  CHECK(wm.first == 101);
  CHECK(wm.last == 247);
  for (int d : {1000, 1020, 1046}) {
    const auto w = locate_training_window(d, f);
    CHECK(w.frame_delay == 10);
    CHECK(w.first == 1001);
    CHECK(w.last == 1147);
  }
  // Every delay maps to one frame delay with a full-length window that
  // stays inside the three buffered blocks.
  for (int d = 0; d < f.block_len(); ++d) {
    const auto w = locate_training_window(d, f);
    CHECK(w.last - w.first + 1 == f.training_len());
    CHECK(w.frame_delay == std::min(d / 100, 10));
    CHECK(w.stream_offset(f) >= 0);
    CHECK(w.stream_offset(f) + f.training_len() <= 3 * f.block_len());
  }
  CHECK_THROWS_AS(locate_training_window(1047, f), BoundaryRangeError);
  CHECK_THROWS_AS(locate_training_window(-1, f), BoundaryRangeError);
}

TEST_CASE("loopback runs are deterministic and periodic") {
  const LoopbackConfig c = config(2, 123);
  const LoopbackRun a = run_loopback(c, {0.01, 5}, 9);
  const LoopbackRun b = run_loopback(c, {0.01, 5}, 9);
  CHECK(a.stream == b.stream);
  CHECK(a.block == b.block);
  CHECK(a.stream.size() == 3 * 1047);
  CHECK(run_loopback(c, {0.01, 6}, 9).stream != a.stream);

  const LoopbackRun clean = run_loopback(c, {}, 9);
  const CVector p1 = clean.stream.segment(0, 1047), p2 = clean.stream.segment(1047, 1047);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(clean.truth.delay == 123);
  CHECK(clean.truth.frame_delay == 1);
  CHECK(clean.truth.boundary == 23);
}

TEST_CASE("composite channel of the first manual channel") {
  const LoopbackRun r = run_loopback(config(1, 0), {}, 1);
  const CVector& h = r.truth.composite.taps;
  REQUIRE(h.size() >= 2);
  CHECK(std::abs(h[0] - cplx(1.0)) < 1e-2);
  CHECK(std::abs(h[1] - cplx(0.7)) < 1e-2);
  const double off = h.squaredNorm() - std::norm(h[0]) - std::norm(h[1]);
  CHECK(off + r.truth.precursor_peak * r.truth.precursor_peak < 1e-2);
}

TEST_CASE("received stream follows the symbol-spaced composite model") {
  const LoopbackConfig c = config(3, 340);
  const Received r = receive(c, 0.0, 21);
  CHECK(r.window.frame_delay == 3);
  CHECK(r.boundary == 40);
  const CombinedChannel h = build_combined_channel(r.run.truth.composite, r.boundary, 100);
  const CVector model = channel_output({}, as_span(r.x), h, {});
  const int mbar = 1047;
  const CVector diff = r.run.stream.segment(mbar, mbar) - model.segment(mbar, mbar);
  CHECK(diff.norm() / r.run.stream.segment(mbar, mbar).norm() < 2e-2);
}

TEST_CASE("training delay detection") {
  for (int d : {0, 57, 340, 999, 1030}) {
    const LoopbackConfig c = config(1, d);
    const LoopbackRun r = run_loopback(c, {0.01, 3}, 4);
    CHECK(detect_training_delay(r.stream, r.training(c.frame), c.frame) == d);
  }
}

TEST_CASE("OMP on a noiseless loopback stream sees the two-tap channel") {
  const Received r = receive(config(1, 340), 0.0, 31);
  SolverParams p;
  p.sparsity = 6;
  const EstimateReport e = omp(r.system, p);
  Eigen::Index first = 0;
  const RVector mag = e.estimate.cwiseAbs();
  mag.maxCoeff(&first);
  RVector rest = mag;
  rest[first] = 0.0;
  Eigen::Index second = 0;
  rest.maxCoeff(&second);
  CHECK(first == r.boundary);
  CHECK(second == r.boundary + 1);
  CHECK(std::abs(mag[second] / mag[first] - 0.7) < 0.05);
}

TEST_CASE("OMP-equalized symbols at 20 dB are almost error free") {
  const double sigma2 = noise_variance_from_snr_db(20.0);
  const Received r = receive(config(1, 340), sigma2, 41);
  SolverParams p;
  p.sparsity = 6;
  p.noise_variance = sigma2;
  const EstimateReport e = omp(r.system, p);
  const EqualizerDesign d = design_mmse_equalizer(e.estimate, 200, sigma2, 200);
  const CVector soft = equalize(d, r.run.stream);
  const CVector hard = slice_qpsk(soft);
  int errors = 0;
  for (int u = 1047; u < 2 * 1047; ++u) errors += std::abs(hard[u] - r.x[u - d.delay]) > 1e-9 ? 1 : 0;
  CHECK(errors <= 1);
  CHECK(evaluate_symbol_mse(d, r.run.stream, r.x, 1047, 2 * 1047) < noise_variance_from_snr_db(10.0));
}

TEST_CASE("IQ dump layout") {
  const auto dir = std::filesystem::temp_directory_path() / "jfsce_iq_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "stream.c64";
  CVector s(3);
  s << cplx(1.0, -2.0), cplx(0.5, 0.25), cplx(-3.0, 4.0);
  write_iq_dump(path, s, LoopbackConfig{}, 0.01, 77);
  CHECK(std::filesystem::file_size(path) == 24);
  std::ifstream in(path, std::ios::binary);
  float v[6];
  in.read(reinterpret_cast<char*>(v), sizeof v);
  CHECK(v[0] == 1.0f);
  CHECK(v[1] == -2.0f);
  CHECK(v[5] == 4.0f);
  std::ifstream txt(path.string() + ".txt");
  const std::string header((std::istreambuf_iterator<char>(txt)), std::istreambuf_iterator<char>());
  CHECK(header.find("seed = 77") != std::string::npos);
  CHECK(header.find("channel_index = 1") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("loopback configuration errors") {
  LoopbackConfig c;
  c.delay = 1047;
  CHECK_THROWS_AS(c.validate(), BoundaryRangeError);
  c.delay = 0;
  c.rolloff = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c.rolloff = 0.5;
  c.channel_index = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}
