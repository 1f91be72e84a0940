#include "doctest.h"
#include "fixtures.hpp"
#include "jfsce/measurement.hpp"

using namespace jfsce;

TEST_CASE("training matrix is the Hankel arrangement of the training frame") {
  const FrameConfig f{30, 6, 11, 1};
  const CVector t = fixtures::random_vector(f.training_len(), 4);
  const CMatrix X = build_training_matrix(as_span(t), f);
  REQUIRE(X.rows() == 11);
  REQUIRE(X.cols() == 36);
  const int mt = f.training_len();
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c) CHECK(X(r, c) == t[mt - 1 - r - c]);
  // Constant along anti-diagonals.
  for (int r = 1; r < X.rows(); ++r)
    for (int c = 0; c + 1 < X.cols(); ++c) CHECK(X(r, c) == X(r - 1, c + 1));
  CHECK_THROWS_AS(build_training_matrix(as_span(t).first(mt - 1), f), DimensionError);
}

TEST_CASE("noiseless received vector equals X times the combined channel") {
  const FrameConfig f{50, 8, 14, 1};
  for (int boundary : {0, 7, 49}) {
    const auto in = fixtures::make_instance(f, random_sparse_cir(8, 3, boundary + 1), boundary, 0.0, 77);
    const CVector r = in.system.matrix * in.truth.taps;
    CHECK((r - in.system.y).cwiseAbs().maxCoeff() < 1e-12);
    // y is the newest NE samples, newest first.
    for (int i = 0; i < f.num_equations; ++i) CHECK(in.system.y[i] == in.samples[f.training_len() - 1 - i]);
  }
}

TEST_CASE("conventional matrix is a column block of the training matrix") {
  const FrameConfig f{40, 5, 9, 1};
  const CVector t = fixtures::random_vector(f.training_len(), 8);
  const CMatrix X = build_training_matrix(as_span(t), f);
  for (int b : {0, 13, 39}) {
    const CMatrix C = build_conventional_matrix(as_span(t), b, f);
    REQUIRE(C.cols() == 6);
    CHECK(C == X.middleCols(b, 6));
  }
  CHECK_THROWS_AS(build_conventional_matrix(as_span(t), 40, f), BoundaryRangeError);
  CHECK_THROWS_AS(build_conventional_matrix(as_span(t), -1, f), BoundaryRangeError);
}

TEST_CASE("collect_received_vector rejects short input") {
  const FrameConfig f{20, 4, 6, 1};
  const CVector s = fixtures::random_vector(f.training_len() - 1, 1);
  CHECK_THROWS_AS(collect_received_vector(as_span(s), f), DimensionError);
}
