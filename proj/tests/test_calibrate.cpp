#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctad/calibrate.hpp"
#include "ctad/rng.hpp"
#include "doctest.h"

using namespace ctad;

namespace {

Matrix gaussians(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

CalibratorConfig config(CalibratorKind kind, int m, int k, std::uint64_t seed = 0) {
  CalibratorConfig cfg;
  cfg.kind = kind;
  cfg.m = m;
  cfg.k = k;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("calibrator tokens round-trip") {
  for (const auto kind : {CalibratorKind::CTAD, CalibratorKind::CENTROID_DIST,
                          CalibratorKind::MAHALANOBIS, CalibratorKind::OT_ONLY,
                          CalibratorKind::NONE})
    CHECK(parse_calibrator(calibrator_name(kind)) == kind);
  CHECK_THROWS_AS(parse_calibrator("sinkhorn"), std::invalid_argument);
}

TEST_CASE("the null calibrator leaves scores untouched") {
  Rng rng(1);
  const Matrix train = gaussians(rng, 20, 2);
  const Matrix test = gaussians(rng, 6, 2);
  const auto state = fit_calibrator(train, config(CalibratorKind::NONE, 0, 1));
  CHECK(delta_all(state, test).isZero(0.0));

  Vector base(6);
  base << 5, 4, 3, 2, 1, 0;
  const auto records = calibrate_scores(state, base, test, 2.5);
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(records[static_cast<std::size_t>(i)].base_score == base[i]);
    CHECK(records[static_cast<std::size_t>(i)].calibrated == base[i]);
  }
}

TEST_CASE("centroid-distance correction with one centroid is distance to the mean") {
  Matrix train(2, 2);
  train << 0, 0, 2, 0;
  const auto state = fit_calibrator(train, config(CalibratorKind::CENTROID_DIST, 0, 1));
  Vector x(2);
  x << 1, 0;
  CHECK(delta(state, x) == doctest::Approx(0.0).scale(1));
  x << 3, 0;
  CHECK(delta(state, x) == doctest::Approx(2.0));
}

TEST_CASE("with no references the correction is the mean centroid distance") {
  Matrix train(2, 2);
  train << 0, 0, 2, 0;
  const auto state = fit_calibrator(train, config(CalibratorKind::CTAD, 0, 2));
  Vector x(2);
  x << 0, 0;
  CHECK(delta(state, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mahalanobis correction approximates the radius on isotropic data") {
  Rng rng(42);
  const Matrix train = gaussians(rng, 10000, 3);
  const auto state = fit_calibrator(train, config(CalibratorKind::MAHALANOBIS, 0, 1));
  for (int probe = 0; probe < 5; ++probe) {
    Vector x(3);
    for (Eigen::Index j = 0; j < 3; ++j) x[j] = 3.0 * rng.normal();
    const double radius = (x - Vector(train.colwise().mean())).norm();
    if (radius < 0.5) continue;
    CHECK(delta(state, x) == doctest::Approx(radius).epsilon(0.05));
  }
}

TEST_CASE("references are sampled from training rows and fits repeat per seed") {
  Rng rng(9);
  const Matrix train = gaussians(rng, 30, 2);
  const auto a = fit_calibrator(train, config(CalibratorKind::CTAD, 8, 3, 123));
  const auto b = fit_calibrator(train, config(CalibratorKind::CTAD, 8, 3, 123));
  CHECK(a.refs.points == b.refs.points);
  CHECK(a.centroids.centroids == b.centroids.centroids);

  for (Eigen::Index i = 0; i < a.refs.points.rows(); ++i) {
    bool found = false;
    for (Eigen::Index r = 0; r < train.rows(); ++r)
      if (a.refs.points.row(i) == train.row(r)) found = true;
    CHECK(found);
  }

  const Matrix test = gaussians(rng, 5, 2);
  CHECK(delta_all(a, test) == delta_all(b, test));
}

TEST_CASE("every correction kind is nonnegative") {
  Rng rng(14);
  const Matrix train = gaussians(rng, 40, 3);
  const Matrix test = gaussians(rng, 10, 3);
  for (const auto kind : {CalibratorKind::CTAD, CalibratorKind::CENTROID_DIST,
                          CalibratorKind::MAHALANOBIS, CalibratorKind::OT_ONLY,
                          CalibratorKind::NONE}) {
    const auto state = fit_calibrator(train, config(kind, 6, 3, 5));
    CHECK(delta_all(state, test).minCoeff() >= 0.0);
  }
}

TEST_CASE("zero lambda reduces fusion to the base scores") {
  Rng rng(3);
  const Matrix train = gaussians(rng, 25, 2);
  const Matrix test = gaussians(rng, 7, 2);
  const auto state = fit_calibrator(train, config(CalibratorKind::CTAD, 5, 2, 7));
  Vector base(7);
  base << 0.3, 0.1, 0.9, 0.5, 0.2, 0.8, 0.4;
  const auto records = calibrate_scores(state, base, test, 0.0);
  for (Eigen::Index i = 0; i < 7; ++i)
    CHECK(records[static_cast<std::size_t>(i)].calibrated == base[i]);
}

TEST_CASE("the transport-only kind discards the base scores") {
  Rng rng(4);
  const Matrix train = gaussians(rng, 25, 2);
  const Matrix test = gaussians(rng, 5, 2);
  const auto state = fit_calibrator(train, config(CalibratorKind::OT_ONLY, 4, 2, 1));
  Vector base(5);
  base << 1e9, -1e9, 0, 42, -42;
  const auto records = calibrate_scores(state, base, test, 3.0);
  const Vector d = delta_all(state, test);
  for (Eigen::Index i = 0; i < 5; ++i)
    CHECK(records[static_cast<std::size_t>(i)].calibrated == d[i]);
}

TEST_CASE("calibrated scores are monotone in lambda wherever the correction is positive") {
  Rng rng(6);
  const Matrix train = gaussians(rng, 30, 2);
  Matrix test = gaussians(rng, 6, 2);
  test.array() += 4.0;  // shifted away from train: deltas > 0
  const auto state = fit_calibrator(train, config(CalibratorKind::CTAD, 5, 3, 2));
  const Vector base = Vector::Zero(6);
  const auto lo = calibrate_scores(state, base, test, 0.5);
  const auto hi = calibrate_scores(state, base, test, 2.0);
  for (std::size_t i = 0; i < lo.size(); ++i) CHECK(hi[i].calibrated > lo[i].calibrated);
}

TEST_CASE("minmax fusion rescales both channels and keeps the identity") {
  Vector base(3), deltas(3);
  base << 0, 5, 10;
  deltas << 2, 2, 2;  // constant: collapses to zero
  const auto records = fuse_scores(CalibratorKind::CTAD, base, deltas, 2.0, Normalize::MINMAX);
  CHECK(records[0].base_score == doctest::Approx(0.0));
  CHECK(records[1].base_score == doctest::Approx(0.5));
  CHECK(records[2].base_score == doctest::Approx(1.0));
  for (const auto& r : records) {
    CHECK(r.delta == 0.0);
    CHECK(r.calibrated == doctest::Approx(r.base_score + 2.0 * r.delta));
  }
}

TEST_CASE("invalid configurations and mismatched shapes are rejected") {
  Rng rng(8);
  const Matrix train = gaussians(rng, 10, 2);

  CHECK_THROWS_AS(fit_calibrator(train, config(CalibratorKind::CTAD, -1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(fit_calibrator(train, config(CalibratorKind::CTAD, 2, 0)), std::invalid_argument);
  CHECK_THROWS_AS(fit_calibrator(train, config(CalibratorKind::CTAD, 11, 2)), std::invalid_argument);
  auto bad = config(CalibratorKind::CTAD, 2, 2);
  bad.lambda = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_calibrator(train, bad), std::invalid_argument);

  const auto state = fit_calibrator(train, config(CalibratorKind::CTAD, 3, 2, 1));
  CHECK_THROWS_AS(delta(state, Vector::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(fuse_scores(CalibratorKind::CTAD, Vector::Zero(3), Vector::Zero(2), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(calibrate_scores(state, Vector::Zero(3), Matrix::Zero(4, 2), 1.0),
                  std::invalid_argument);
}
