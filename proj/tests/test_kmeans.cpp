#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "ctad/kmeans.hpp"
#include "ctad/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctad;

TEST_CASE("two well-separated 1-D pairs match the enumeration oracle") {
  Matrix train(4, 1);
  train << 0, 1, 10, 11;
  const auto best = oracle::kmeans_1d_k2({0, 1, 10, 11});
  CHECK(best.c0 == doctest::Approx(0.5));
  CHECK(best.c1 == doctest::Approx(10.5));
  CHECK(best.inertia == doctest::Approx(0.25));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CentroidSet q = fit_kmeans(train, 2, seed);
    std::vector<double> got{q.centroids(0, 0), q.centroids(1, 0)};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(best.c0));
    CHECK(got[1] == doctest::Approx(best.c1));
    CHECK(q.inertia == doctest::Approx(best.inertia));
  }
}

TEST_CASE("k equal to N reaches zero inertia") {
  Matrix train(4, 2);
  train << 0, 0, 1, 0, 0, 1, 5, 5;
  const CentroidSet q = fit_kmeans(train, 4, 7);
  CHECK(q.inertia == doctest::Approx(0.0));
}

TEST_CASE("k = 1 lands on the column means") {
  Matrix train(3, 2);
  train << 1, 2, 3, 4, 5, 9;
  const CentroidSet q = fit_kmeans(train, 1, 0);
  CHECK(q.centroids(0, 0) == doctest::Approx(3.0));
  CHECK(q.centroids(0, 1) == doctest::Approx(5.0));
}

TEST_CASE("inertia matches a from-scratch recomputation") {
  Matrix train(6, 2);
  train << 0, 0, 1, 1, 2, 0, 10, 10, 11, 9, 12, 11;
  const CentroidSet q = fit_kmeans(train, 2, 3);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < q.centroids.rows(); ++j)
      best = std::min(best, (train.row(i) - q.centroids.row(j)).squaredNorm());
    ss += best;
  }
  CHECK(q.inertia == doctest::Approx(ss / 6.0).epsilon(1e-9));
}

TEST_CASE("logged inertia never increases") {
  Matrix train(40, 3);
  Rng rng(11);
  for (Eigen::Index i = 0; i < train.rows(); ++i)
    for (Eigen::Index j = 0; j < train.cols(); ++j) train(i, j) = rng.real01() * 10.0;
  std::vector<double> history;
  fit_kmeans(train, 5, 1, 300, 1e-6, &history);
  REQUIRE(!history.empty());
  for (std::size_t i = 1; i < history.size(); ++i)
    CHECK(history[i] <= history[i - 1] + 1e-12);
}

TEST_CASE("duplicate-heavy data triggers empty-cluster repair yet keeps k centroids") {
  Matrix train(6, 1);
  train << 0, 0, 0, 0, 0, 5;
  const CentroidSet q = fit_kmeans(train, 3, 2);
  CHECK(q.centroids.rows() == 3);
  CHECK(q.centroids.allFinite());
}

TEST_CASE("same seed reproduces centroids bitwise") {
  Matrix train(25, 4);
  Rng rng(13);
  for (Eigen::Index i = 0; i < train.rows(); ++i)
    for (Eigen::Index j = 0; j < train.cols(); ++j) train(i, j) = rng.normal();
  const CentroidSet a = fit_kmeans(train, 4, 99);
  const CentroidSet b = fit_kmeans(train, 4, 99);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("parameter validation") {
  Matrix train(3, 1);
  train << 1, 2, 3;
  CHECK_THROWS_AS(fit_kmeans(train, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_kmeans(train, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_kmeans(Matrix(0, 1), 1, 0), std::invalid_argument);
}

TEST_CASE("nearest centroid: exact hit, tie-break, and hand distance") {
  Matrix centroids(3, 2);
  centroids << 0, 0, 4, 0, 3, 4;

  Vector at_c2(2);
  at_c2 << 3, 4;
  const auto hit = nearest_centroid_distance(centroids, at_c2);
  CHECK(hit.first == 2);
  CHECK(hit.second == doctest::Approx(0.0));

  Vector mid(2);
  mid << 2, 0;
  CHECK(nearest_centroid_distance(centroids, mid).first == 0);  // tie with 1, lowest wins

  Matrix two(2, 2);
  two << 0, 0, 3, 4;
  Vector x(2);
  x << 3, 0;
  const auto got = nearest_centroid_distance(two, x);
  CHECK(got.first == 0);
  CHECK(got.second == doctest::Approx(3.0));
}

TEST_CASE("centroid sets round-trip through JSON") {
  Matrix train(5, 2);
  train << 0, 0, 1, 1, 2, 2, 10, 10, 11, 11;
  const CentroidSet q = fit_kmeans(train, 2, 17);
  const CentroidSet back = CentroidSet::from_json(q.to_json());
  CHECK(back.k == q.k);
  CHECK(back.seed == q.seed);
  CHECK(back.inertia == q.inertia);
  CHECK(back.centroids == q.centroids);
}
