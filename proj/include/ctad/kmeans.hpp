#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctad/dataset.hpp"

namespace ctad {

/// K centroids of the training set with uniform mass 1/K each; the coarse
/// structural summary the transport target is built from.
struct CentroidSet {
  Matrix centroids;  // K x D
  double inertia = 0.0;  // mean squared nearest-centroid distance over train
  int k = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static CentroidSet from_json(const std::string& text);
  void save(const std::string& path) const;
  static CentroidSet load(const std::string& path);
};

// Lloyd iterations from k-means++ seeding until the largest centroid
// displacement drops below tol or max_iter is hit.  Empty clusters are
// reseeded to the point farthest from its assigned centroid so the result
// always carries exactly k centroids.  inertia_history, when given, records
// the objective after every iteration (non-increasing).
CentroidSet fit_kmeans(const Eigen::Ref<const Matrix>& train, int k, std::uint64_t seed,
                       int max_iter = 300, double tol = 1e-6,
                       std::vector<double>* inertia_history = nullptr);

// Index of the closest centroid (ties -> lowest index) and the Euclidean
// distance to it.
std::pair<Eigen::Index, double> nearest_centroid_distance(
    const Eigen::Ref<const Matrix>& centroids, const Eigen::Ref<const Vector>& x);

inline std::pair<Eigen::Index, double> nearest_centroid_distance(
    const CentroidSet& q, const Eigen::Ref<const Vector>& x) {
  return nearest_centroid_distance(q.centroids, x);
}

}  // namespace ctad
