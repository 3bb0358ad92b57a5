#pragma once

#include "ctad/dataset.hpp"
#include "ctad/kmeans.hpp"

namespace ctad {

/// Euclidean ground costs between the augmented source support (M reference
/// samples plus the test sample in the last row) and the K centroids.
struct CostMatrix {
  Matrix entries;  // (M+1) x K

  Eigen::Index source_count() const { return entries.rows(); }
  Eigen::Index target_count() const { return entries.cols(); }
};

/// Optimal coupling between uniform marginals 1/(M+1) and 1/K.
struct TransportPlan {
  Matrix mass;  // (M+1) x K, rows sum to 1/(M+1), columns to 1/K
  double cost = 0.0;
};

/// Transport distance together with its analytic sandwich. Two lower bounds:
/// the test sample alone must ship its 1/(M+1) mass at least d* far, and
/// routing every point to its own nearest centroid, which ignores centroid
/// capacity, costs (sum d_i + d*)/(M+1); capacity constraints can only raise
/// that. The upper bound is the cost of an actual feasible plan that fills
/// centroid capacity nearest-first, so the optimum can never exceed it.
struct BoundReport {
  double ot = 0.0;
  double lower = 0.0;               // d* / (M+1)
  double nearest_assignment = 0.0;  // (sum d_i + d*) / (M+1)
  double upper = 0.0;               // capacity-respecting nearest-first routing cost
  double nearest_dist = 0.0;        // d*: test sample to nearest centroid
  Vector ref_dists;                 // d_i: reference i to its nearest centroid
};

// (M+1) x K matrix of Euclidean distances; test sample occupies the last row.
CostMatrix build_cost(const Eigen::Ref<const Matrix>& refs, const Eigen::Ref<const Vector>& x_test,
                      const Eigen::Ref<const Matrix>& centroids);

// Exact minimum of <T, C> over couplings of the two uniform marginals.
// The balanced problem is scaled to integral supplies via lcm(M+1, K) and
// solved with successive shortest paths, so the optimum is exact up to
// floating-point accumulation.
TransportPlan solve_ot(const CostMatrix& c);

double ot_distance(const Eigen::Ref<const Matrix>& refs, const Eigen::Ref<const Vector>& x_test,
                   const Eigen::Ref<const Matrix>& centroids);

// ot_distance plus its bounds; throws std::logic_error if the solver ever
// escapes the chain lower <= nearest_assignment <= ot <= upper (internal
// consistency check, 1e-9 slack).
BoundReport bounds(const Eigen::Ref<const Matrix>& refs, const Eigen::Ref<const Vector>& x_test,
                   const Eigen::Ref<const Matrix>& centroids);

inline CostMatrix build_cost(const Eigen::Ref<const Matrix>& refs,
                             const Eigen::Ref<const Vector>& x_test, const CentroidSet& q) {
  return build_cost(refs, x_test, q.centroids);
}
inline double ot_distance(const Eigen::Ref<const Matrix>& refs,
                          const Eigen::Ref<const Vector>& x_test, const CentroidSet& q) {
  return ot_distance(refs, x_test, q.centroids);
}
inline BoundReport bounds(const Eigen::Ref<const Matrix>& refs,
                          const Eigen::Ref<const Vector>& x_test, const CentroidSet& q) {
  return bounds(refs, x_test, q.centroids);
}

}  // namespace ctad
