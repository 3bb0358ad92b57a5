#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "ctad/dataset.hpp"
#include "ctad/kmeans.hpp"

namespace ctad {

enum class CalibratorKind { CTAD, CENTROID_DIST, MAHALANOBIS, OT_ONLY, NONE };

enum class Normalize { NONE, MINMAX };

struct CalibratorConfig {
  CalibratorKind kind = CalibratorKind::CTAD;
  int m = 20;       // reference samples
  int k = 5;        // centroids
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

/// Reference samples drawn once from train, without replacement, and reused
/// for every test point.
struct ReferenceSet {
  Matrix points;  // M x D
  std::uint64_t seed = 0;
};

/// Quadratic-form model over the regularized training covariance.
struct MahalanobisModel {
  Vector mean;
  Eigen::LDLT<Matrix> factor;  // of cov + eps*I

  // (x - mean)' (cov + eps*I)^{-1} (x - mean)
  double quadratic(const Eigen::Ref<const Vector>& x) const;
};

/// Everything the offline phase produces; immutable during scoring.
struct CalibratorState {
  CalibratorConfig config;
  Eigen::Index train_dim = 0;
  CentroidSet centroids;         // CTAD, OT_ONLY, CENTROID_DIST
  ReferenceSet refs;             // CTAD, OT_ONLY
  MahalanobisModel mahalanobis;  // MAHALANOBIS
};

struct CalibrationRecord {
  double base_score = 0.0;
  double delta = 0.0;
  double calibrated = 0.0;
};

// CLI token round-trip: ctad | centroid | mahalanobis | ot-only | none.
CalibratorKind parse_calibrator(const std::string& token);
std::string calibrator_name(CalibratorKind kind);

// Offline phase: clustering and reference sampling (or moment fitting),
// deterministic per seed.
CalibratorState fit_calibrator(const Eigen::Ref<const Matrix>& train, const CalibratorConfig& cfg);

// Correction term for one test point; nonnegative for every kind.  The
// transport-based kinds assert the analytic lower/upper sandwich on each call.
double delta(const CalibratorState& state, const Eigen::Ref<const Vector>& x_test);

Vector delta_all(const CalibratorState& state, const Eigen::Ref<const Matrix>& test);

// Fuses base scores with precomputed corrections: calibrated = base +
// lambda * delta, except OT_ONLY where calibrated = delta.  With
// Normalize::MINMAX, base and delta are first rescaled to [0, 1] over the
// batch (a constant vector maps to all zeros) and the records carry the
// rescaled values so the fusion identity still holds exactly.
std::vector<CalibrationRecord> fuse_scores(CalibratorKind kind,
                                           const Eigen::Ref<const Vector>& base,
                                           const Eigen::Ref<const Vector>& deltas, double lambda,
                                           Normalize normalize = Normalize::NONE);

// delta_all followed by fuse_scores.
std::vector<CalibrationRecord> calibrate_scores(const CalibratorState& state,
                                                const Eigen::Ref<const Vector>& base,
                                                const Eigen::Ref<const Matrix>& test, double lambda,
                                                Normalize normalize = Normalize::NONE);

}  // namespace ctad
