#include "ctad/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctad/ot.hpp"
#include "ctad/rng.hpp"

namespace ctad {
namespace {

Vector minmax_scale(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) return v;
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (hi <= lo) return Vector::Zero(v.size());
  return (v.array() - lo) / (hi - lo);
}

void check_dim(const CalibratorState& state, Eigen::Index got) {
  if (state.config.kind == CalibratorKind::NONE) return;
  if (got != state.train_dim)
    throw std::invalid_argument("calibrator: input has " + std::to_string(got) +
                                " features, state was fit on " + std::to_string(state.train_dim));
}

}  // namespace

CalibratorKind parse_calibrator(const std::string& token) {
  if (token == "ctad") return CalibratorKind::CTAD;
  if (token == "centroid") return CalibratorKind::CENTROID_DIST;
  if (token == "mahalanobis") return CalibratorKind::MAHALANOBIS;
  if (token == "ot-only") return CalibratorKind::OT_ONLY;
  if (token == "none") return CalibratorKind::NONE;
  throw std::invalid_argument("unknown calibrator '" + token +
                              "' (expected ctad|centroid|mahalanobis|ot-only|none)");
}

std::string calibrator_name(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::CTAD: return "ctad";
    case CalibratorKind::CENTROID_DIST: return "centroid";
    case CalibratorKind::MAHALANOBIS: return "mahalanobis";
    case CalibratorKind::OT_ONLY: return "ot-only";
    case CalibratorKind::NONE: return "none";
  }
  throw std::logic_error("unreachable calibrator kind");
}

double MahalanobisModel::quadratic(const Eigen::Ref<const Vector>& x) const {
  Vector centered = x - mean;
  return centered.dot(factor.solve(centered));
}

CalibratorState fit_calibrator(const Eigen::Ref<const Matrix>& train,
                               const CalibratorConfig& cfg) {
  if (cfg.m < 0) throw std::invalid_argument("fit_calibrator: m must be >= 0");
  if (cfg.k < 1) throw std::invalid_argument("fit_calibrator: k must be >= 1");
  if (!std::isfinite(cfg.lambda)) throw std::invalid_argument("fit_calibrator: lambda must be finite");

  CalibratorState state;
  state.config = cfg;
  state.train_dim = train.cols();

  const bool needs_centroids = cfg.kind == CalibratorKind::CTAD ||
                               cfg.kind == CalibratorKind::OT_ONLY ||
                               cfg.kind == CalibratorKind::CENTROID_DIST;
  const bool needs_refs =
      cfg.kind == CalibratorKind::CTAD || cfg.kind == CalibratorKind::OT_ONLY;

  if (needs_centroids) {
    if (cfg.m > train.rows())
      throw std::invalid_argument("fit_calibrator: m exceeds training rows");
    state.centroids = fit_kmeans(train, cfg.k, cfg.seed);
  }
  if (needs_refs) {
    Rng rng(derive_seed(cfg.seed, "refs"));
    const auto idx = rng.sample_without_replacement(static_cast<std::uint64_t>(train.rows()),
                                                    static_cast<std::uint64_t>(cfg.m));
    state.refs.points.resize(cfg.m, train.cols());
    for (int i = 0; i < cfg.m; ++i)
      state.refs.points.row(i) = train.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
    state.refs.seed = cfg.seed;
  }
  if (cfg.kind == CalibratorKind::MAHALANOBIS) {
    if (train.rows() == 0) throw std::invalid_argument("fit_calibrator: empty training set");
    const Eigen::Index n = train.rows();
    const Eigen::Index d = train.cols();
    state.mahalanobis.mean = train.colwise().mean();
    Matrix centered = train.rowwise() - state.mahalanobis.mean.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
    double eps = 1e-6 * cov.trace() / static_cast<double>(d);
    if (eps <= 0.0) eps = 1e-12;
    cov.diagonal().array() += eps;
    state.mahalanobis.factor.compute(cov);
    if (state.mahalanobis.factor.info() != Eigen::Success)
      throw std::runtime_error("fit_calibrator: covariance factorization failed");
  }
  return state;
}

double delta(const CalibratorState& state, const Eigen::Ref<const Vector>& x_test) {
  check_dim(state, x_test.size());
  switch (state.config.kind) {
    case CalibratorKind::CTAD:
    case CalibratorKind::OT_ONLY:
      return bounds(state.refs.points, x_test, state.centroids).ot;
    case CalibratorKind::CENTROID_DIST:
      return nearest_centroid_distance(state.centroids, x_test).second;
    case CalibratorKind::MAHALANOBIS:
      return std::sqrt(std::max(0.0, state.mahalanobis.quadratic(x_test)));
    case CalibratorKind::NONE:
      return 0.0;
  }
  throw std::logic_error("unreachable calibrator kind");
}

Vector delta_all(const CalibratorState& state, const Eigen::Ref<const Matrix>& test) {
  Vector out(test.rows());
  for (Eigen::Index i = 0; i < test.rows(); ++i) out[i] = delta(state, test.row(i).transpose());
  return out;
}

std::vector<CalibrationRecord> fuse_scores(CalibratorKind kind,
                                           const Eigen::Ref<const Vector>& base,
                                           const Eigen::Ref<const Vector>& deltas, double lambda,
                                           Normalize normalize) {
  if (base.size() != deltas.size())
    throw std::invalid_argument("fuse_scores: base/delta length mismatch");

  Vector s = base;
  Vector d = deltas;
  if (normalize == Normalize::MINMAX) {
    s = minmax_scale(s);
    d = minmax_scale(d);
  }

  std::vector<CalibrationRecord> records(static_cast<std::size_t>(base.size()));
  const bool pure = kind == CalibratorKind::OT_ONLY;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    auto& r = records[static_cast<std::size_t>(i)];
    r.base_score = s[i];
    r.delta = d[i];
    r.calibrated = pure ? d[i] : s[i] + lambda * d[i];
  }
  return records;
}

std::vector<CalibrationRecord> calibrate_scores(const CalibratorState& state,
                                                const Eigen::Ref<const Vector>& base,
                                                const Eigen::Ref<const Matrix>& test, double lambda,
                                                Normalize normalize) {
  if (base.size() != test.rows())
    throw std::invalid_argument("calibrate_scores: base scores do not match test rows");
  return fuse_scores(state.config.kind, base, delta_all(state, test), lambda, normalize);
}

}  // namespace ctad
