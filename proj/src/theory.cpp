#include "ctad/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctad/calibrate.hpp"
#include "ctad/kmeans.hpp"
#include "ctad/ot.hpp"
#include "ctad/rng.hpp"

namespace ctad {
namespace {

void validate(const SyntheticSpec& spec) {
  if (spec.k_clusters < 1) throw std::invalid_argument("synthetic: k_clusters must be >= 1");
  if (spec.dim < 1) throw std::invalid_argument("synthetic: dim must be >= 1");
  if (spec.cluster_std < 0.0) throw std::invalid_argument("synthetic: cluster_std must be >= 0");
  if (spec.anomaly_offset <= 0.0)
    throw std::invalid_argument("synthetic: anomaly_offset must be > 0");
  if (spec.anomaly_offset <= spec.cluster_std)
    throw std::invalid_argument("synthetic: anomaly_offset must exceed cluster_std");
  if (spec.n_train < 1) throw std::invalid_argument("synthetic: n_train must be >= 1");
  if (spec.n_test_normal < 0 || spec.n_test_anomaly < 0)
    throw std::invalid_argument("synthetic: test counts must be >= 0");
}

Vector gaussian_vector(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

Vector unit_direction(Rng& rng, int dim) {
  for (;;) {
    Vector v = gaussian_vector(rng, dim);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

// Cluster centers on a scaled random direction frame.  The scale guarantees
// pairwise center separation of at least max(10 * cluster_std,
// 2.5 * anomaly_offset, 1), so an anomaly's generating center stays its
// nearest and normal clouds do not overlap.
Matrix make_centers(const SyntheticSpec& spec, Rng& rng) {
  Matrix centers(spec.k_clusters, spec.dim);
  if (spec.k_clusters == 1) {
    centers.setZero();
    return centers;
  }
  const double sep =
      std::max({10.0 * spec.cluster_std, 2.5 * spec.anomaly_offset, 1.0});
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Matrix dirs(spec.k_clusters, spec.dim);
    for (int i = 0; i < spec.k_clusters; ++i) dirs.row(i) = unit_direction(rng, spec.dim);
    double min_pair = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.k_clusters; ++i)
      for (int j = i + 1; j < spec.k_clusters; ++j)
        min_pair = std::min(min_pair, (dirs.row(i) - dirs.row(j)).norm());
    if (min_pair < 0.1) continue;
    return dirs * (sep / min_pair);
  }
  throw std::runtime_error("synthetic: could not place " + std::to_string(spec.k_clusters) +
                           " separated cluster centers in dimension " + std::to_string(spec.dim));
}

Vector draw_normal_point(const Matrix& centers, double std_dev, Rng& rng) {
  const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(centers.rows())));
  return centers.row(c).transpose() + std_dev * gaussian_vector(rng, static_cast<int>(centers.cols()));
}

Vector draw_anomaly_point(const Matrix& centers, double offset, Rng& rng) {
  const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(centers.rows())));
  return centers.row(c).transpose() + offset * unit_direction(rng, static_cast<int>(centers.cols()));
}

}  // namespace

TrainTestSplit generate_split(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, "synthetic"));
  const Matrix centers = make_centers(spec, rng);

  TrainTestSplit s;
  s.seed = spec.seed;
  s.train.resize(spec.n_train, spec.dim);
  for (int i = 0; i < spec.n_train; ++i)
    s.train.row(i) = draw_normal_point(centers, spec.cluster_std, rng).transpose();

  const int n_test = spec.n_test_normal + spec.n_test_anomaly;
  s.test_features.resize(n_test, spec.dim);
  s.test_labels.assign(static_cast<std::size_t>(n_test), 0);
  for (int i = 0; i < spec.n_test_normal; ++i)
    s.test_features.row(i) = draw_normal_point(centers, spec.cluster_std, rng).transpose();
  for (int i = 0; i < spec.n_test_anomaly; ++i) {
    s.test_features.row(spec.n_test_normal + i) =
        draw_anomaly_point(centers, spec.anomaly_offset, rng).transpose();
    s.test_labels[static_cast<std::size_t>(spec.n_test_normal + i)] = 1;
  }
  // Row bookkeeping matches the stacked layout of generate().
  s.train_rows.resize(static_cast<std::size_t>(spec.n_train));
  s.test_rows.resize(static_cast<std::size_t>(n_test));
  for (int i = 0; i < spec.n_train; ++i) s.train_rows[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n_test; ++i) s.test_rows[static_cast<std::size_t>(i)] = spec.n_train + i;
  return s;
}

Dataset generate(const SyntheticSpec& spec) {
  const TrainTestSplit s = generate_split(spec);
  Dataset ds;
  ds.name = "synthetic";
  const Eigen::Index n = s.train.rows() + s.test_features.rows();
  ds.features.resize(n, spec.dim);
  ds.features.topRows(s.train.rows()) = s.train;
  ds.features.bottomRows(s.test_features.rows()) = s.test_features;
  ds.labels.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < s.test_labels.size(); ++i)
    ds.labels[static_cast<std::size_t>(s.train.rows()) + i] = s.test_labels[i];
  return ds;
}

GapFloorCheck check_gap_floor(const SyntheticSpec& spec, int m, int k_centroids,
                            std::uint64_t seed) {
  const TrainTestSplit s = generate_split(spec);
  if (spec.n_test_normal < 2 || spec.n_test_anomaly < 2)
    throw std::invalid_argument("check_gap_floor: need at least two test points per class");

  CalibratorConfig cfg;
  cfg.kind = CalibratorKind::CTAD;
  cfg.m = m;
  cfg.k = k_centroids;
  cfg.seed = seed;
  const CalibratorState state = fit_calibrator(s.train, cfg);

  double eps_sum = 0.0, eta_sum = 0.0;
  double ot_sum_n = 0.0, ot_sum_a = 0.0, ot_sq_n = 0.0, ot_sq_a = 0.0;
  for (Eigen::Index i = 0; i < s.test_features.rows(); ++i) {
    const Vector x = s.test_features.row(i).transpose();
    const double near = nearest_centroid_distance(state.centroids, x).second;
    const double d = delta(state, x);
    if (s.test_labels[static_cast<std::size_t>(i)] == 1) {
      eta_sum += near;
      ot_sum_a += d;
      ot_sq_a += d * d;
    } else {
      eps_sum += near;
      ot_sum_n += d;
      ot_sq_n += d * d;
    }
  }
  const double n_n = spec.n_test_normal;
  const double n_a = spec.n_test_anomaly;

  GapFloorCheck check;
  check.eps_hat = eps_sum / n_n;
  check.eta_hat = eta_sum / n_a;
  const double mean_n = ot_sum_n / n_n;
  const double mean_a = ot_sum_a / n_a;
  check.empirical_gap = mean_a - mean_n;
  check.predicted_floor =
      (check.eta_hat - (m + 1) * check.eps_hat) / static_cast<double>(m + 1);
  const double var_n = (ot_sq_n / n_n - mean_n * mean_n) * n_n / (n_n - 1.0);
  const double var_a = (ot_sq_a / n_a - mean_a * mean_a) * n_a / (n_a - 1.0);
  check.gap_stderr = std::sqrt(std::max(0.0, var_a / n_a + var_n / n_n));
  check.holds = check.empirical_gap >= check.predicted_floor - 3.0 * check.gap_stderr;
  return check;
}

VarianceTable check_variance(const SyntheticSpec& spec, const std::vector<int>& m_values,
                             int trials) {
  if (trials < 30) throw std::invalid_argument("check_variance: need at least 30 trials");
  if (m_values.empty()) throw std::invalid_argument("check_variance: empty M list");
  for (const int m : m_values)
    if (m < 1 || m > spec.n_train)
      throw std::invalid_argument("check_variance: M values must be in [1, n_train]");
  if (spec.n_test_normal < 1)
    throw std::invalid_argument("check_variance: need a held-out normal test point");

  const TrainTestSplit s = generate_split(spec);
  const CentroidSet q = fit_kmeans(s.train, spec.k_clusters, spec.seed);
  const Vector x = s.test_features.row(0).transpose();

  VarianceTable table;
  table.m_values = m_values;
  table.variances.reserve(m_values.size());
  for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
    const int m = m_values[mi];
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(spec.seed, "variance",
                          static_cast<std::uint64_t>(mi) * 1000003ULL + static_cast<std::uint64_t>(t)));
      const auto idx = rng.sample_without_replacement(static_cast<std::uint64_t>(s.train.rows()),
                                                      static_cast<std::uint64_t>(m));
      Matrix refs(m, s.train.cols());
      for (int i = 0; i < m; ++i)
        refs.row(i) = s.train.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
      const double d = bounds(refs, x, q.centroids).ot;
      sum += d;
      sum_sq += d * d;
    }
    const double n = trials;
    table.variances.push_back(std::max(0.0, (sum_sq / n - (sum / n) * (sum / n)) * n / (n - 1.0)));
  }

  // Least-squares slope of log Var against log M.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto count = static_cast<double>(m_values.size());
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    const double lx = std::log(static_cast<double>(m_values[i]));
    const double ly = std::log(std::max(table.variances[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  table.log_log_slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return table;
}

}  // namespace ctad
