#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ctad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tabular dataset: N rows of D finite features plus binary labels
/// (0 = normal, 1 = anomaly).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::string name;

  Eigen::Index n_rows() const { return features.rows(); }
  Eigen::Index n_dims() const { return features.cols(); }
  Eigen::Index n_anomalies() const;
  Eigen::Index n_normals() const { return n_rows() - n_anomalies(); }
};

/// One-class split: half the normals (shuffled by seed) train, the other
/// half plus every anomaly test.  Row indices refer to the source dataset.
struct TrainTestSplit {
  Matrix train;
  Matrix test_features;
  std::vector<int> test_labels;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  std::uint64_t seed = 0;
};

/// Per-column z-score statistics fitted on training rows only.
struct Standardizer {
  Vector mean;
  Vector stddev;  // population stddev, floored at kStdFloor

  static constexpr double kStdFloor = 1e-12;

  Matrix transform(const Eigen::Ref<const Matrix>& x) const;
  Matrix inverse_transform(const Eigen::Ref<const Matrix>& x) const;
};

// label_column selects by header name, or by 0-based index when the selector
// string is all digits.
Dataset load_csv(const std::string& path, const std::string& label_column);

TrainTestSplit split(const Dataset& ds, std::uint64_t seed);

Standardizer fit_standardizer(const Eigen::Ref<const Matrix>& train);

}  // namespace ctad
