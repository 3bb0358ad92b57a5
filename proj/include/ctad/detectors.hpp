#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ctad/dataset.hpp"

namespace ctad {

enum class DetectorKind { KNN, PCA, ECOD, IFOREST, EXTERNAL };

namespace detail {

struct KnnState {
  Matrix train;
  int k = 5;
};

struct PcaState {
  Vector mean;
  Matrix components;  // D x r, orthonormal columns
};

struct EcodState {
  std::vector<std::vector<double>> sorted_cols;  // per-feature sorted train values
  std::vector<signed char> left_tail;            // auto aggregate: skewness sign >= 0
  Eigen::Index n_train = 0;
};

struct IsoNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;
};

struct IsoTree {
  std::vector<IsoNode> nodes;
};

struct IforestState {
  std::vector<IsoTree> trees;
  int subsample = 0;
};

struct ExternalState {
  Vector scores;
};

}  // namespace detail

/// A fitted base detector.  score is pure after fit and higher means more
/// anomalous for every kind.
struct DetectorModel {
  DetectorKind kind = DetectorKind::KNN;
  Eigen::Index train_dim = 0;
  std::variant<detail::KnnState, detail::PcaState, detail::EcodState, detail::IforestState,
               detail::ExternalState>
      state;

  // EXTERNAL models replay a file and cannot score a single free vector.
  double score(const Eigen::Ref<const Vector>& x) const;

  // One score per test row.  For EXTERNAL the row count must match the file.
  Vector score_all(const Eigen::Ref<const Matrix>& test) const;
};

// Distance to the k-th nearest training neighbor, exact search.
DetectorModel fit_knn(const Eigen::Ref<const Matrix>& train, int k = 5);

// Squared reconstruction error from the top n_components principal directions
// of the mean-centered train matrix.  Components are orthonormal with the
// largest-magnitude loading of each made nonnegative; a rank-deficient train
// truncates to the numerical rank.
DetectorModel fit_pca(const Eigen::Ref<const Matrix>& train, int n_components);
int default_pca_components(Eigen::Index n_rows, Eigen::Index n_dims);

// Per-feature empirical tail log-probabilities; the score is the max of the
// left, right, and skewness-directed aggregates, with probabilities floored
// at 1/N.
DetectorModel fit_ecod(const Eigen::Ref<const Matrix>& train);

// Isolation forest: trees on seeded subsamples, uniform split feature and
// uniform split value within the node's range, depth capped at
// ceil(log2 subsample); score(x) = 2^(-E[h(x)]/c(subsample)).
DetectorModel fit_iforest(const Eigen::Ref<const Matrix>& train, int n_trees, int subsample,
                          std::uint64_t seed);

// Average-path-length normalizer c(n) = 2 H(n-1) - 2 (n-1)/n with
// H(i) = ln(i) + Euler-Mascheroni; c(0) = c(1) = 0.
double iforest_path_normalizer(int n);

// Scores produced by outside tooling, one finite decimal per line, aligned
// with the test rows.
DetectorModel load_external_scores(const std::string& path);

// Builds a detector from a CLI token: knn | pca | ecod | iforest |
// external:<path>.  Built-in hyperparameters take their defaults.
DetectorModel fit_from_spec(const Eigen::Ref<const Matrix>& train, const std::string& token,
                            std::uint64_t seed);

}  // namespace ctad
