#include "ctad/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ctad/rng.hpp"

namespace ctad {
namespace {

using detail::EcodState;
using detail::ExternalState;
using detail::IforestState;
using detail::IsoNode;
using detail::IsoTree;
using detail::KnnState;
using detail::PcaState;

constexpr double kEulerMascheroni = 0.5772156649;

double knn_score(const KnnState& s, const Eigen::Ref<const Vector>& x) {
  Vector d2 = (s.train.rowwise() - x.transpose()).rowwise().squaredNorm();
  std::vector<double> d(d2.data(), d2.data() + d2.size());
  std::nth_element(d.begin(), d.begin() + (s.k - 1), d.end());
  return std::sqrt(d[static_cast<std::size_t>(s.k - 1)]);
}

double pca_score(const PcaState& s, const Eigen::Ref<const Vector>& x) {
  Vector centered = x - s.mean;
  Vector residual = centered - s.components * (s.components.transpose() * centered);
  return residual.squaredNorm();
}

double ecod_score(const EcodState& s, const Eigen::Ref<const Vector>& x) {
  const double n = static_cast<double>(s.n_train);
  const double floor_p = 1.0 / n;
  double left = 0.0, right = 0.0, directed = 0.0;
  for (std::size_t j = 0; j < s.sorted_cols.size(); ++j) {
    const auto& col = s.sorted_cols[j];
    const auto le = static_cast<double>(
        std::upper_bound(col.begin(), col.end(), x[static_cast<Eigen::Index>(j)]) - col.begin());
    const double cdf = le / n;
    const double lp = -std::log(std::max(cdf, floor_p));
    const double rp = -std::log(std::max(1.0 - cdf + floor_p, floor_p));
    left += lp;
    right += rp;
    directed += s.left_tail[j] ? lp : rp;
  }
  return std::max({left, right, directed});
}

int iforest_depth_cap(int subsample) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(subsample))));
}

// Recursive partitioning over index sets; a node becomes a leaf at the depth
// cap, at a single point, or when the drawn feature has zero spread.
int build_iso_node(IsoTree& tree, const Eigen::Ref<const Matrix>& train,
                   std::vector<Eigen::Index>& rows, int depth, int cap, Rng& rng) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[static_cast<std::size_t>(id)].size = static_cast<int>(rows.size());
  if (rows.size() <= 1 || depth >= cap) return id;

  const auto feature =
      static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(train.cols())));
  double lo = train(rows[0], feature), hi = lo;
  for (const Eigen::Index r : rows) {
    lo = std::min(lo, train(r, feature));
    hi = std::max(hi, train(r, feature));
  }
  if (hi <= lo) return id;

  const double split = lo + rng.real01() * (hi - lo);
  std::vector<Eigen::Index> left_rows, right_rows;
  for (const Eigen::Index r : rows)
    (train(r, feature) < split ? left_rows : right_rows).push_back(r);
  rows.clear();
  rows.shrink_to_fit();

  const int left = build_iso_node(tree, train, left_rows, depth + 1, cap, rng);
  const int right = build_iso_node(tree, train, right_rows, depth + 1, cap, rng);
  auto& node = tree.nodes[static_cast<std::size_t>(id)];
  node.feature = static_cast<int>(feature);
  node.threshold = split;
  node.left = left;
  node.right = right;
  return id;
}

double iso_path_length(const IsoTree& tree, const Eigen::Ref<const Vector>& x) {
  int id = 0;
  int depth = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    id = x[node.feature] < node.threshold ? node.left : node.right;
    ++depth;
  }
  return depth + iforest_path_normalizer(tree.nodes[static_cast<std::size_t>(id)].size);
}

double iforest_score(const IforestState& s, const Eigen::Ref<const Vector>& x) {
  double total = 0.0;
  for (const auto& tree : s.trees) total += iso_path_length(tree, x);
  const double mean_path = total / static_cast<double>(s.trees.size());
  return std::exp2(-mean_path / iforest_path_normalizer(s.subsample));
}

void check_dim(const DetectorModel& m, Eigen::Index got) {
  if (got != m.train_dim)
    throw std::invalid_argument("detector: input has " + std::to_string(got) +
                                " features, model was fit on " + std::to_string(m.train_dim));
}

}  // namespace

double iforest_path_normalizer(int n) {
  if (n <= 1) return 0.0;
  const double harmonic = std::log(static_cast<double>(n - 1)) + kEulerMascheroni;
  return 2.0 * harmonic - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

double DetectorModel::score(const Eigen::Ref<const Vector>& x) const {
  switch (kind) {
    case DetectorKind::KNN:
      check_dim(*this, x.size());
      return knn_score(std::get<KnnState>(state), x);
    case DetectorKind::PCA:
      check_dim(*this, x.size());
      return pca_score(std::get<PcaState>(state), x);
    case DetectorKind::ECOD:
      check_dim(*this, x.size());
      return ecod_score(std::get<EcodState>(state), x);
    case DetectorKind::IFOREST:
      check_dim(*this, x.size());
      return iforest_score(std::get<IforestState>(state), x);
    case DetectorKind::EXTERNAL:
      throw std::logic_error("external scores are row-aligned; use score_all");
  }
  throw std::logic_error("unreachable detector kind");
}

Vector DetectorModel::score_all(const Eigen::Ref<const Matrix>& test) const {
  if (kind == DetectorKind::EXTERNAL) {
    const auto& s = std::get<ExternalState>(state);
    if (s.scores.size() != test.rows())
      throw std::runtime_error("external scores: " + std::to_string(s.scores.size()) +
                               " entries for " + std::to_string(test.rows()) + " test rows");
    return s.scores;
  }
  Vector out(test.rows());
  for (Eigen::Index i = 0; i < test.rows(); ++i) out[i] = score(test.row(i).transpose());
  return out;
}

DetectorModel fit_knn(const Eigen::Ref<const Matrix>& train, int k) {
  if (train.rows() == 0) throw std::invalid_argument("fit_knn: empty training set");
  if (k < 1 || k > train.rows())
    throw std::invalid_argument("fit_knn: k must be in [1, " + std::to_string(train.rows()) + "]");
  DetectorModel m;
  m.kind = DetectorKind::KNN;
  m.train_dim = train.cols();
  m.state = KnnState{train, k};
  return m;
}

int default_pca_components(Eigen::Index n_rows, Eigen::Index n_dims) {
  const Eigen::Index half = (n_dims + 1) / 2;
  return static_cast<int>(std::max<Eigen::Index>(1, std::min(half, n_rows - 1)));
}

DetectorModel fit_pca(const Eigen::Ref<const Matrix>& train, int n_components) {
  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.cols();
  if (n < 2) throw std::invalid_argument("fit_pca: need at least two training rows");
  if (n_components < 1 || n_components > std::min(n - 1, d))
    throw std::invalid_argument("fit_pca: n_components must be in [1, min(N-1, D)]");

  Vector mean = train.colwise().mean();
  Matrix centered = train.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");

  // Eigenvalues come back ascending; keep the top directions that are above
  // the numerical-rank threshold.
  const Vector values = eig.eigenvalues();
  const double rank_floor = std::max(values[d - 1], 0.0) * static_cast<double>(d) * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (values[i] > rank_floor) ++rank;
  const int r = std::min(n_components, rank);

  Matrix components(d, r);
  for (int c = 0; c < r; ++c) components.col(c) = eig.eigenvectors().col(d - 1 - c);
  for (int c = 0; c < r; ++c) {
    Eigen::Index argmax = 0;
    components.col(c).cwiseAbs().maxCoeff(&argmax);
    if (components(argmax, c) < 0.0) components.col(c) = -components.col(c);
  }

  DetectorModel m;
  m.kind = DetectorKind::PCA;
  m.train_dim = d;
  m.state = PcaState{std::move(mean), std::move(components)};
  return m;
}

DetectorModel fit_ecod(const Eigen::Ref<const Matrix>& train) {
  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.cols();
  if (n == 0) throw std::invalid_argument("fit_ecod: empty training set");

  EcodState s;
  s.n_train = n;
  s.sorted_cols.resize(static_cast<std::size_t>(d));
  s.left_tail.resize(static_cast<std::size_t>(d), 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    auto& col = s.sorted_cols[static_cast<std::size_t>(j)];
    col.assign(train.col(j).data(), train.col(j).data() + n);
    std::sort(col.begin(), col.end());

    double skew = 0.0;
    if (n > 2) {
      const double mu = train.col(j).mean();
      const double ss = (train.col(j).array() - mu).square().sum();
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      if (sd > 0.0) {
        const double cubed = ((train.col(j).array() - mu) / sd).cube().sum();
        skew = cubed * static_cast<double>(n) /
               (static_cast<double>(n - 1) * static_cast<double>(n - 2));
      }
    }
    s.left_tail[static_cast<std::size_t>(j)] = skew >= 0.0 ? 1 : 0;
  }

  DetectorModel m;
  m.kind = DetectorKind::ECOD;
  m.train_dim = d;
  m.state = std::move(s);
  return m;
}

DetectorModel fit_iforest(const Eigen::Ref<const Matrix>& train, int n_trees, int subsample,
                          std::uint64_t seed) {
  const Eigen::Index n = train.rows();
  if (n_trees < 1) throw std::invalid_argument("fit_iforest: n_trees must be >= 1");
  if (subsample < 2 || subsample > n)
    throw std::invalid_argument("fit_iforest: subsample must be in [2, N]");

  IforestState s;
  s.subsample = subsample;
  s.trees.resize(static_cast<std::size_t>(n_trees));
  const int cap = iforest_depth_cap(subsample);
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(seed + static_cast<std::uint64_t>(t));
    const auto picked =
        rng.sample_without_replacement(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(subsample));
    std::vector<Eigen::Index> rows(picked.begin(), picked.end());
    build_iso_node(s.trees[static_cast<std::size_t>(t)], train, rows, 0, cap, rng);
  }

  DetectorModel m;
  m.kind = DetectorKind::IFOREST;
  m.train_dim = train.cols();
  m.state = std::move(s);
  return m;
}

DetectorModel load_external_scores(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a number: " + line);
    }
    while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used]))) ++used;
    if (used != line.size() || !std::isfinite(v))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a finite number: " + line);
    values.push_back(v);
  }

  DetectorModel m;
  m.kind = DetectorKind::EXTERNAL;
  m.train_dim = 0;
  ExternalState s;
  s.scores = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  m.state = std::move(s);
  return m;
}

DetectorModel fit_from_spec(const Eigen::Ref<const Matrix>& train, const std::string& token,
                            std::uint64_t seed) {
  if (token == "knn") return fit_knn(train, std::min<Eigen::Index>(5, train.rows()));
  if (token == "pca") return fit_pca(train, default_pca_components(train.rows(), train.cols()));
  if (token == "ecod") return fit_ecod(train);
  if (token == "iforest")
    return fit_iforest(train, 100, static_cast<int>(std::min<Eigen::Index>(256, train.rows())), seed);
  if (token.rfind("external:", 0) == 0) return load_external_scores(token.substr(9));
  throw std::invalid_argument("unknown detector '" + token +
                              "' (expected knn|pca|ecod|iforest|external:<path>)");
}

}  // namespace ctad
