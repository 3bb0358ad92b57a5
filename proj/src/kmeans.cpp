#include "ctad/kmeans.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

#include "ctad/rng.hpp"
#include "json.hpp"

namespace ctad {
namespace {

// Squared Euclidean distance from every row of points to every centroid.
Matrix squared_distances(const Eigen::Ref<const Matrix>& points,
                         const Eigen::Ref<const Matrix>& centroids) {
  Matrix d2(points.rows(), centroids.rows());
  for (Eigen::Index j = 0; j < centroids.rows(); ++j)
    d2.col(j) = (points.rowwise() - centroids.row(j)).rowwise().squaredNorm();
  return d2;
}

// Lowest-index argmin per row.
std::vector<Eigen::Index> assign(const Matrix& d2) {
  std::vector<Eigen::Index> a(static_cast<std::size_t>(d2.rows()));
  for (Eigen::Index i = 0; i < d2.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < d2.cols(); ++j)
      if (d2(i, j) < d2(i, best)) best = j;
    a[static_cast<std::size_t>(i)] = best;
  }
  return a;
}

double mean_min_squared(const Matrix& d2) {
  return d2.rowwise().minCoeff().mean();
}

// k-means++ seeding: first centroid uniform, the rest sampled proportionally
// to the squared distance from the nearest centroid chosen so far.
Matrix seed_centroids(const Eigen::Ref<const Matrix>& train, int k, Rng& rng) {
  const Eigen::Index n = train.rows();
  Matrix centroids(k, train.cols());
  centroids.row(0) = train.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vector d2 = (train.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double r = rng.real01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = train.row(pick);
    d2 = d2.cwiseMin((train.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

CentroidSet fit_kmeans(const Eigen::Ref<const Matrix>& train, int k, std::uint64_t seed,
                       int max_iter, double tol, std::vector<double>* inertia_history) {
  if (train.rows() == 0) throw std::invalid_argument("fit_kmeans: empty training set");
  if (k < 1) throw std::invalid_argument("fit_kmeans: k must be >= 1");
  if (k > train.rows())
    throw std::invalid_argument("fit_kmeans: k exceeds number of training rows");
  if (max_iter < 1) throw std::invalid_argument("fit_kmeans: max_iter must be >= 1");

  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.cols();
  Rng rng(derive_seed(seed, "kmeans"));
  Matrix centroids = seed_centroids(train, k, rng);
  if (inertia_history) inertia_history->clear();

  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix d2 = squared_distances(train, centroids);
    std::vector<Eigen::Index> labels = assign(d2);

    Matrix next = Matrix::Zero(k, d);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(labels[static_cast<std::size_t>(i)]) += train.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int j = 0; j < k; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0)
        next.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);

    // Reseed each empty cluster to the point currently farthest from its own
    // centroid; claiming the point keeps a later empty cluster from reusing it.
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      Eigen::Index worst = 0;
      double worst_d2 = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double di = d2(i, labels[static_cast<std::size_t>(i)]);
        if (di > worst_d2) {
          worst_d2 = di;
          worst = i;
        }
      }
      next.row(j) = train.row(worst);
      d2(worst, labels[static_cast<std::size_t>(worst)]) = 0.0;
      labels[static_cast<std::size_t>(worst)] = j;
      counts[static_cast<std::size_t>(j)] = 1;
    }

    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = next;
    if (inertia_history)
      inertia_history->push_back(mean_min_squared(squared_distances(train, centroids)));
    if (shift < tol) break;
  }

  CentroidSet out;
  out.centroids = centroids;
  out.inertia = mean_min_squared(squared_distances(train, centroids));
  out.k = k;
  out.seed = seed;
  return out;
}

std::pair<Eigen::Index, double> nearest_centroid_distance(
    const Eigen::Ref<const Matrix>& centroids, const Eigen::Ref<const Vector>& x) {
  if (centroids.rows() == 0) throw std::invalid_argument("nearest_centroid_distance: no centroids");
  Eigen::Index best = 0;
  double best_d2 = (centroids.row(0).transpose() - x).squaredNorm();
  for (Eigen::Index j = 1; j < centroids.rows(); ++j) {
    const double d2 = (centroids.row(j).transpose() - x).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return {best, std::sqrt(best_d2)};
}

std::string CentroidSet::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["inertia"] = inertia;
  j["seed"] = seed;
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < centroids.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < centroids.cols(); ++c) row.push_back(centroids(r, c));
    rows.push_back(std::move(row));
  }
  j["centroids"] = std::move(rows);
  return j.dump(2);
}

CentroidSet CentroidSet::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CentroidSet out;
  out.k = j.at("k").get<int>();
  out.inertia = j.at("inertia").get<double>();
  out.seed = j.at("seed").get<std::uint64_t>();
  const auto& rows = j.at("centroids");
  if (!rows.is_array() || static_cast<int>(rows.size()) != out.k)
    throw std::runtime_error("CentroidSet: centroid row count does not match k");
  const Eigen::Index dims = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  out.centroids.resize(out.k, dims);
  for (Eigen::Index r = 0; r < out.centroids.rows(); ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != dims)
      throw std::runtime_error("CentroidSet: ragged centroid rows");
    for (Eigen::Index c = 0; c < dims; ++c) out.centroids(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return out;
}

void CentroidSet::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_json() << '\n';
}

CentroidSet CentroidSet::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace ctad
