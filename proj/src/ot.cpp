#include "ctad/ot.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ctad {
namespace {

// Successive shortest paths on the complete bipartite transportation graph.
// Supplies and demands are integral (lcm scaling), so every augmentation
// moves at least one unit and the loop terminates after at most L steps.
// Johnson potentials keep reduced costs nonnegative for Dijkstra; tiny
// negative residues from double rounding are clamped to zero.
std::vector<std::int64_t> min_cost_transport(const Matrix& cost, std::int64_t supply_each,
                                             std::int64_t demand_each) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index k = cost.cols();
  const Eigen::Index v = n + k;  // sources 0..n-1, sinks n..n+k-1
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::int64_t> flow(static_cast<std::size_t>(n * k), 0);
  std::vector<std::int64_t> supply(static_cast<std::size_t>(n), supply_each);
  std::vector<std::int64_t> demand(static_cast<std::size_t>(k), demand_each);
  std::vector<double> pot(static_cast<std::size_t>(v), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(v));
  std::vector<Eigen::Index> prev(static_cast<std::size_t>(v));
  std::vector<char> done(static_cast<std::size_t>(v));

  std::int64_t remaining = static_cast<std::int64_t>(k) * demand_each;
  while (remaining > 0) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), Eigen::Index{-1});
    std::fill(done.begin(), done.end(), char{0});
    for (Eigen::Index i = 0; i < n; ++i)
      if (supply[static_cast<std::size_t>(i)] > 0) dist[static_cast<std::size_t>(i)] = 0.0;

    // Dense Dijkstra; the graph has at most a few hundred nodes.
    for (Eigen::Index round = 0; round < v; ++round) {
      Eigen::Index u = -1;
      for (Eigen::Index w = 0; w < v; ++w)
        if (!done[static_cast<std::size_t>(w)] && dist[static_cast<std::size_t>(w)] < inf &&
            (u < 0 || dist[static_cast<std::size_t>(w)] < dist[static_cast<std::size_t>(u)]))
          u = w;
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      if (u < n) {
        for (Eigen::Index j = 0; j < k; ++j) {
          const Eigen::Index t = n + j;
          if (done[static_cast<std::size_t>(t)]) continue;
          const double rc = std::max(
              0.0, cost(u, j) + pot[static_cast<std::size_t>(u)] - pot[static_cast<std::size_t>(t)]);
          const double nd = dist[static_cast<std::size_t>(u)] + rc;
          if (nd < dist[static_cast<std::size_t>(t)]) {
            dist[static_cast<std::size_t>(t)] = nd;
            prev[static_cast<std::size_t>(t)] = u;
          }
        }
      } else {
        const Eigen::Index j = u - n;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (done[static_cast<std::size_t>(i)] || flow[static_cast<std::size_t>(i * k + j)] == 0)
            continue;
          const double rc = std::max(
              0.0, -cost(i, j) + pot[static_cast<std::size_t>(u)] - pot[static_cast<std::size_t>(i)]);
          const double nd = dist[static_cast<std::size_t>(u)] + rc;
          if (nd < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = nd;
            prev[static_cast<std::size_t>(i)] = u;
          }
        }
      }
    }

    Eigen::Index sink = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index t = n + j;
      if (demand[static_cast<std::size_t>(j)] > 0 && dist[static_cast<std::size_t>(t)] < inf &&
          (sink < 0 || dist[static_cast<std::size_t>(t)] < dist[static_cast<std::size_t>(sink)]))
        sink = t;
    }
    if (sink < 0) throw std::logic_error("transport: no augmenting path in a balanced problem");

    // Bottleneck along the path: backward arcs are limited by their flow,
    // forward source->sink arcs are uncapacitated.
    std::int64_t delta = demand[static_cast<std::size_t>(sink - n)];
    Eigen::Index origin = sink;
    while (prev[static_cast<std::size_t>(origin)] >= 0) {
      const Eigen::Index p = prev[static_cast<std::size_t>(origin)];
      if (origin < n)
        delta = std::min(delta, flow[static_cast<std::size_t>(origin * k + (p - n))]);
      origin = p;
    }
    delta = std::min(delta, supply[static_cast<std::size_t>(origin)]);

    for (Eigen::Index node = sink; prev[static_cast<std::size_t>(node)] >= 0;
         node = prev[static_cast<std::size_t>(node)]) {
      const Eigen::Index p = prev[static_cast<std::size_t>(node)];
      if (node >= n)
        flow[static_cast<std::size_t>(p * k + (node - n))] += delta;
      else
        flow[static_cast<std::size_t>(node * k + (p - n))] -= delta;
    }
    supply[static_cast<std::size_t>(origin)] -= delta;
    demand[static_cast<std::size_t>(sink - n)] -= delta;
    remaining -= delta;

    for (Eigen::Index w = 0; w < v; ++w)
      if (dist[static_cast<std::size_t>(w)] < inf)
        pot[static_cast<std::size_t>(w)] +=
            std::min(dist[static_cast<std::size_t>(w)], dist[static_cast<std::size_t>(sink)]);
  }
  return flow;
}

// Reference feasible plan, built without the solver: walk sources in row
// order and push each one's supply to the cheapest centroids that still have
// capacity. Every feasible plan costs at least the optimum, so this total is
// an upper bound on it.
double nearest_fill_cost(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index k = cost.cols();
  const std::int64_t scale = std::lcm(static_cast<std::int64_t>(n), static_cast<std::int64_t>(k));
  std::vector<std::int64_t> cap(static_cast<std::size_t>(k), scale / k);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return cost(i, a) < cost(i, b); });
    std::int64_t need = scale / n;
    for (const Eigen::Index j : order) {
      if (need == 0) break;
      const std::int64_t take = std::min(need, cap[static_cast<std::size_t>(j)]);
      cap[static_cast<std::size_t>(j)] -= take;
      need -= take;
      total += static_cast<double>(take) * cost(i, j);
    }
  }
  return total / static_cast<double>(scale);
}

}  // namespace

CostMatrix build_cost(const Eigen::Ref<const Matrix>& refs, const Eigen::Ref<const Vector>& x_test,
                      const Eigen::Ref<const Matrix>& centroids) {
  if (centroids.rows() < 1) throw std::invalid_argument("build_cost: need at least one centroid");
  if (centroids.cols() != x_test.size())
    throw std::invalid_argument("build_cost: centroid/test dimension mismatch");
  if (refs.rows() > 0 && refs.cols() != x_test.size())
    throw std::invalid_argument("build_cost: reference/test dimension mismatch");

  const Eigen::Index m = refs.rows();
  const Eigen::Index k = centroids.rows();
  CostMatrix c;
  c.entries.resize(m + 1, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i)
      c.entries(i, j) = (refs.row(i) - centroids.row(j)).norm();
    c.entries(m, j) = (x_test.transpose() - centroids.row(j)).norm();
  }
  return c;
}

TransportPlan solve_ot(const CostMatrix& c) {
  const Eigen::Index n = c.entries.rows();
  const Eigen::Index k = c.entries.cols();
  if (n < 1 || k < 1) throw std::invalid_argument("solve_ot: empty cost matrix");
  if (!c.entries.allFinite() || c.entries.minCoeff() < 0.0)
    throw std::invalid_argument("solve_ot: costs must be finite and nonnegative");

  const std::int64_t scale = std::lcm(static_cast<std::int64_t>(n), static_cast<std::int64_t>(k));
  const auto flow = min_cost_transport(c.entries, scale / n, scale / k);

  TransportPlan plan;
  plan.mass.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      plan.mass(i, j) =
          static_cast<double>(flow[static_cast<std::size_t>(i * k + j)]) / static_cast<double>(scale);
  plan.cost = (plan.mass.array() * c.entries.array()).sum();
  return plan;
}

double ot_distance(const Eigen::Ref<const Matrix>& refs, const Eigen::Ref<const Vector>& x_test,
                   const Eigen::Ref<const Matrix>& centroids) {
  return solve_ot(build_cost(refs, x_test, centroids)).cost;
}

BoundReport bounds(const Eigen::Ref<const Matrix>& refs, const Eigen::Ref<const Vector>& x_test,
                   const Eigen::Ref<const Matrix>& centroids) {
  const CostMatrix c = build_cost(refs, x_test, centroids);
  const Eigen::Index m = refs.rows();

  BoundReport r;
  r.ref_dists = c.entries.topRows(m).rowwise().minCoeff();
  r.nearest_dist = c.entries.row(m).minCoeff();
  r.lower = r.nearest_dist / static_cast<double>(m + 1);
  const double ref_sum = m > 0 ? r.ref_dists.sum() : 0.0;
  r.nearest_assignment = (ref_sum + r.nearest_dist) / static_cast<double>(m + 1);
  r.upper = nearest_fill_cost(c.entries);
  r.ot = solve_ot(c).cost;
  if (r.ot < r.nearest_assignment - 1e-9 || r.ot > r.upper + 1e-9)
    throw std::logic_error("transport cost escaped its analytic bounds (solver bug)");
  return r;
}

}  // namespace ctad
