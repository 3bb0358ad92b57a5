#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ctad/metrics.hpp"
#include "ctad/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctad;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("roc corners: perfect, inverted, and fully tied rankings") {
  const std::vector<int> labels{1, 1, 0, 0};
  CHECK(auc_roc(vec({4, 3, 2, 1}), labels) == doctest::Approx(1.0));
  CHECK(auc_roc(vec({1, 2, 3, 4}), labels) == doctest::Approx(0.0));
  CHECK(auc_roc(vec({7, 7, 7, 7}), labels) == doctest::Approx(0.5));
}

TEST_CASE("roc ties earn half credit") {
  const Vector s = vec({3, 2, 2, 1});
  const std::vector<int> labels{1, 1, 0, 0};
  // pairs: (3,2)+(3,1) concordant, (2,2) tie, (2,1) concordant -> 3.5/4
  CHECK(auc_roc(s, labels) == doctest::Approx(0.875));
}

TEST_CASE("roc agrees with the pairwise oracle on random data") {
  Rng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(40));
    Vector s(n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      // coarse grid forces frequent score ties
      s[i] = static_cast<double>(rng.below(6));
      labels[static_cast<std::size_t>(i)] = rng.below(2) == 1 ? 1 : 0;
      pos += labels[static_cast<std::size_t>(i)];
    }
    if (pos == 0) labels[0] = 1;
    if (pos == n) labels[0] = 0;
    CHECK(auc_roc(s, labels) == oracle::auc_roc(s, labels));
  }
}

TEST_CASE("roc is invariant under monotone score transforms") {
  Rng rng(21);
  const int n = 60;
  Vector s(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    s[i] = rng.normal();
    labels[static_cast<std::size_t>(i)] = rng.below(4) == 0 ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  const double base = auc_roc(s, labels);
  Vector warped = s;
  for (int i = 0; i < n; ++i) warped[i] = std::exp(0.5 * s[i]) + 3.0;
  CHECK(auc_roc(warped, labels) == base);
}

TEST_CASE("average precision on the worked three-point ranking") {
  CHECK(auc_pr(vec({0.9, 0.8, 0.7}), {1, 0, 1}) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("average precision corners") {
  CHECK(auc_pr(vec({4, 3, 2, 1}), {1, 1, 0, 0}) == doctest::Approx(1.0));
  // single positive ranked last: precision 1/n at full recall
  CHECK(auc_pr(vec({4, 3, 2, 1}), {0, 0, 0, 1}) == doctest::Approx(0.25));
  // all scores tied: one group, precision = prevalence
  CHECK(auc_pr(vec({5, 5, 5, 5}), {1, 0, 1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("evaluate bundles both curves with the class counts") {
  const EvalResult r = evaluate(vec({0.9, 0.8, 0.7}), {1, 0, 1});
  CHECK(r.auc_pr == doctest::Approx(5.0 / 6.0));
  CHECK(r.auc_roc == doctest::Approx(0.5));
  CHECK(r.n_pos == 2);
  CHECK(r.n_neg == 1);
}

TEST_CASE("metric inputs require both classes and matching lengths") {
  CHECK_THROWS_AS(auc_roc(vec({1, 2}), {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auc_roc(vec({1, 2}), {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(auc_roc(vec({1, 2, 3}), {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auc_roc(vec({1, 2}), {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(auc_pr(vec({1, 2}), {0, 0}), std::invalid_argument);
}

TEST_CASE("paired test on the worked difference vector") {
  // diffs {1, 1, 1, -1}: mean 0.5, sd 1, t = 1, df = 3
  const PairedTestResult r =
      paired_t_test_one_tailed({2, 3, 4, 1}, {1, 2, 3, 2});
  CHECK(r.n == 4);
  CHECK(r.df == 3);
  CHECK(r.mean_diff == doctest::Approx(0.5));
  CHECK(r.t_stat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.win_count == 3);
  CHECK(r.p_value == doctest::Approx(0.19550110947788532).epsilon(1e-10));
}

TEST_CASE("survival function matches numerical integration of the density") {
  for (const int df : {1, 2, 3, 5, 10, 30}) {
    for (const double t : {-3.0, -1.0, -0.25, 0.0, 0.5, 1.0, 2.0, 4.0}) {
      const double got = student_t_sf(t, df);
      const double want = oracle::t_sf(t, df);
      CHECK(std::abs(got - want) <= 1e-8);
    }
  }
  CHECK(student_t_sf(std::numeric_limits<double>::infinity(), 4) == 0.0);
  CHECK(student_t_sf(-std::numeric_limits<double>::infinity(), 4) == 1.0);
}

TEST_CASE("survival probability falls as the statistic grows") {
  double prev = 1.0;
  for (double t = -4.0; t <= 4.0; t += 0.5) {
    const double p = student_t_sf(t, 7);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("incomplete beta hits closed forms") {
  // I_x(1, 1) = x, I_x(1, b) = 1 - (1-x)^b
  CHECK(regularized_incomplete_beta(1, 1, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(1, 3, 0.25) ==
        doctest::Approx(1.0 - std::pow(0.75, 3)).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(2.5, 3.5, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.5, 3.5, 1.0) == 1.0);
}

TEST_CASE("degenerate paired tests resolve by the sign of the mean") {
  const auto up = paired_t_test_one_tailed({2, 2, 2}, {1, 1, 1});
  CHECK(up.p_value == 0.0);
  CHECK(std::isinf(up.t_stat));
  const auto down = paired_t_test_one_tailed({1, 1, 1}, {2, 2, 2});
  CHECK(down.p_value == 1.0);
  const auto flat = paired_t_test_one_tailed({1, 1, 1}, {1, 1, 1});
  CHECK(flat.p_value == 0.5);
  CHECK(flat.t_stat == 0.0);

  CHECK_THROWS_AS(paired_t_test_one_tailed({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(paired_t_test_one_tailed({1, 2}, {1}), std::invalid_argument);
}

TEST_CASE("class-conditional transport means and their relative gap") {
  const GapReport r = gap_report(vec({1, 2, 3, 6}), {0, 0, 0, 1});
  CHECK(r.mean_ot_normal == doctest::Approx(2.0));
  CHECK(r.mean_ot_anomaly == doctest::Approx(6.0));
  CHECK(r.increase_pct == doctest::Approx(200.0));

  const GapReport zero = gap_report(vec({0, 0, 5}), {0, 0, 1});
  CHECK(std::isnan(zero.increase_pct));
  CHECK_THROWS_AS(gap_report(vec({1, 2}), {1, 1}), std::invalid_argument);
}
