#include "ctad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ctad {
namespace {

void check_binary(const std::vector<int>& labels) {
  for (const int y : labels)
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
}

std::vector<std::size_t> order_descending(const Eigen::Ref<const Vector>& scores) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });
  return idx;
}

// Continued fraction for the incomplete beta function, modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double eps = 1e-15;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, int df) {
  if (df < 1) throw std::invalid_argument("student_t_sf: df must be >= 1");
  if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
  const double nu = static_cast<double>(df);
  const double x = nu / (nu + t * t);
  const double half_tail = 0.5 * regularized_incomplete_beta(nu / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double auc_roc(const Eigen::Ref<const Vector>& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size())
    throw std::invalid_argument("auc_roc: scores/labels length mismatch");
  check_binary(labels);

  const auto idx = order_descending(scores);
  std::int64_t n_pos = 0, n_neg = 0;
  for (const int y : labels) (y == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc_roc: needs both classes");

  // Walk descending tie groups; positives beat every negative in a strictly
  // lower group and split credit with negatives tied at the same score.
  std::int64_t twice_credit = 0;  // 2*concordant + ties
  std::int64_t neg_above = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    std::int64_t pos_here = 0, neg_here = 0;
    while (j < idx.size() &&
           scores[static_cast<Eigen::Index>(idx[j])] == scores[static_cast<Eigen::Index>(idx[i])]) {
      (labels[idx[j]] == 1 ? pos_here : neg_here)++;
      ++j;
    }
    twice_credit += pos_here * (2 * (n_neg - neg_above - neg_here) + neg_here);
    neg_above += neg_here;
    i = j;
  }
  return static_cast<double>(twice_credit) / (2.0 * static_cast<double>(n_pos * n_neg));
}

double auc_pr(const Eigen::Ref<const Vector>& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size())
    throw std::invalid_argument("auc_pr: scores/labels length mismatch");
  check_binary(labels);

  std::int64_t n_pos = 0;
  for (const int y : labels) n_pos += y;
  if (n_pos == 0) throw std::invalid_argument("auc_pr: needs at least one positive");

  const auto idx = order_descending(scores);
  double ap = 0.0;
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    std::int64_t tp_here = 0, fp_here = 0;
    while (j < idx.size() &&
           scores[static_cast<Eigen::Index>(idx[j])] == scores[static_cast<Eigen::Index>(idx[i])]) {
      (labels[idx[j]] == 1 ? tp_here : fp_here)++;
      ++j;
    }
    tp += tp_here;
    fp += fp_here;
    if (tp_here > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(tp_here) / static_cast<double>(n_pos);
    }
    i = j;
  }
  return ap;
}

EvalResult evaluate(const Eigen::Ref<const Vector>& scores, const std::vector<int>& labels) {
  EvalResult r;
  r.auc_roc = auc_roc(scores, labels);
  r.auc_pr = auc_pr(scores, labels);
  for (const int y : labels) (y == 1 ? r.n_pos : r.n_neg)++;
  return r;
}

PairedTestResult paired_t_test_one_tailed(const std::vector<double>& after,
                                          const std::vector<double>& before) {
  if (after.size() != before.size())
    throw std::invalid_argument("paired t-test: length mismatch");
  const auto n = after.size();
  if (n < 2) throw std::invalid_argument("paired t-test: need n >= 2 pairs");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = after[i] - before[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  int wins = 0;
  for (const double v : d) {
    ss += (v - mean) * (v - mean);
    if (v > 0.0) ++wins;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  PairedTestResult r;
  r.mean_diff = mean;
  r.df = static_cast<int>(n) - 1;
  r.win_count = wins;
  r.n = static_cast<int>(n);
  if (sd == 0.0) {
    r.t_stat = mean > 0.0   ? std::numeric_limits<double>::infinity()
               : mean < 0.0 ? -std::numeric_limits<double>::infinity()
                            : 0.0;
    r.p_value = mean > 0.0 ? 0.0 : mean < 0.0 ? 1.0 : 0.5;
    return r;
  }
  r.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_value = student_t_sf(r.t_stat, r.df);
  return r;
}

GapReport gap_report(const Eigen::Ref<const Vector>& ot_values, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(ot_values.size()) != labels.size())
    throw std::invalid_argument("gap_report: length mismatch");
  check_binary(labels);

  double sum_n = 0.0, sum_a = 0.0;
  std::int64_t count_n = 0, count_a = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      sum_a += ot_values[static_cast<Eigen::Index>(i)];
      ++count_a;
    } else {
      sum_n += ot_values[static_cast<Eigen::Index>(i)];
      ++count_n;
    }
  }
  if (count_n == 0 || count_a == 0) throw std::invalid_argument("gap_report: needs both classes");

  GapReport g;
  g.mean_ot_normal = sum_n / static_cast<double>(count_n);
  g.mean_ot_anomaly = sum_a / static_cast<double>(count_a);
  g.increase_pct = g.mean_ot_normal > 0.0
                       ? 100.0 * (g.mean_ot_anomaly - g.mean_ot_normal) / g.mean_ot_normal
                       : std::numeric_limits<double>::quiet_NaN();
  return g;
}

}  // namespace ctad
