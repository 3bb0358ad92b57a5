#pragma once

#include <vector>

#include "ctad/dataset.hpp"

namespace ctad {

struct EvalResult {
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

struct PairedTestResult {
  double mean_diff = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  int df = 0;
  int win_count = 0;  // strictly positive differences
  int n = 0;
};

/// Class-conditional transport-distance means and the relative increase of
/// the anomaly mean over the normal mean.
struct GapReport {
  double mean_ot_normal = 0.0;
  double mean_ot_anomaly = 0.0;
  double increase_pct = 0.0;  // NaN when the normal mean is zero
};

// Mann-Whitney AUC: (concordant pairs + half credit for score ties) /
// (n_pos * n_neg), accumulated in integers.  Requires both classes.
double auc_roc(const Eigen::Ref<const Vector>& scores, const std::vector<int>& labels);

// Average precision over descending-score thresholds; tied scores form a
// single threshold group.  Requires at least one positive.
double auc_pr(const Eigen::Ref<const Vector>& scores, const std::vector<int>& labels);

EvalResult evaluate(const Eigen::Ref<const Vector>& scores, const std::vector<int>& labels);

// One-tailed paired t-test of H1: mean(after - before) > 0.  A zero-variance
// difference vector degenerates to p = 0, 1, or 0.5 by the sign of the mean.
PairedTestResult paired_t_test_one_tailed(const std::vector<double>& after,
                                          const std::vector<double>& before);

GapReport gap_report(const Eigen::Ref<const Vector>& ot_values, const std::vector<int>& labels);

// P(T_df > t) for Student's t, via the regularized incomplete beta function.
double student_t_sf(double t, int df);

// I_x(a, b), continued-fraction evaluation, absolute error well under 1e-10
// for the parameter ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace ctad
