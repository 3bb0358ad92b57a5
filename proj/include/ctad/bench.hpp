#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctad/calibrate.hpp"
#include "ctad/dataset.hpp"
#include "ctad/metrics.hpp"

namespace ctad {

/// One benchmark grid: every dataset x detector x seed cell runs the full
/// split/standardize/fit/score/calibrate/evaluate pipeline with one
/// calibrator configuration.
struct BenchConfig {
  std::vector<std::string> data_paths;
  std::string label_col = "label";
  std::vector<std::string> detectors;  // knn | pca | ecod | iforest | external:<path>
  CalibratorConfig calibrator;         // per-cell seed is substituted from `seeds`
  std::vector<std::uint64_t> seeds;
  Normalize normalize = Normalize::NONE;
  std::string out_dir;  // empty: compute only, write nothing
  int jobs = 1;
};

/// One grid cell; failed cells carry the error text instead of aborting the
/// run.  Timing fields live apart from the metrics so the metric tables stay
/// byte-reproducible.
struct BenchCell {
  std::string dataset;
  std::string detector;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int train_rows = 0;
  int test_rows = 0;
  int dims = 0;
  EvalResult baseline;
  EvalResult calibrated;
  GapReport gap;
  double fit_detector_ms = 0.0;
  double fit_calibrator_ms = 0.0;
  double base_ms_per_sample = 0.0;
  double ot_ms_per_sample = 0.0;
};

struct BenchReport {
  std::vector<BenchCell> cells;  // grid order: dataset-major, then detector, then seed

  bool all_ok() const;
  bool any_ok() const;
};

/// Table-style aggregate per (detector, metric): seeds averaged within each
/// dataset, then compared across datasets.
struct SummaryRow {
  std::string detector;
  std::string metric;  // auc_roc | auc_pr
  int n_datasets = 0;
  double baseline_mean = 0.0;
  double improvement_mean = 0.0;      // mean of (calibrated - baseline)
  double improvement_pct_mean = 0.0;  // mean per-dataset relative improvement
  int win_count = 0;                  // datasets with strict improvement
  double p_value = 1.0;               // paired one-tailed; NaN under 2 datasets
};

// Runs the grid on a worker pool (cfg.jobs threads) and, when out_dir is
// set, writes results.csv, summary.csv, timings.csv, and config.json.
// Deterministic per config apart from the timing table.
BenchReport run_bench(const BenchConfig& cfg);

std::vector<SummaryRow> summarize(const BenchReport& report);

enum class SweepParam { K, M, LAMBDA };

/// Long-format sweep row: one grid cell at one parameter value.
struct SweepRow {
  double value = 0.0;
  BenchCell cell;
};

// Reruns the grid once per value with the chosen calibrator parameter
// overridden; writes sweep.csv when out_dir is set.
std::vector<SweepRow> sweep(const BenchConfig& cfg, SweepParam param,
                            const std::vector<double>& values);

SweepParam parse_sweep_param(const std::string& token);  // k | m | lambda

struct ProfileResult {
  int m = 0;
  int k = 0;
  int dim = 0;
  int n_samples = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

// Times ot_distance per sample against synthetic references and centroids.
ProfileResult profile_ot(int m, int k, int dim, int n_samples, std::uint64_t seed);

// Shared CSV number format: shortest representation that round-trips.
std::string format_double(double v);

}  // namespace ctad
