#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctad/bench.hpp"
#include "ctad/calibrate.hpp"
#include "ctad/dataset.hpp"
#include "ctad/detectors.hpp"
#include "ctad/kmeans.hpp"
#include "ctad/metrics.hpp"
#include "ctad/ot.hpp"
#include "ctad/rng.hpp"
#include "ctad/theory.hpp"

namespace {

using namespace ctad;

struct Pipeline {
  Dataset dataset;
  TrainTestSplit split_result;
  Standardizer standardizer;
  Matrix train;
  Matrix test;
};

Pipeline prepare(const std::string& data, const std::string& label_col, std::uint64_t seed) {
  Pipeline p;
  p.dataset = load_csv(data, label_col);
  p.split_result = split(p.dataset, seed);
  p.standardizer = fit_standardizer(p.split_result.train);
  p.train = p.standardizer.transform(p.split_result.train);
  p.test = p.standardizer.transform(p.split_result.test_features);
  return p;
}

Normalize parse_normalize(const std::string& token) {
  if (token == "none") return Normalize::NONE;
  if (token == "minmax") return Normalize::MINMAX;
  throw CLI::ValidationError("--normalize", "expected none|minmax, got '" + token + "'");
}

void write_matrix_csv(const std::string& path, const Eigen::Ref<const Matrix>& rows,
                      const std::vector<int>* labels) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index j = 0; j < rows.cols(); ++j) f << 'x' << j << ',';
  f << "label\n";
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) f << format_double(rows(i, j)) << ',';
    f << (labels ? (*labels)[static_cast<std::size_t>(i)] : 0) << '\n';
  }
}

int cmd_split(const std::string& data, const std::string& label_col, std::uint64_t seed,
              const std::string& out_dir, bool emit_order) {
  const Dataset ds = load_csv(data, label_col);
  const TrainTestSplit sp = split(ds, seed);
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  write_matrix_csv((dir / "train.csv").string(), sp.train, nullptr);
  write_matrix_csv((dir / "test.csv").string(), sp.test_features, &sp.test_labels);
  if (emit_order) {
    std::ofstream f(dir / "test_order.txt");
    if (!f) throw std::runtime_error("cannot write test_order.txt");
    for (const auto row : sp.test_rows) f << row << '\n';
  }
  std::cout << ds.name << ": " << ds.n_rows() << " rows, " << ds.n_dims() << " dims, "
            << ds.n_anomalies() << " anomalies; train " << sp.train.rows() << ", test "
            << sp.test_features.rows() << '\n';
  return 0;
}

int cmd_fit_kmeans(const std::string& data, const std::string& label_col, int k,
                   std::uint64_t seed, const std::string& out) {
  const Pipeline p = prepare(data, label_col, seed);
  const CentroidSet q = fit_kmeans(p.train, k, seed);
  if (!out.empty()) q.save(out);
  std::cout << "k=" << q.k << " inertia=" << format_double(q.inertia) << '\n';
  return 0;
}

int cmd_score(const std::string& data, const std::string& label_col, const std::string& detector,
              std::uint64_t seed, const std::string& out) {
  const Pipeline p = prepare(data, label_col, seed);
  const DetectorModel model = fit_from_spec(p.train, detector, derive_seed(seed, "detector"));
  const Vector scores = model.score_all(p.test);

  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << "row_index,score,label\n";
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      f << p.split_result.test_rows[static_cast<std::size_t>(i)] << ','
        << format_double(scores[i]) << ','
        << p.split_result.test_labels[static_cast<std::size_t>(i)] << '\n';
  }
  const EvalResult eval = evaluate(scores, p.split_result.test_labels);
  std::cout << detector << " on " << p.dataset.name << ": auc_roc="
            << format_double(eval.auc_roc) << " auc_pr=" << format_double(eval.auc_pr) << '\n';
  return 0;
}

int cmd_calibrate(const std::string& data, const std::string& label_col,
                  const std::string& detector, const std::string& calibrator, int m, int k,
                  double lambda, std::uint64_t seed, const std::string& normalize,
                  const std::string& centroids_path, const std::string& out) {
  const Pipeline p = prepare(data, label_col, seed);
  const DetectorModel model = fit_from_spec(p.train, detector, derive_seed(seed, "detector"));
  const Vector base = model.score_all(p.test);

  CalibratorConfig cfg;
  cfg.kind = parse_calibrator(calibrator);
  cfg.m = m;
  cfg.k = k;
  cfg.lambda = lambda;
  cfg.seed = seed;
  CalibratorState state = fit_calibrator(p.train, cfg);
  if (!centroids_path.empty()) {
    const CentroidSet loaded = CentroidSet::load(centroids_path);
    if (loaded.centroids.cols() != p.train.cols())
      throw std::runtime_error("centroid artifact dimension mismatch");
    state.centroids = loaded;
    state.config.k = loaded.k;
  }

  const Normalize norm = parse_normalize(normalize);
  const auto records = calibrate_scores(state, base, p.test, lambda, norm);
  Vector calibrated(base.size());
  for (Eigen::Index i = 0; i < base.size(); ++i)
    calibrated[i] = records[static_cast<std::size_t>(i)].calibrated;

  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << "row_index,base_score,delta,calibrated_score,label\n";
    for (Eigen::Index i = 0; i < base.size(); ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      f << p.split_result.test_rows[static_cast<std::size_t>(i)] << ','
        << format_double(r.base_score) << ',' << format_double(r.delta) << ','
        << format_double(r.calibrated) << ','
        << p.split_result.test_labels[static_cast<std::size_t>(i)] << '\n';
    }
    nlohmann::json j;
    j["data"] = data;
    j["label_col"] = label_col;
    j["detector"] = detector;
    j["calibrator"] = calibrator;
    j["m"] = m;
    j["k"] = k;
    j["lambda"] = lambda;
    j["seed"] = seed;
    j["normalize"] = normalize;
    std::ofstream cf(out + ".config.json");
    if (!cf) throw std::runtime_error("cannot write " + out + ".config.json");
    cf << j.dump(2) << '\n';
  }

  const EvalResult before = evaluate(base, p.split_result.test_labels);
  const EvalResult after = evaluate(calibrated, p.split_result.test_labels);
  std::cout << p.dataset.name << " " << detector << "+" << calibrator
            << ": base auc_roc=" << format_double(before.auc_roc)
            << " cal auc_roc=" << format_double(after.auc_roc)
            << " base auc_pr=" << format_double(before.auc_pr)
            << " cal auc_pr=" << format_double(after.auc_pr) << '\n';
  return 0;
}

int report_exit_code(const BenchReport& report) {
  if (report.all_ok()) return 0;
  return 2;
}

int cmd_bench(const BenchConfig& cfg) {
  const BenchReport report = run_bench(cfg);
  for (const auto& row : summarize(report)) {
    std::cout << row.detector << " " << row.metric << ": base=" << format_double(row.baseline_mean)
              << " improv=" << format_double(row.improvement_mean) << " win=" << row.win_count
              << "/" << row.n_datasets << " p=" << format_double(row.p_value) << '\n';
  }
  int failures = 0;
  for (const auto& c : report.cells)
    if (!c.ok) {
      ++failures;
      std::cerr << "cell failed: " << c.dataset << " " << c.detector << " seed " << c.seed << ": "
                << c.error << '\n';
    }
  std::cout << report.cells.size() - static_cast<std::size_t>(failures) << "/"
            << report.cells.size() << " cells ok\n";
  return report_exit_code(report);
}

int cmd_sweep(const BenchConfig& cfg, const std::string& param,
              const std::vector<double>& values) {
  const auto rows = sweep(cfg, parse_sweep_param(param), values);
  int failures = 0;
  for (const auto& r : rows)
    if (!r.cell.ok) ++failures;
  std::cout << rows.size() - static_cast<std::size_t>(failures) << "/" << rows.size()
            << " sweep cells ok\n";
  return failures == 0 ? 0 : 2;
}

int cmd_theory(const SyntheticSpec& spec, int m, int k, int runs,
               const std::vector<int>& m_values, int trials, const std::string& out) {
  nlohmann::json j;
  j["spec"] = {{"k_clusters", spec.k_clusters},
               {"cluster_std", spec.cluster_std},
               {"anomaly_offset", spec.anomaly_offset},
               {"n_train", spec.n_train},
               {"n_test_normal", spec.n_test_normal},
               {"n_test_anomaly", spec.n_test_anomaly},
               {"dim", spec.dim},
               {"seed", spec.seed}};
  j["m"] = m;
  j["k"] = k;

  const GapFloorCheck first = check_gap_floor(spec, m, k, spec.seed);
  j["gap_floor"] = {{"empirical_gap", first.empirical_gap},
                   {"predicted_floor", first.predicted_floor},
                   {"gap_stderr", first.gap_stderr},
                   {"holds", first.holds},
                   {"eps_hat", first.eps_hat},
                   {"eta_hat", first.eta_hat}};

  if (runs > 1) {
    int positive = 0, holds = 0;
    for (int r = 0; r < runs; ++r) {
      SyntheticSpec s = spec;
      s.seed = spec.seed + static_cast<std::uint64_t>(r);
      const GapFloorCheck c = check_gap_floor(s, m, k, s.seed);
      if (c.empirical_gap > 0.0) ++positive;
      if (c.holds) ++holds;
    }
    j["runs"] = {{"count", runs}, {"gap_positive", positive}, {"holds", holds}};
    std::cout << "gap>0 in " << positive << "/" << runs << ", floor holds in " << holds << "/"
              << runs << '\n';
  } else {
    std::cout << "gap=" << format_double(first.empirical_gap)
              << " floor=" << format_double(first.predicted_floor)
              << " holds=" << (first.holds ? "yes" : "no") << '\n';
  }

  const VarianceTable table = check_variance(spec, m_values, trials);
  j["variance"] = {{"m_values", table.m_values},
                   {"variances", table.variances},
                   {"log_log_slope", table.log_log_slope}};
  std::cout << "variance slope=" << format_double(table.log_log_slope) << '\n';

  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_profile(int m, int k, int dim, int samples, std::uint64_t seed) {
  const ProfileResult r = profile_ot(m, k, dim, samples, seed);
  std::cout << "m=" << r.m << " k=" << r.k << " dim=" << r.dim << " samples=" << r.n_samples
            << " median_ms=" << format_double(r.median_ms) << " p95_ms=" << format_double(r.p95_ms)
            << '\n';
  return 0;
}

int cmd_ot(const std::string& cost_path) {
  std::ifstream f(cost_path);
  if (!f) throw std::runtime_error("cannot read " + cost_path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(cost_path + ": ragged cost matrix");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(cost_path + ": empty cost matrix");

  CostMatrix c;
  c.entries.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < c.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < c.entries.cols(); ++j)
      c.entries(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  const TransportPlan plan = solve_ot(c);
  std::cout << "cost " << format_double(plan.cost) << "\nplan\n";
  for (Eigen::Index i = 0; i < plan.mass.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.mass.cols(); ++j) {
      if (j > 0) std::cout << ' ';
      std::cout << format_double(plan.mass(i, j));
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport-calibrated anomaly scoring pipeline"};
  app.require_subcommand(1);

  std::string data, label_col = "label", out, detector = "knn", calibrator = "ctad";
  std::string normalize = "none", centroids_path, cost_path, sweep_param = "lambda";
  std::vector<std::string> data_paths, detectors{"knn"};
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> sweep_values;
  std::vector<int> variance_m{5, 10, 20, 40};
  std::uint64_t seed = 0;
  int m = 20, k = 5, jobs = 1, dim = 20, samples = 1000, runs = 1, trials = 50;
  double lambda = 1.0;
  bool emit_order = false;
  SyntheticSpec spec;

  auto* sp_split = app.add_subcommand("split", "Write one-class train/test split artifacts");
  sp_split->add_option("--data", data, "dataset CSV")->required();
  sp_split->add_option("--label-col", label_col, "label column name or 0-based index");
  sp_split->add_option("--seed", seed, "base seed");
  sp_split->add_option("--out", out, "output directory")->required();
  sp_split->add_flag("--emit-order", emit_order, "also write test_order.txt");

  auto* sp_kmeans = app.add_subcommand("fit-kmeans", "Fit centroids on the train split");
  sp_kmeans->add_option("--data", data)->required();
  sp_kmeans->add_option("--label-col", label_col);
  sp_kmeans->add_option("--k", k, "number of centroids");
  sp_kmeans->add_option("--seed", seed);
  sp_kmeans->add_option("--out", out, "centroid JSON artifact");

  auto* sp_score = app.add_subcommand("score", "Fit a base detector and score the test split");
  sp_score->add_option("--data", data)->required();
  sp_score->add_option("--label-col", label_col);
  sp_score->add_option("--detector", detector, "knn|pca|ecod|iforest|external:<path>");
  sp_score->add_option("--seed", seed);
  sp_score->add_option("--out", out, "scores CSV");

  auto* sp_cal = app.add_subcommand("calibrate", "Score and apply a calibrator");
  sp_cal->add_option("--data", data)->required();
  sp_cal->add_option("--label-col", label_col);
  sp_cal->add_option("--detector", detector);
  sp_cal->add_option("--calibrator", calibrator, "ctad|centroid|mahalanobis|ot-only|none");
  sp_cal->add_option("--m", m, "reference samples");
  sp_cal->add_option("--k", k, "centroids");
  sp_cal->add_option("--lambda", lambda, "calibration weight");
  sp_cal->add_option("--seed", seed);
  sp_cal->add_option("--normalize", normalize, "none|minmax");
  sp_cal->add_option("--centroids", centroids_path, "reuse a fit-kmeans artifact");
  sp_cal->add_option("--out", out, "calibration CSV");

  auto* sp_bench = app.add_subcommand("bench", "Run the dataset x detector x seed grid");
  sp_bench->add_option("--data", data_paths, "dataset CSVs")->required();
  sp_bench->add_option("--label-col", label_col);
  sp_bench->add_option("--detector", detectors, "detector tokens");
  sp_bench->add_option("--calibrator", calibrator);
  sp_bench->add_option("--m", m);
  sp_bench->add_option("--k", k);
  sp_bench->add_option("--lambda", lambda);
  sp_bench->add_option("--seed", seeds, "seeds (repeatable)")->delimiter(',');
  sp_bench->add_option("--normalize", normalize);
  sp_bench->add_option("--out", out, "report directory");
  sp_bench->add_option("--jobs", jobs, "worker threads");

  auto* sp_sweep = app.add_subcommand("sweep", "Rerun the grid over one calibrator parameter");
  sp_sweep->add_option("--data", data_paths)->required();
  sp_sweep->add_option("--label-col", label_col);
  sp_sweep->add_option("--detector", detectors);
  sp_sweep->add_option("--calibrator", calibrator);
  sp_sweep->add_option("--m", m);
  sp_sweep->add_option("--k", k);
  sp_sweep->add_option("--lambda", lambda);
  sp_sweep->add_option("--seed", seeds)->delimiter(',');
  sp_sweep->add_option("--normalize", normalize);
  sp_sweep->add_option("--out", out);
  sp_sweep->add_option("--jobs", jobs);
  sp_sweep->add_option("--param", sweep_param, "k|m|lambda")->required();
  sp_sweep->add_option("--values", sweep_values, "sweep values")->required()->delimiter(',');

  auto* sp_theory = app.add_subcommand("theory-check", "Synthetic bound and variance checks");
  sp_theory->add_option("--clusters", spec.k_clusters);
  sp_theory->add_option("--std", spec.cluster_std);
  sp_theory->add_option("--offset", spec.anomaly_offset);
  sp_theory->add_option("--n-train", spec.n_train);
  sp_theory->add_option("--n-test-normal", spec.n_test_normal);
  sp_theory->add_option("--n-test-anomaly", spec.n_test_anomaly);
  sp_theory->add_option("--dim", spec.dim);
  sp_theory->add_option("--seed", spec.seed);
  sp_theory->add_option("--m", m);
  sp_theory->add_option("--k", k);
  sp_theory->add_option("--runs", runs, "seeds to aggregate over");
  sp_theory->add_option("--variance-m", variance_m, "M values for the variance table")
      ->delimiter(',');
  sp_theory->add_option("--trials", trials, "resampling trials per M");
  sp_theory->add_option("--out", out, "JSON report path");

  auto* sp_profile = app.add_subcommand("profile", "Per-sample transport timing");
  sp_profile->add_option("--m", m);
  sp_profile->add_option("--k", k);
  sp_profile->add_option("--dim", dim);
  sp_profile->add_option("--samples", samples);
  sp_profile->add_option("--seed", seed);

  auto* sp_ot = app.add_subcommand("ot", "Solve a hand-supplied cost matrix");
  sp_ot->add_option("--cost", cost_path, "cost matrix CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sp_split->parsed()) return cmd_split(data, label_col, seed, out, emit_order);
    if (sp_kmeans->parsed()) return cmd_fit_kmeans(data, label_col, k, seed, out);
    if (sp_score->parsed()) return cmd_score(data, label_col, detector, seed, out);
    if (sp_cal->parsed())
      return cmd_calibrate(data, label_col, detector, calibrator, m, k, lambda, seed, normalize,
                           centroids_path, out);
    if (sp_bench->parsed() || sp_sweep->parsed()) {
      BenchConfig cfg;
      cfg.data_paths = data_paths;
      cfg.label_col = label_col;
      cfg.detectors = detectors;
      cfg.calibrator.kind = parse_calibrator(calibrator);
      cfg.calibrator.m = m;
      cfg.calibrator.k = k;
      cfg.calibrator.lambda = lambda;
      cfg.seeds = seeds;
      cfg.normalize = parse_normalize(normalize);
      cfg.out_dir = out;
      cfg.jobs = jobs;
      if (sp_bench->parsed()) return cmd_bench(cfg);
      return cmd_sweep(cfg, sweep_param, sweep_values);
    }
    if (sp_theory->parsed()) return cmd_theory(spec, m, k, runs, variance_m, trials, out);
    if (sp_profile->parsed()) return cmd_profile(m, k, dim, samples, seed);
    if (sp_ot->parsed()) return cmd_ot(cost_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
