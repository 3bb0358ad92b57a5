#include "ctad/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "ctad/detectors.hpp"
#include "ctad/kmeans.hpp"
#include "ctad/ot.hpp"
#include "ctad/rng.hpp"
#include "json.hpp"

namespace ctad {
namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string path_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

BenchCell run_cell(const BenchConfig& cfg, const std::string& path, const std::string& detector,
                   std::uint64_t seed) {
  BenchCell cell;
  cell.dataset = path_stem(path);
  cell.detector = detector;
  cell.seed = seed;
  try {
    const Dataset ds = load_csv(path, cfg.label_col);
    cell.dataset = ds.name;
    const TrainTestSplit sp = split(ds, seed);
    const Standardizer st = fit_standardizer(sp.train);
    const Matrix train = st.transform(sp.train);
    const Matrix test = st.transform(sp.test_features);
    cell.train_rows = static_cast<int>(train.rows());
    cell.test_rows = static_cast<int>(test.rows());
    cell.dims = static_cast<int>(train.cols());

    const auto t0 = Clock::now();
    const DetectorModel det = fit_from_spec(train, detector, derive_seed(seed, "detector"));
    const auto t1 = Clock::now();
    const Vector base = det.score_all(test);
    const auto t2 = Clock::now();

    CalibratorConfig cal_cfg = cfg.calibrator;
    cal_cfg.seed = seed;
    const CalibratorState cal = fit_calibrator(train, cal_cfg);
    const auto t3 = Clock::now();
    const Vector deltas = delta_all(cal, test);
    const auto t4 = Clock::now();

    const auto records = fuse_scores(cal_cfg.kind, base, deltas, cal_cfg.lambda, cfg.normalize);
    Vector calibrated(test.rows());
    for (Eigen::Index i = 0; i < test.rows(); ++i)
      calibrated[i] = records[static_cast<std::size_t>(i)].calibrated;

    cell.baseline = evaluate(base, sp.test_labels);
    cell.calibrated = evaluate(calibrated, sp.test_labels);
    cell.gap = gap_report(deltas, sp.test_labels);
    cell.fit_detector_ms = ms_between(t0, t1);
    cell.fit_calibrator_ms = ms_between(t2, t3);
    const double n = static_cast<double>(test.rows());
    cell.base_ms_per_sample = ms_between(t1, t2) / n;
    cell.ot_ms_per_sample = ms_between(t3, t4) / n;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

void run_grid(const BenchConfig& cfg, std::vector<BenchCell>& cells) {
  struct Job {
    const std::string* path;
    const std::string* detector;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& path : cfg.data_paths)
    for (const auto& det : cfg.detectors)
      for (const auto seed : cfg.seeds) jobs.push_back({&path, &det, seed});
  cells.resize(jobs.size());

  const int workers =
      std::max(1, std::min<int>(cfg.jobs, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i)
      cells[i] = run_cell(cfg, *jobs[i].path, *jobs[i].detector, jobs[i].seed);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        cells[i] = run_cell(cfg, *jobs[i].path, *jobs[i].detector, jobs[i].seed);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void write_results_csv(const std::string& path, const std::vector<BenchCell>& cells,
                       const std::string& calibrator) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "dataset,detector,calibrator,seed,status,error,train_rows,test_rows,dims,n_pos,n_neg,"
       "base_auc_roc,base_auc_pr,cal_auc_roc,cal_auc_pr,improv_auc_roc,improv_auc_pr,"
       "mean_ot_normal,mean_ot_anomaly,increase_pct\n";
  for (const auto& c : cells) {
    f << csv_escape(c.dataset) << ',' << csv_escape(c.detector) << ',' << calibrator << ','
      << c.seed << ',' << (c.ok ? "ok" : "error") << ',' << csv_escape(c.error) << ','
      << c.train_rows << ',' << c.test_rows << ',' << c.dims << ',' << c.baseline.n_pos << ','
      << c.baseline.n_neg << ',' << format_double(c.baseline.auc_roc) << ','
      << format_double(c.baseline.auc_pr) << ',' << format_double(c.calibrated.auc_roc) << ','
      << format_double(c.calibrated.auc_pr) << ','
      << format_double(c.calibrated.auc_roc - c.baseline.auc_roc) << ','
      << format_double(c.calibrated.auc_pr - c.baseline.auc_pr) << ','
      << format_double(c.gap.mean_ot_normal) << ',' << format_double(c.gap.mean_ot_anomaly) << ','
      << format_double(c.gap.increase_pct) << '\n';
  }
}

void write_timings_csv(const std::string& path, const std::vector<BenchCell>& cells,
                       const std::string& calibrator) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "dataset,detector,calibrator,seed,fit_detector_ms,fit_calibrator_ms,"
       "base_ms_per_sample,ot_ms_per_sample\n";
  for (const auto& c : cells) {
    if (!c.ok) continue;
    f << csv_escape(c.dataset) << ',' << csv_escape(c.detector) << ',' << calibrator << ','
      << c.seed << ',' << format_double(c.fit_detector_ms) << ','
      << format_double(c.fit_calibrator_ms) << ',' << format_double(c.base_ms_per_sample) << ','
      << format_double(c.ot_ms_per_sample) << '\n';
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "detector,metric,n_datasets,baseline_mean,improvement_mean,improvement_pct_mean,"
       "win_count,p_value\n";
  for (const auto& r : rows) {
    f << csv_escape(r.detector) << ',' << r.metric << ',' << r.n_datasets << ','
      << format_double(r.baseline_mean) << ',' << format_double(r.improvement_mean) << ','
      << format_double(r.improvement_pct_mean) << ',' << r.win_count << ','
      << format_double(r.p_value) << '\n';
  }
}

void write_config_json(const std::string& path, const BenchConfig& cfg) {
  nlohmann::json j;
  j["data"] = cfg.data_paths;
  j["label_col"] = cfg.label_col;
  j["detectors"] = cfg.detectors;
  j["calibrator"] = {{"kind", calibrator_name(cfg.calibrator.kind)},
                     {"m", cfg.calibrator.m},
                     {"k", cfg.calibrator.k},
                     {"lambda", cfg.calibrator.lambda}};
  j["seeds"] = cfg.seeds;
  j["normalize"] = cfg.normalize == Normalize::MINMAX ? "minmax" : "none";
  j["jobs"] = cfg.jobs;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool BenchReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.ok; });
}

bool BenchReport::any_ok() const {
  return std::any_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.ok; });
}

BenchReport run_bench(const BenchConfig& cfg) {
  if (cfg.data_paths.empty()) throw std::invalid_argument("bench: need at least one dataset");
  if (cfg.detectors.empty()) throw std::invalid_argument("bench: need at least one detector");
  if (cfg.seeds.empty()) throw std::invalid_argument("bench: need at least one seed");

  BenchReport report;
  run_grid(cfg, report.cells);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto dir = std::filesystem::path(cfg.out_dir);
    const std::string calibrator = calibrator_name(cfg.calibrator.kind);
    write_results_csv((dir / "results.csv").string(), report.cells, calibrator);
    write_timings_csv((dir / "timings.csv").string(), report.cells, calibrator);
    write_summary_csv((dir / "summary.csv").string(), summarize(report));
    write_config_json((dir / "config.json").string(), cfg);
  }
  return report;
}

std::vector<SummaryRow> summarize(const BenchReport& report) {
  // Preserve first-appearance order of detectors and datasets.
  std::vector<std::string> detectors;
  for (const auto& c : report.cells)
    if (std::find(detectors.begin(), detectors.end(), c.detector) == detectors.end())
      detectors.push_back(c.detector);

  std::vector<SummaryRow> rows;
  for (const auto& det : detectors) {
    std::vector<std::string> datasets;
    for (const auto& c : report.cells)
      if (c.detector == det && c.ok &&
          std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end())
        datasets.push_back(c.dataset);

    // Seed-averaged metrics per dataset: [base_roc, cal_roc, base_pr, cal_pr].
    std::vector<std::array<double, 4>> per_dataset;
    for (const auto& name : datasets) {
      std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
      int count = 0;
      for (const auto& c : report.cells) {
        if (c.detector != det || c.dataset != name || !c.ok) continue;
        acc[0] += c.baseline.auc_roc;
        acc[1] += c.calibrated.auc_roc;
        acc[2] += c.baseline.auc_pr;
        acc[3] += c.calibrated.auc_pr;
        ++count;
      }
      for (auto& v : acc) v /= static_cast<double>(count);
      per_dataset.push_back(acc);
    }

    for (const int metric : {0, 1}) {
      const std::size_t b = metric == 0 ? 0 : 2;
      SummaryRow row;
      row.detector = det;
      row.metric = metric == 0 ? "auc_roc" : "auc_pr";
      row.n_datasets = static_cast<int>(per_dataset.size());
      std::vector<double> base_list, cal_list;
      double pct_sum = 0.0;
      int pct_count = 0;
      for (const auto& d : per_dataset) {
        base_list.push_back(d[b]);
        cal_list.push_back(d[b + 1]);
        row.baseline_mean += d[b];
        row.improvement_mean += d[b + 1] - d[b];
        if (d[b] > 0.0) {
          pct_sum += 100.0 * (d[b + 1] - d[b]) / d[b];
          ++pct_count;
        }
        if (d[b + 1] > d[b]) ++row.win_count;
      }
      if (!per_dataset.empty()) {
        row.baseline_mean /= static_cast<double>(per_dataset.size());
        row.improvement_mean /= static_cast<double>(per_dataset.size());
      }
      row.improvement_pct_mean = pct_count > 0 ? pct_sum / pct_count : 0.0;
      row.p_value = per_dataset.size() >= 2
                        ? paired_t_test_one_tailed(cal_list, base_list).p_value
                        : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

SweepParam parse_sweep_param(const std::string& token) {
  if (token == "k") return SweepParam::K;
  if (token == "m") return SweepParam::M;
  if (token == "lambda") return SweepParam::LAMBDA;
  throw std::invalid_argument("unknown sweep parameter '" + token + "' (expected k|m|lambda)");
}

std::vector<SweepRow> sweep(const BenchConfig& cfg, SweepParam param,
                            const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: need at least one value");

  std::vector<SweepRow> rows;
  for (const double value : values) {
    BenchConfig step = cfg;
    step.out_dir.clear();
    switch (param) {
      case SweepParam::K:
        step.calibrator.k = static_cast<int>(value);
        break;
      case SweepParam::M:
        step.calibrator.m = static_cast<int>(value);
        break;
      case SweepParam::LAMBDA:
        step.calibrator.lambda = value;
        break;
    }
    const BenchReport report = run_bench(step);
    for (const auto& cell : report.cells) rows.push_back({value, cell});
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "sweep.csv";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    const std::string name = param == SweepParam::K ? "k" : param == SweepParam::M ? "m" : "lambda";
    f << "param,value,dataset,detector,seed,status,error,base_auc_roc,base_auc_pr,"
         "cal_auc_roc,cal_auc_pr\n";
    for (const auto& r : rows) {
      const auto& c = r.cell;
      f << name << ',' << format_double(r.value) << ',' << csv_escape(c.dataset) << ','
        << csv_escape(c.detector) << ',' << c.seed << ',' << (c.ok ? "ok" : "error") << ','
        << csv_escape(c.error) << ',' << format_double(c.baseline.auc_roc) << ','
        << format_double(c.baseline.auc_pr) << ',' << format_double(c.calibrated.auc_roc) << ','
        << format_double(c.calibrated.auc_pr) << '\n';
    }
  }
  return rows;
}

ProfileResult profile_ot(int m, int k, int dim, int n_samples, std::uint64_t seed) {
  if (m < 0 || k < 1 || dim < 1 || n_samples < 1)
    throw std::invalid_argument("profile_ot: invalid parameters");

  Rng rng(derive_seed(seed, "profile"));
  const int n_train = std::max({256, m, k});
  Matrix train(n_train, dim);
  for (Eigen::Index i = 0; i < train.rows(); ++i)
    for (Eigen::Index j = 0; j < train.cols(); ++j) train(i, j) = rng.normal();

  const CentroidSet q = fit_kmeans(train, k, seed);
  Rng ref_rng(derive_seed(seed, "refs"));
  const auto idx = ref_rng.sample_without_replacement(static_cast<std::size_t>(n_train),
                                                      static_cast<std::size_t>(m));
  Matrix refs(m, dim);
  for (int i = 0; i < m; ++i)
    refs.row(i) = train.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(n_samples));
  Vector x(dim);
  for (int s = 0; s < n_samples; ++s) {
    for (int j = 0; j < dim; ++j) x[j] = rng.normal();
    const auto t0 = Clock::now();
    ot_distance(refs, x, q.centroids);
    const auto t1 = Clock::now();
    times.push_back(ms_between(t0, t1));
  }
  std::sort(times.begin(), times.end());

  ProfileResult r;
  r.m = m;
  r.k = k;
  r.dim = dim;
  r.n_samples = n_samples;
  r.median_ms = times[times.size() / 2];
  r.p95_ms = times[std::min(times.size() - 1,
                            static_cast<std::size_t>(0.95 * static_cast<double>(times.size())))];
  return r;
}

}  // namespace ctad
