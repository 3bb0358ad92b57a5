#include <cmath>
#include <stdexcept>
#include <string>

#include "ctad/bench.hpp"
#include "ctad/theory.hpp"
#include "doctest.h"
#include "util.hpp"

using namespace ctad;

namespace {

SyntheticSpec csv_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.k_clusters = 2;
  spec.cluster_std = 0.1;
  spec.anomaly_offset = 3.0;
  spec.n_train = 60;
  spec.n_test_normal = 40;
  spec.n_test_anomaly = 12;
  spec.dim = 3;
  spec.seed = seed;
  return spec;
}

BenchConfig base_config(const std::string& data_path) {
  BenchConfig cfg;
  cfg.data_paths = {data_path};
  cfg.detectors = {"knn"};
  cfg.calibrator.kind = CalibratorKind::CTAD;
  cfg.calibrator.m = 8;
  cfg.calibrator.k = 3;
  cfg.seeds = {1, 2};
  return cfg;
}

}  // namespace

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.25) == "-2.25");
  const double v = 1.0 / 3.0;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("a null calibrator reproduces the baseline metrics in every cell") {
  testutil::TempDir tmp("benchnone");
  const std::string data = tmp.file("synth.csv");
  testutil::write_synthetic_csv(data, csv_spec(3));

  BenchConfig cfg = base_config(data);
  cfg.calibrator.kind = CalibratorKind::NONE;
  const BenchReport report = run_bench(cfg);
  REQUIRE(report.cells.size() == 2);
  CHECK(report.all_ok());
  for (const auto& c : report.cells) {
    CHECK(c.dataset == "synth");
    CHECK(c.baseline.auc_roc == c.calibrated.auc_roc);
    CHECK(c.baseline.auc_pr == c.calibrated.auc_pr);
    CHECK(c.train_rows + c.test_rows == 112);
  }
}

TEST_CASE("metric tables are byte-identical across reruns") {
  testutil::TempDir tmp("benchrepeat");
  const std::string data = tmp.file("synth.csv");
  testutil::write_synthetic_csv(data, csv_spec(4));

  BenchConfig cfg = base_config(data);
  cfg.out_dir = tmp.file("run_a");
  run_bench(cfg);
  cfg.out_dir = tmp.file("run_b");
  run_bench(cfg);

  for (const char* name : {"results.csv", "summary.csv", "config.json"}) {
    const std::string a = testutil::read_text(tmp.file("run_a/") + name);
    CHECK(a == testutil::read_text(tmp.file("run_b/") + name));
    CHECK(!a.empty());
  }
  CHECK(!testutil::read_text(tmp.file("run_a/timings.csv")).empty());
}

TEST_CASE("failed cells carry the error and leave the rest standing") {
  testutil::TempDir tmp("benchfail");
  const std::string good = tmp.file("synth.csv");
  testutil::write_synthetic_csv(good, csv_spec(5));

  BenchConfig cfg = base_config(good);
  cfg.data_paths = {good, tmp.file("absent.csv")};
  cfg.seeds = {1};
  const BenchReport report = run_bench(cfg);
  REQUIRE(report.cells.size() == 2);
  CHECK(report.cells[0].ok);
  CHECK(!report.cells[1].ok);
  CHECK(!report.cells[1].error.empty());
  CHECK(!report.all_ok());
  CHECK(report.any_ok());
}

TEST_CASE("summaries pair the datasets across seeds") {
  testutil::TempDir tmp("benchsum");
  const std::string a = tmp.file("alpha.csv");
  const std::string b = tmp.file("beta.csv");
  testutil::write_synthetic_csv(a, csv_spec(6));
  testutil::write_synthetic_csv(b, csv_spec(7));

  BenchConfig cfg = base_config(a);
  cfg.data_paths = {a, b};
  const auto rows = summarize(run_bench(cfg));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].detector == "knn");
  CHECK(rows[0].metric == "auc_roc");
  CHECK(rows[1].metric == "auc_pr");
  for (const auto& r : rows) {
    CHECK(r.n_datasets == 2);
    CHECK(!std::isnan(r.p_value));
    CHECK(r.baseline_mean > 0.5);
    CHECK(r.win_count >= 0);
    CHECK(r.win_count <= 2);
  }

  cfg.data_paths = {a};
  const auto single = summarize(run_bench(cfg));
  CHECK(std::isnan(single[0].p_value));
}

TEST_CASE("a lambda sweep anchors its zero point at the baseline") {
  testutil::TempDir tmp("benchsweep");
  const std::string data = tmp.file("synth.csv");
  testutil::write_synthetic_csv(data, csv_spec(8));

  BenchConfig cfg = base_config(data);
  cfg.seeds = {1};
  cfg.out_dir = tmp.file("out");
  const auto rows = sweep(cfg, SweepParam::LAMBDA, {0.0, 1.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].value == 0.0);
  CHECK(rows[0].cell.baseline.auc_roc == rows[0].cell.calibrated.auc_roc);
  CHECK(rows[1].value == 1.0);
  CHECK(!testutil::read_text(tmp.file("out/sweep.csv")).empty());

  CHECK(parse_sweep_param("m") == SweepParam::M);
  CHECK_THROWS_AS(parse_sweep_param("q"), std::invalid_argument);
  CHECK_THROWS_AS(sweep(cfg, SweepParam::K, {}), std::invalid_argument);
}

TEST_CASE("profiling scales with the reference count") {
  const ProfileResult small = profile_ot(0, 2, 4, 60, 1);
  const ProfileResult large = profile_ot(20, 2, 4, 60, 1);
  CHECK(small.median_ms >= 0.0);
  CHECK(large.median_ms > small.median_ms);
  CHECK(large.p95_ms >= large.median_ms);
  CHECK(large.n_samples == 60);
  CHECK_THROWS_AS(profile_ot(-1, 2, 4, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(profile_ot(5, 0, 4, 10, 0), std::invalid_argument);
}

TEST_CASE("grid configs must name data, detectors, and seeds") {
  BenchConfig cfg;
  CHECK_THROWS_AS(run_bench(cfg), std::invalid_argument);
  cfg.data_paths = {"x.csv"};
  CHECK_THROWS_AS(run_bench(cfg), std::invalid_argument);
  cfg.detectors = {"knn"};
  CHECK_THROWS_AS(run_bench(cfg), std::invalid_argument);
}
