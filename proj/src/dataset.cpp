#include "ctad/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ctad/rng.hpp"

namespace ctad {

Eigen::Index Dataset::n_anomalies() const {
  return static_cast<Eigen::Index>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return false;
    ++end;
  }
  return true;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, header expected");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  const std::size_t n_cols = header.size();
  if (n_cols < 2) throw std::runtime_error(path + ": need at least one feature and a label column");

  // Resolve the label column: all-digit specs are 0-based indices.
  std::size_t label_idx = n_cols;
  const std::string spec = trim(label_column);
  if (!spec.empty() && std::all_of(spec.begin(), spec.end(),
                                   [](unsigned char c) { return std::isdigit(c); })) {
    label_idx = static_cast<std::size_t>(std::stoull(spec));
    if (label_idx >= n_cols)
      throw std::runtime_error(path + ": label column index " + spec + " out of range (" +
                               std::to_string(n_cols) + " columns)");
  } else {
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (trim(header[j]) == spec) {
        label_idx = j;
        break;
      }
    }
    if (label_idx == n_cols)
      throw std::runtime_error(path + ": label column '" + spec + "' not found in header");
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != n_cols)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(n_cols) + " columns, got " +
                               std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(n_cols - 1);
    for (std::size_t j = 0; j < n_cols; ++j) {
      double v = 0.0;
      if (!parse_double(cells[j], v))
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": column '" +
                                 trim(header[j]) + "': non-numeric cell '" + trim(cells[j]) + "'");
      if (j == label_idx) {
        if (v != 0.0 && v != 1.0)
          throw std::runtime_error(path + ":" + std::to_string(line_no) + ": column '" +
                                   trim(header[j]) + "': label must be 0 or 1, got '" +
                                   trim(cells[j]) + "'");
        labels.push_back(static_cast<int>(v));
      } else {
        if (!std::isfinite(v))
          throw std::runtime_error(path + ":" + std::to_string(line_no) + ": column '" +
                                   trim(header[j]) + "': non-finite value");
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  Dataset ds;
  ds.name = path;
  const auto slash = ds.name.find_last_of("/\\");
  if (slash != std::string::npos) ds.name = ds.name.substr(slash + 1);
  const auto dot = ds.name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) ds.name = ds.name.substr(0, dot);

  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(n_cols - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j + 1 < n_cols; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  ds.labels = std::move(labels);
  return ds;
}

TrainTestSplit split(const Dataset& ds, std::uint64_t seed) {
  std::vector<Eigen::Index> normal_rows;
  std::vector<Eigen::Index> anomaly_rows;
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    (ds.labels[static_cast<std::size_t>(i)] == 0 ? normal_rows : anomaly_rows).push_back(i);
  }
  if (normal_rows.size() < 2)
    throw std::invalid_argument("split requires at least 2 normal rows, have " +
                                std::to_string(normal_rows.size()));

  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(normal_rows);

  const std::size_t n_train = normal_rows.size() / 2;
  TrainTestSplit out;
  out.seed = seed;
  out.train_rows.assign(normal_rows.begin(), normal_rows.begin() + static_cast<long>(n_train));
  out.test_rows.assign(normal_rows.begin() + static_cast<long>(n_train), normal_rows.end());
  out.test_rows.insert(out.test_rows.end(), anomaly_rows.begin(), anomaly_rows.end());

  out.train.resize(static_cast<Eigen::Index>(n_train), ds.n_dims());
  for (std::size_t i = 0; i < n_train; ++i) out.train.row(static_cast<Eigen::Index>(i)) = ds.features.row(out.train_rows[i]);

  out.test_features.resize(static_cast<Eigen::Index>(out.test_rows.size()), ds.n_dims());
  out.test_labels.resize(out.test_rows.size());
  for (std::size_t i = 0; i < out.test_rows.size(); ++i) {
    out.test_features.row(static_cast<Eigen::Index>(i)) = ds.features.row(out.test_rows[i]);
    out.test_labels[i] = ds.labels[static_cast<std::size_t>(out.test_rows[i])];
  }
  return out;
}

Standardizer fit_standardizer(const Eigen::Ref<const Matrix>& train) {
  if (train.rows() == 0) throw std::invalid_argument("fit_standardizer: empty training matrix");
  Standardizer s;
  s.mean = train.colwise().mean();
  const Matrix centered = train.rowwise() - s.mean.transpose();
  // Population (1/N) variance keeps the statistics deterministic functions
  // of the rows regardless of sample-vs-sample conventions elsewhere.
  s.stddev = (centered.array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < s.stddev.size(); ++j) {
    if (s.stddev(j) < Standardizer::kStdFloor) s.stddev(j) = 1.0;
  }
  return s;
}

Matrix Standardizer::transform(const Eigen::Ref<const Matrix>& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

Matrix Standardizer::inverse_transform(const Eigen::Ref<const Matrix>& x) const {
  return (x.array().rowwise() * stddev.transpose().array()).matrix().rowwise() + mean.transpose();
}

}  // namespace ctad
