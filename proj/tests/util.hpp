// Shared test helpers: temp-dir management and synthetic CSV emission.
#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "ctad/bench.hpp"
#include "ctad/theory.hpp"

namespace testutil {

// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           (tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Dump a generated dataset as x0..x{D-1},label rows.
inline void write_synthetic_csv(const std::string& path, const ctad::SyntheticSpec& spec) {
  const ctad::Dataset ds = ctad::generate(spec);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index j = 0; j < ds.n_dims(); ++j) f << 'x' << j << ',';
  f << "label\n";
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.n_dims(); ++j)
      f << ctad::format_double(ds.features(i, j)) << ',';
    f << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

}  // namespace testutil
