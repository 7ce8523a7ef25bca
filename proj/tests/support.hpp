#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "readmit/readmit.hpp"

namespace testing_support {

/// Dataset whose columns are all continuous ("x0", "x1", ...).
inline readmit::features::EncodedDataset blank_dataset(std::size_t cols) {
  readmit::features::EncodedDataset d;
  for (std::size_t j = 0; j < cols; ++j) {
    d.schema.columns.push_back("x" + std::to_string(j));
    d.schema.continuous.push_back(true);
  }
  return d;
}

/// Gaussian features; labels from a noisy logistic model on the first column
/// so both classes appear and the data are not separable.
inline readmit::features::EncodedDataset random_dataset(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                                        double minority_rate = 0.5) {
  readmit::Rng rng(seed);
  auto d = blank_dataset(cols);
  std::vector<double> x(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : x) v = rng.normal();
    const double logit = std::log(minority_rate / (1 - minority_rate)) + 1.2 * x[0] - 0.7 * (cols > 1 ? x[1] : 0.0);
    const int y = rng.uniform() < 1.0 / (1.0 + std::exp(-logit)) ? 1 : 0;
    d.push_row(x, y, "r" + std::to_string(i));
  }
  // guarantee both classes
  if (d.count_label(1) == 0) d.labels[0] = 1;
  if (d.count_label(0) == 0) d.labels[0] = 0;
  return d;
}

inline std::filesystem::path fixture_dir() { return std::filesystem::path(READMIT_SOURCE_DIR) / "tests" / "fixtures"; }
inline std::filesystem::path source_dir() { return READMIT_SOURCE_DIR; }

/// Fresh empty directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(READMIT_BINARY_DIR) / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline readmit::cohort::UnifyResult unify_dir(const std::filesystem::path& dir) {
  using namespace readmit;
  return cohort::unify(cohort::read_demographics(csv::read_table(dir / "demographics.csv")),
                       cohort::read_exits(csv::read_table(dir / "exits.csv")),
                       cohort::read_incidents(csv::read_table(dir / "incidents.csv")));
}

}  // namespace testing_support
