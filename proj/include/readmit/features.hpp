#pragma once

// Design-matrix encoding of client profiles: age as one continuous column,
// each categorical predictor one-hot expanded, income optionally appended.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "readmit/categories.hpp"
#include "readmit/cohort.hpp"
#include "readmit/error.hpp"

namespace readmit::features {

struct CategoricalGroup {
  CategoricalField field;
  std::size_t first_column;
  std::size_t width;
};

struct FeatureSchema {
  std::vector<std::string> columns;
  std::vector<bool> continuous;  // per column
  std::vector<CategoricalGroup> groups;
  bool include_income = false;

  std::size_t width() const { return columns.size(); }
  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

/// Column order: age, race=*, family_type=*, reason_homeless=*, employment=*,
/// citizenship=*, then income when enabled.
inline FeatureSchema make_schema(bool include_income = false) {
  FeatureSchema s;
  s.include_income = include_income;
  s.columns.push_back("age");
  s.continuous.push_back(true);
  for (auto field : kCategoricalFields) {
    s.groups.push_back({field, s.columns.size(), static_cast<std::size_t>(category_count(field))});
    for (auto label : category_labels(field)) {
      s.columns.push_back(std::string(field_name(field)) + "=" + std::string(label));
      s.continuous.push_back(false);
    }
  }
  if (include_income) {
    s.columns.push_back("income");
    s.continuous.push_back(true);
  }
  return s;
}

inline nlohmann::ordered_json schema_json(const FeatureSchema& s) {
  nlohmann::ordered_json j;
  j["include_income"] = s.include_income;
  j["columns"] = s.columns;
  auto& cats = j["categories"] = nlohmann::ordered_json::object();
  for (const auto& g : s.groups) {
    auto& m = cats[std::string(field_name(g.field))] = nlohmann::ordered_json::object();
    auto labels = category_labels(g.field);
    for (std::size_t i = 0; i < labels.size(); ++i) m[std::to_string(i)] = std::string(labels[i]);
  }
  j["continuous"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < s.width(); ++c)
    if (s.continuous[c]) j["continuous"].push_back(s.columns[c]);
  return j;
}

/// Row-major numeric matrix with binary labels.
struct EncodedDataset {
  FeatureSchema schema;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> row_ids;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return schema.width(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

  std::size_t count_label(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }

  void push_row(std::span<const double> x, int label, std::string id) {
    if (x.size() != cols()) throw Error(ErrorCode::WidthMismatch, "row width " + std::to_string(x.size()));
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(label);
    row_ids.push_back(std::move(id));
  }
};

/// Subset of rows, in the given order.
inline EncodedDataset select_rows(const EncodedDataset& d, std::span<const std::size_t> rows) {
  EncodedDataset out;
  out.schema = d.schema;
  out.values.reserve(rows.size() * d.cols());
  for (auto i : rows) out.push_row(d.row(i), d.labels[i], d.row_ids[i]);
  return out;
}

enum class AgePolicy { Strict, ImputeMedian };

struct EncodeOptions {
  AgePolicy age_policy = AgePolicy::ImputeMedian;
  std::optional<double> age_fill;  // when unset, median of the encoded rows
};

struct EncodeResult {
  EncodedDataset data;
  std::size_t dropped_missing_income = 0;
  std::size_t imputed_age = 0;
  std::optional<double> age_fill;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline EncodeResult encode(std::span<const cohort::ClientProfile> profiles, const FeatureSchema& schema,
                           const EncodeOptions& options = {}) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyAfterFiltering, "no profiles to encode");
  EncodeResult result;
  std::vector<const cohort::ClientProfile*> kept;
  for (const auto& p : profiles) {
    if (schema.include_income && !p.income) {
      ++result.dropped_missing_income;
      continue;
    }
    kept.push_back(&p);
  }
  if (kept.empty())
    throw Error(ErrorCode::EmptyAfterFiltering, "every profile lacks income; nothing left to encode");

  std::optional<double> fill = options.age_fill;
  if (!fill) {
    std::vector<double> ages;
    for (auto* p : kept)
      if (p->age) ages.push_back(*p->age);
    if (!ages.empty()) fill = median(std::move(ages));
  }

  auto& d = result.data;
  d.schema = schema;
  d.values.assign(kept.size() * schema.width(), 0.0);
  d.labels.reserve(kept.size());
  d.row_ids.reserve(kept.size());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto& p = *kept[r];
    auto row = d.row(r);
    if (p.age) {
      row[0] = *p.age;
    } else {
      if (options.age_policy == AgePolicy::Strict)
        throw Error(ErrorCode::MissingAge, p.id.str() + " has no age (strict mode)");
      if (!fill) throw Error(ErrorCode::MissingAge, "no ages available to impute from");
      row[0] = *fill;
      ++result.imputed_age;
    }
    for (const auto& g : schema.groups) row[g.first_column + static_cast<std::size_t>(p.code(g.field))] = 1.0;
    if (schema.include_income) row[schema.width() - 1] = *p.income;
    d.labels.push_back(p.readmit);
    d.row_ids.push_back(p.id.str());
  }
  result.age_fill = fill;
  return result;
}

/// Per-column z-score parameters. Only continuous columns with non-zero
/// variance are scaled; every other column has `scaled == false`.
struct FitStats {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<bool> scaled;

  friend bool operator==(const FitStats&, const FitStats&) = default;
};

inline FitStats fit_stats(const EncodedDataset& d) {
  const std::size_t n = d.rows(), m = d.cols();
  FitStats s{std::vector<double>(m, 0.0), std::vector<double>(m, 1.0), std::vector<bool>(m, false)};
  for (std::size_t j = 0; j < m; ++j) {
    if (!d.schema.continuous[j] || n < 2) continue;
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += d.at(i, j);
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += (d.at(i, j) - mean) * (d.at(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd > 0) {
      s.mean[j] = mean;
      s.sd[j] = sd;
      s.scaled[j] = true;
    }
  }
  return s;
}

/// Z-scores continuous columns with `stats`, or with statistics fit on
/// `data` itself when none are supplied. Returns the statistics used.
inline std::pair<EncodedDataset, FitStats> standardize(EncodedDataset data,
                                                       const std::optional<FitStats>& stats = std::nullopt) {
  FitStats s = stats ? *stats : fit_stats(data);
  if (s.mean.size() != data.cols())
    throw Error(ErrorCode::WidthMismatch, "fit statistics cover " + std::to_string(s.mean.size()) +
                                              " columns, dataset has " + std::to_string(data.cols()));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (s.scaled[j]) row[j] = (row[j] - s.mean[j]) / s.sd[j];
  }
  return {std::move(data), std::move(s)};
}

inline EncodedDataset unstandardize(EncodedDataset data, const FitStats& s) {
  if (s.mean.size() != data.cols()) throw Error(ErrorCode::WidthMismatch, "fit statistics width");
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (s.scaled[j]) row[j] = row[j] * s.sd[j] + s.mean[j];
  }
  return data;
}

inline nlohmann::ordered_json stats_json(const FitStats& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["scaled"] = s.scaled;
  return j;
}

inline FitStats stats_from_json(const nlohmann::json& j) {
  FitStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.sd = j.at("sd").get<std::vector<double>>();
  s.scaled = j.at("scaled").get<std::vector<bool>>();
  if (s.sd.size() != s.mean.size() || s.scaled.size() != s.mean.size())
    throw Error(ErrorCode::InvalidArgument, "inconsistent fit statistics");
  return s;
}

}  // namespace readmit::features
