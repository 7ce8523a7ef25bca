#pragma once

// Stratified fold assignment and SMOTE minority oversampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/features.hpp"
#include "readmit/rng.hpp"

namespace readmit::resample {

/// Target minority/majority ratio after oversampling; empty means "original"
/// (no oversampling).
struct SmoteRatio {
  std::optional<double> value;

  static SmoteRatio original() { return {}; }
  static SmoteRatio of(double r) {
    if (!(r > 0.0 && r <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "SMOTE ratio must be in (0, 1], got " + csv::format_number(r));
    return {r};
  }

  bool is_original() const { return !value.has_value(); }
  /// "original", or the ratio with at least one decimal ("0.3", "1.0").
  std::string label() const {
    if (!value) return "original";
    std::string s = csv::format_number(*value);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
  }

  /// Accepts "original" or a number in (0, 1].
  static SmoteRatio parse(std::string_view token) {
    std::string t = csv::lower(csv::trim(token));
    if (t == "original") return original();
    std::optional<double> v;
    try {
      v = csv::parse_number(t);
    } catch (const Error&) {
    }
    if (!v) throw Error(ErrorCode::InvalidArgument, "unknown ratio token '" + std::string(token) + "'");
    return of(*v);
  }

  friend bool operator==(const SmoteRatio&, const SmoteRatio&) = default;
};

struct SmoteConfig {
  SmoteRatio ratio;
  int k = 5;
  std::uint64_t seed = 0;
};

struct FoldPlan {
  std::size_t n_folds = 0;
  std::vector<std::size_t> assignment;  // row -> fold
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != fold) out.push_back(i);
    return out;
  }
};

/// Shuffles each class with the seed, then deals rows round-robin across the
/// folds; the negative class continues where the positive class stopped so
/// fold sizes differ by at most one.
inline FoldPlan stratified_folds(std::span<const int> labels, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.size() < n_folds || neg.size() < n_folds)
    throw Error(ErrorCode::ClassTooSmall, "each class needs at least " + std::to_string(n_folds) +
                                              " rows (positives " + std::to_string(pos.size()) + ", negatives " +
                                              std::to_string(neg.size()) + ")");
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  FoldPlan plan{n_folds, std::vector<std::size_t>(labels.size()), seed};
  for (std::size_t i = 0; i < pos.size(); ++i) plan.assignment[pos[i]] = i % n_folds;
  for (std::size_t j = 0; j < neg.size(); ++j) plan.assignment[neg[j]] = (pos.size() + j) % n_folds;
  return plan;
}

struct SmoteOutput {
  features::EncodedDataset data;                        // originals first, then synthetic rows
  std::vector<std::pair<std::size_t, std::size_t>> parents;  // per synthetic row: (base, neighbour)
  int minority_label = 1;
};

/// Synthetic rows needed so that minority >= ratio * majority.
inline std::size_t smote_synthetic_count(std::size_t minority, std::size_t majority, double ratio) {
  const double target = std::ceil(ratio * static_cast<double>(majority));
  return target > static_cast<double>(minority) ? static_cast<std::size_t>(target) - minority : 0;
}

/// k nearest minority neighbours (Euclidean over all columns) of every
/// minority row, ties broken by lower index.
inline std::vector<std::vector<std::size_t>> minority_neighbours(const features::EncodedDataset& d,
                                                                 std::span<const std::size_t> minority,
                                                                 std::size_t k) {
  const std::size_t m = minority.size();
  std::vector<std::vector<std::size_t>> out(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < m; ++a) {
    dist.clear();
    auto xa = d.row(minority[a]);
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      auto xb = d.row(minority[b]);
      double s = 0;
      for (std::size_t j = 0; j < xa.size(); ++j) s += (xa[j] - xb[j]) * (xa[j] - xb[j]);
      dist.emplace_back(s, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t t = 0; t < k; ++t) out[a].push_back(dist[t].second);
  }
  return out;
}

/// SMOTE. Every minority row is used as a base `n_syn / m` times in turn and
/// the remaining `n_syn % m` bases are a seeded draw without replacement. Each
/// synthetic row is base + u * (neighbour - base), u ~ U[0,1), with the
/// neighbour drawn from the base's k nearest minority rows.
inline SmoteOutput smote_with_parents(const features::EncodedDataset& data, const SmoteConfig& config) {
  SmoteOutput out{data, {}, 1};
  if (config.ratio.is_original()) return out;
  if (config.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");

  const std::size_t ones = data.count_label(1), zeros = data.rows() - ones;
  out.minority_label = ones <= zeros ? 1 : 0;
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < data.rows(); ++i)
    if (data.labels[i] == out.minority_label) minority.push_back(i);
  const std::size_t m = minority.size(), majority = data.rows() - m;
  const auto k = static_cast<std::size_t>(config.k);
  if (m <= k)
    throw Error(ErrorCode::MinorityTooSmall,
                "minority class has " + std::to_string(m) + " rows; SMOTE with k=" + std::to_string(k) + " needs more");

  const std::size_t n_syn = smote_synthetic_count(m, majority, *config.ratio.value);
  if (n_syn == 0) return out;

  const auto neighbours = minority_neighbours(data, minority, k);
  Rng rng(config.seed);

  std::vector<std::size_t> bases;
  bases.reserve(n_syn);
  for (std::size_t round = 0; round < n_syn / m; ++round)
    for (std::size_t a = 0; a < m; ++a) bases.push_back(a);
  std::vector<std::size_t> extra(m);
  for (std::size_t a = 0; a < m; ++a) extra[a] = a;
  rng.shuffle(extra);
  bases.insert(bases.end(), extra.begin(), extra.begin() + static_cast<std::ptrdiff_t>(n_syn % m));

  auto& d = out.data;
  d.values.reserve(d.values.size() + n_syn * d.cols());
  std::vector<double> row(d.cols());
  for (std::size_t s = 0; s < bases.size(); ++s) {
    const std::size_t a = bases[s];
    const std::size_t b = neighbours[a][rng.below(k)];
    const double u = rng.uniform();
    auto x = data.row(minority[a]);
    auto y = data.row(minority[b]);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = std::clamp(x[j] + u * (y[j] - x[j]), std::min(x[j], y[j]), std::max(x[j], y[j]));
    d.push_row(row, out.minority_label, "synthetic:" + std::to_string(s));
    out.parents.emplace_back(minority[a], minority[b]);
  }
  return out;
}

inline features::EncodedDataset smote(const features::EncodedDataset& data, const SmoteConfig& config) {
  return smote_with_parents(data, config).data;
}

}  // namespace readmit::resample
