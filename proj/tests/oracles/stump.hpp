#pragma once

// Exhaustive depth-1 boosting round: every (column, midpoint) split is scored
// by direct residual sum of squares, and leaves get the Newton value of the
// log-loss at the prevalence base score.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

struct Stump {
  bool split = false;
  std::size_t feature = 0;
  double threshold = 0;
  double left_value = 0;   // also the value of the single leaf when !split
  double right_value = 0;
  double base_score = 0;
};

inline double sse(const std::vector<double>& r) {
  if (r.empty()) return 0;
  double mean = 0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double s = 0;
  for (double v : r) s += (v - mean) * (v - mean);
  return s;
}

inline double newton_value(const std::vector<double>& r, double p) {
  double num = 0;
  for (double v : r) num += v;
  const double den = std::max(static_cast<double>(r.size()) * p * (1 - p), 1e-12);
  return std::clamp(num / den, -10.0, 10.0);
}

/// `x` row-major n x d, labels in {0,1}.
inline Stump best_stump(const std::vector<double>& x, const std::vector<int>& y, std::size_t d,
                        std::size_t min_leaf = 1) {
  const std::size_t n = y.size();
  double p = 0;
  for (int v : y) p += v;
  p /= static_cast<double>(n);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - p;

  Stump best;
  best.base_score = std::log(p / (1 - p));
  const double parent = sse(r);
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) values.push_back(x[i * d + c]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = 0.5 * (values[k] + values[k + 1]);
      std::vector<double> left, right;
      for (std::size_t i = 0; i < n; ++i) (x[i * d + c] <= t ? left : right).push_back(r[i]);
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      const double total = sse(left) + sse(right);
      if (total < best_sse) {
        best_sse = total;
        best.split = true;
        best.feature = c;
        best.threshold = t;
      }
    }
  }
  if (best.split && !(parent - best_sse > 1e-12 * parent)) best.split = false;
  if (!best.split) {
    best.left_value = newton_value(r, p);
    return best;
  }
  std::vector<double> left, right;
  for (std::size_t i = 0; i < n; ++i) (x[i * d + best.feature] <= best.threshold ? left : right).push_back(r[i]);
  best.left_value = newton_value(left, p);
  best.right_value = newton_value(right, p);
  return best;
}

}  // namespace oracle
