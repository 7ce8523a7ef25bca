#pragma once

// Reference solution for ridge-penalised logistic regression by plain
// full-batch gradient descent with a fixed 1/L step. Shares no code with the
// IRLS implementation it is compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct LogisticSolution {
  double intercept = 0;
  std::vector<double> weights;
  long iterations = 0;
  double grad_norm = 0;
};

/// Minimises sum_i [log(1+exp(b + w.x_i)) - y_i (b + w.x_i)] + ridge/2 |w|^2.
/// `x` is row-major n x d.
inline LogisticSolution logistic_gradient_descent(const std::vector<double>& x, const std::vector<int>& y,
                                                  std::size_t d, double ridge, double grad_tol = 1e-12,
                                                  long max_iter = 5'000'000) {
  const std::size_t n = y.size();
  const std::size_t p = d + 1;
  auto feature = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : x[i * d + j - 1]; };

  // Lipschitz constant of the gradient: 0.25 * lambda_max(Z'Z) + ridge, with
  // lambda_max from power iteration (padded by 5%).
  std::vector<double> v(p, 1.0), zv(n), next(p);
  double lambda = 0;
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      zv[i] = 0;
      for (std::size_t j = 0; j < p; ++j) zv[i] += feature(i, j) * v[j];
    }
    for (std::size_t j = 0; j < p; ++j) {
      next[j] = 0;
      for (std::size_t i = 0; i < n; ++i) next[j] += feature(i, j) * zv[i];
    }
    double norm = 0;
    for (double e : next) norm += e * e;
    norm = std::sqrt(norm);
    lambda = norm;
    for (std::size_t j = 0; j < p; ++j) v[j] = next[j] / norm;
  }
  const double step = 1.0 / (1.05 * (0.25 * lambda + ridge));

  std::vector<double> beta(p, 0.0), grad(p);
  LogisticSolution sol;
  for (long it = 0; it < max_iter; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0;
      for (std::size_t j = 0; j < p; ++j) eta += feature(i, j) * beta[j];
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      for (std::size_t j = 0; j < p; ++j) grad[j] += (prob - y[i]) * feature(i, j);
    }
    for (std::size_t j = 1; j < p; ++j) grad[j] += ridge * beta[j];
    double gmax = 0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    sol.iterations = it;
    sol.grad_norm = gmax;
    if (gmax < grad_tol) break;
    for (std::size_t j = 0; j < p; ++j) beta[j] -= step * grad[j];
  }
  sol.intercept = beta[0];
  sol.weights.assign(beta.begin() + 1, beta.end());
  return sol;
}

inline double logistic_probability(const LogisticSolution& s, const double* row) {
  double eta = s.intercept;
  for (std::size_t j = 0; j < s.weights.size(); ++j) eta += s.weights[j] * row[j];
  return 1.0 / (1.0 + std::exp(-eta));
}

}  // namespace oracle
