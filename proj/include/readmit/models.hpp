#pragma once

// Binary classifiers: ridge-penalised logistic regression fit by IRLS, and
// gradient-boosted regression trees on the binary log-loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "readmit/error.hpp"
#include "readmit/features.hpp"

namespace readmit::models {

struct LogisticParams {
  double ridge = 1e-6;  // L2 penalty on the weights, not the intercept
  double tol = 1e-8;    // stop when every coefficient moves less than this
  int max_iter = 100;
};

struct GbmParams {
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;
};

struct TrainConfig {
  GbmParams gbm;
  LogisticParams logistic;
  std::uint64_t seed = 0;

  void validate() const {
    if (gbm.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1");
    if (!(gbm.learning_rate > 0 && gbm.learning_rate <= 1))
      throw Error(ErrorCode::InvalidArgument, "learning_rate must be in (0, 1]");
    if (gbm.max_depth < 1) throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 1");
    if (gbm.min_samples_leaf < 1) throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
    if (!(logistic.ridge >= 0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
    if (!(logistic.tol > 0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
    if (logistic.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline void require_both_classes(const features::EncodedDataset& d) {
  if (d.rows() == 0) throw Error(ErrorCode::SingleClass, "empty training set");
  const std::size_t ones = d.count_label(1);
  if (ones == 0 || ones == d.rows()) throw Error(ErrorCode::SingleClass, "training labels contain a single class");
}

inline void require_width(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw Error(ErrorCode::WidthMismatch,
                "model expects " + std::to_string(expected) + " columns, got " + std::to_string(got));
}

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0;
  bool converged = false;
  int n_iter = 0;

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

/// Negative penalised log-likelihood: sum_i [log(1+e^eta_i) - y_i eta_i] + ridge/2 |w|^2.
inline double logistic_loss(const features::EncodedDataset& d, double intercept, std::span<const double> w,
                            double ridge) {
  double loss = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto x = d.row(i);
    double eta = intercept;
    for (std::size_t j = 0; j < w.size(); ++j) eta += w[j] * x[j];
    loss += softplus(eta) - d.labels[i] * eta;
  }
  for (double wj : w) loss += 0.5 * ridge * wj * wj;
  return loss;
}

/// Gradient of `logistic_loss`; element 0 is the intercept.
inline std::vector<double> logistic_gradient(const features::EncodedDataset& d, double intercept,
                                             std::span<const double> w, double ridge) {
  std::vector<double> g(w.size() + 1, 0.0);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto x = d.row(i);
    double eta = intercept;
    for (std::size_t j = 0; j < w.size(); ++j) eta += w[j] * x[j];
    const double r = sigmoid(eta) - d.labels[i];
    g[0] += r;
    for (std::size_t j = 0; j < w.size(); ++j) g[j + 1] += r * x[j];
  }
  for (std::size_t j = 0; j < w.size(); ++j) g[j + 1] += ridge * w[j];
  return g;
}

/// Newton-Raphson / IRLS with step halving on the penalised likelihood.
inline LogisticModel fit_logistic(const features::EncodedDataset& data, const LogisticParams& params = {}) {
  require_both_classes(data);
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto p = static_cast<Eigen::Index>(data.cols()) + 1;

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    auto row = data.row(static_cast<std::size_t>(i));
    for (Eigen::Index j = 1; j < p; ++j) X(i, j) = row[static_cast<std::size_t>(j - 1)];
    y(i) = data.labels[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, params.ridge);
  penalty(0) = 0.0;

  auto objective = [&](const Eigen::VectorXd& beta) {
    Eigen::VectorXd eta = X * beta;
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) loss += softplus(eta(i)) - y(i) * eta(i);
    return loss + 0.5 * beta.cwiseProduct(penalty).dot(beta);
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double prevalence = y.mean();
  beta(0) = std::log(prevalence / (1.0 - prevalence));

  LogisticModel model;
  double current = objective(beta);
  for (int iter = 1; iter <= params.max_iter; ++iter) {
    model.n_iter = iter;
    Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu = eta.unaryExpr([](double z) { return sigmoid(z); });
    Eigen::VectorXd weight = mu.cwiseProduct((1.0 - mu.array()).matrix());
    Eigen::VectorXd grad = X.transpose() * (y - mu) - penalty.cwiseProduct(beta);
    Eigen::MatrixXd hessian = X.transpose() * weight.asDiagonal() * X;
    hessian.diagonal() += penalty;
    Eigen::VectorXd step = hessian.ldlt().solve(grad);
    if (!step.allFinite()) throw Error(ErrorCode::Diverged, "IRLS produced a non-finite step");

    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double next = objective(candidate);
    while (!(next <= current) && t > 1e-10) {
      t *= 0.5;
      candidate = beta + t * step;
      next = objective(candidate);
    }
    const double moved = (t * step).cwiseAbs().maxCoeff();
    if (next <= current) {
      beta = candidate;
      current = next;
    }
    if (!beta.allFinite()) throw Error(ErrorCode::Diverged, "IRLS weights are non-finite");
    if (moved < params.tol) {
      model.converged = true;
      break;
    }
  }
  model.intercept = beta(0);
  model.weights.assign(beta.data() + 1, beta.data() + p);
  return model;
}

inline double predict_row(const LogisticModel& m, std::span<const double> x) {
  require_width(m.weights.size(), x.size());
  double eta = m.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) eta += m.weights[j] * x[j];
  return sigmoid(eta);
}

inline std::vector<double> predict_proba(const LogisticModel& m, const features::EncodedDataset& d) {
  require_width(m.weights.size(), d.cols());
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = predict_row(m, d.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Gradient boosting

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;  // leaf output before the learning-rate factor

  bool leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Axis-aligned regression tree; rows with x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].leaf())
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                      : nodes[i].right);
    return nodes[i].value;
  }

  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbmModel {
  std::vector<RegressionTree> trees;
  double base_score = 0;  // log-odds of the training prevalence
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t n_features = 0;
  std::vector<double> train_loss;  // mean log-loss before round 1 and after every round; not persisted

  friend bool operator==(const GbmModel& a, const GbmModel& b) {
    return a.trees == b.trees && a.base_score == b.base_score && a.learning_rate == b.learning_rate &&
           a.max_depth == b.max_depth && a.n_features == b.n_features;
  }
};

inline constexpr double kMinHessian = 1e-12;
inline constexpr double kMaxLeaf = 10.0;

inline double newton_leaf(double sum_residual, double sum_hessian) {
  return std::clamp(sum_residual / std::max(sum_hessian, kMinHessian), -kMaxLeaf, kMaxLeaf);
}

namespace detail {

struct NodeStats {
  double sum_r = 0, sum_h = 0, sum_r2 = 0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0;
  int feature = -1;
  double threshold = 0;
};

/// Grows one tree level by level. For every node at the current depth, each
/// column is scanned in presorted order and the split with the largest
/// squared-error reduction is kept; the scan order (column, then threshold
/// ascending) with a strict comparison settles ties. `leaf_of` receives the
/// leaf index of every row.
inline RegressionTree grow_tree(const features::EncodedDataset& d,
                                const std::vector<std::vector<std::uint32_t>>& sorted,
                                std::span<const double> residual, std::span<const double> hessian,
                                const GbmParams& params, std::vector<int>& leaf_of) {
  const std::size_t n = d.rows(), m = d.cols();
  const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);
  std::vector<int> active{0};

  for (int depth = 0; !active.empty(); ++depth) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) slot_of[static_cast<std::size_t>(active[s])] = static_cast<int>(s);
    std::vector<NodeStats> stats(active.size());
    for (std::size_t i = 0; i < n; ++i) {
      const int s = node_of[i] >= 0 ? slot_of[static_cast<std::size_t>(node_of[i])] : -1;
      if (s < 0) continue;
      auto& st = stats[static_cast<std::size_t>(s)];
      st.sum_r += residual[i];
      st.sum_h += hessian[i];
      st.sum_r2 += residual[i] * residual[i];
      ++st.count;
    }

    std::vector<SplitCandidate> best(active.size());
    if (depth < params.max_depth) {
      std::vector<double> min_gain(active.size());
      for (std::size_t s = 0; s < active.size(); ++s) min_gain[s] = 1e-12 * stats[s].sum_r2;
      std::vector<double> left_sum(active.size());
      std::vector<std::size_t> left_count(active.size());
      std::vector<double> last(active.size());
      for (std::size_t c = 0; c < m; ++c) {
        std::fill(left_sum.begin(), left_sum.end(), 0.0);
        std::fill(left_count.begin(), left_count.end(), 0);
        for (std::uint32_t i : sorted[c]) {
          const int node = node_of[i];
          const int s = node >= 0 ? slot_of[static_cast<std::size_t>(node)] : -1;
          if (s < 0) continue;
          const auto su = static_cast<std::size_t>(s);
          const double x = d.at(i, c);
          if (left_count[su] > 0 && x > last[su]) {
            const auto& st = stats[su];
            const std::size_t nl = left_count[su], nr = st.count - nl;
            if (nl >= min_leaf && nr >= min_leaf) {
              const double sl = left_sum[su], sr = st.sum_r - sl;
              const double gain = sl * sl / static_cast<double>(nl) + sr * sr / static_cast<double>(nr) -
                                  st.sum_r * st.sum_r / static_cast<double>(st.count);
              if (gain > best[su].gain && gain > min_gain[su]) {
                double mid = 0.5 * (last[su] + x);
                if (!(mid < x)) mid = last[su];
                best[su] = {gain, static_cast<int>(c), mid};
              }
            }
          }
          left_sum[su] += residual[i];
          ++left_count[su];
          last[su] = x;
        }
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < active.size(); ++s) {
      const auto id = static_cast<std::size_t>(active[s]);
      if (best[s].feature >= 0) {
        tree.nodes[id].feature = best[s].feature;
        tree.nodes[id].threshold = best[s].threshold;
        tree.nodes[id].left = static_cast<int>(tree.nodes.size());
        tree.nodes[id].right = static_cast<int>(tree.nodes.size() + 1);
        next.push_back(tree.nodes[id].left);
        next.push_back(tree.nodes[id].right);
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
      } else {
        tree.nodes[id].value = newton_leaf(stats[s].sum_r, stats[s].sum_h);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (node.leaf()) {
        leaf_of[i] = node_of[i];
        node_of[i] = -1;
      } else {
        node_of[i] = d.at(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
      }
    }
    active = std::move(next);
  }
  return tree;
}

inline double mean_log_loss(std::span<const double> margin, std::span<const int> labels) {
  double total = 0;
  for (std::size_t i = 0; i < margin.size(); ++i) total += softplus(margin[i]) - labels[i] * margin[i];
  return total / static_cast<double>(margin.size());
}

}  // namespace detail

/// Gradient boosting on the binary log-loss with Newton leaf values.
inline GbmModel fit_gbm(const features::EncodedDataset& data, const GbmParams& params = {}) {
  require_both_classes(data);
  const std::size_t n = data.rows(), m = data.cols();

  std::vector<std::vector<std::uint32_t>> sorted(m, std::vector<std::uint32_t>(n));
  for (std::size_t c = 0; c < m; ++c) {
    auto& idx = sorted[c];
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return data.at(a, c) < data.at(b, c); });
  }

  GbmModel model;
  model.learning_rate = params.learning_rate;
  model.max_depth = params.max_depth;
  model.n_features = m;
  const double prevalence = static_cast<double>(data.count_label(1)) / static_cast<double>(n);
  model.base_score = std::log(prevalence / (1.0 - prevalence));

  std::vector<double> margin(n, model.base_score), residual(n), hessian(n);
  std::vector<int> leaf_of(n);
  model.train_loss.push_back(detail::mean_log_loss(margin, data.labels));
  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      residual[i] = data.labels[i] - p;
      hessian[i] = p * (1.0 - p);
    }
    RegressionTree tree = detail::grow_tree(data, sorted, residual, hessian, params, leaf_of);
    for (std::size_t i = 0; i < n; ++i)
      margin[i] += params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(detail::mean_log_loss(margin, data.labels));
  }
  return model;
}

inline double predict_row(const GbmModel& m, std::span<const double> x) {
  require_width(m.n_features, x.size());
  double margin = 0;
  for (const auto& t : m.trees) margin += t.predict(x);
  return sigmoid(m.base_score + m.learning_rate * margin);
}

inline std::vector<double> predict_proba(const GbmModel& m, const features::EncodedDataset& d) {
  require_width(m.n_features, d.cols());
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = predict_row(m, d.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch and persistence

enum class ModelKind { Logistic, Gbm };

inline std::string_view to_string(ModelKind kind) { return kind == ModelKind::Logistic ? "logistic" : "gbm"; }

inline ModelKind parse_model_kind(std::string_view text) {
  if (text == "logistic") return ModelKind::Logistic;
  if (text == "gbm") return ModelKind::Gbm;
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + std::string(text) + "' (expected logistic or gbm)");
}

using Model = std::variant<LogisticModel, GbmModel>;

inline Model fit(ModelKind kind, const features::EncodedDataset& data, const TrainConfig& config) {
  config.validate();
  if (kind == ModelKind::Logistic) return fit_logistic(data, config.logistic);
  return fit_gbm(data, config.gbm);
}

inline std::vector<double> predict_proba(const Model& model, const features::EncodedDataset& d) {
  return std::visit([&](const auto& m) { return predict_proba(m, d); }, model);
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json config_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["gbm"] = {{"n_trees", c.gbm.n_trees},
              {"learning_rate", c.gbm.learning_rate},
              {"max_depth", c.gbm.max_depth},
              {"min_samples_leaf", c.gbm.min_samples_leaf}};
  j["logistic"] = {{"ridge", c.logistic.ridge}, {"tol", c.logistic.tol}, {"max_iter", c.logistic.max_iter}};
  j["seed"] = c.seed;
  return j;
}

/// Reads a training config; absent keys keep the values already in `base`.
inline TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  if (j.contains("gbm")) {
    const auto& g = j["gbm"];
    base.gbm.n_trees = g.value("n_trees", base.gbm.n_trees);
    base.gbm.learning_rate = g.value("learning_rate", base.gbm.learning_rate);
    base.gbm.max_depth = g.value("max_depth", base.gbm.max_depth);
    base.gbm.min_samples_leaf = g.value("min_samples_leaf", base.gbm.min_samples_leaf);
  }
  if (j.contains("logistic")) {
    const auto& l = j["logistic"];
    base.logistic.ridge = l.value("ridge", base.logistic.ridge);
    base.logistic.tol = l.value("tol", base.logistic.tol);
    base.logistic.max_iter = l.value("max_iter", base.logistic.max_iter);
  }
  base.seed = j.value("seed", base.seed);
  return base;
}

inline nlohmann::ordered_json model_json(const Model& model) {
  nlohmann::ordered_json j;
  j["format"] = "readmit-model";
  j["version"] = kModelFormatVersion;
  if (const auto* lm = std::get_if<LogisticModel>(&model)) {
    j["kind"] = "logistic";
    j["intercept"] = lm->intercept;
    j["weights"] = lm->weights;
    j["converged"] = lm->converged;
    j["n_iter"] = lm->n_iter;
  } else {
    const auto& gm = std::get<GbmModel>(model);
    j["kind"] = "gbm";
    j["n_features"] = gm.n_features;
    j["base_score"] = gm.base_score;
    j["learning_rate"] = gm.learning_rate;
    j["max_depth"] = gm.max_depth;
    auto& trees = j["trees"] = nlohmann::ordered_json::array();
    for (const auto& t : gm.trees) {
      nlohmann::ordered_json tj;
      std::vector<int> feature, left, right;
      std::vector<double> threshold, value;
      for (const auto& node : t.nodes) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.value);
      }
      tj["feature"] = feature;
      tj["threshold"] = threshold;
      tj["left"] = left;
      tj["right"] = right;
      tj["value"] = value;
      trees.push_back(std::move(tj));
    }
  }
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "readmit-model" || j.at("version").get<int>() != kModelFormatVersion)
      throw Error(ErrorCode::InvalidArgument, "unsupported model format");
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (kind == ModelKind::Logistic) {
      LogisticModel m;
      m.intercept = j.at("intercept").get<double>();
      m.weights = j.at("weights").get<std::vector<double>>();
      m.converged = j.at("converged").get<bool>();
      m.n_iter = j.at("n_iter").get<int>();
      return m;
    }
    GbmModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.max_depth = j.at("max_depth").get<int>();
    for (const auto& tj : j.at("trees")) {
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto value = tj.at("value").get<std::vector<double>>();
      const std::size_t size = feature.size();
      if (threshold.size() != size || left.size() != size || right.size() != size || value.size() != size || !size)
        throw Error(ErrorCode::InvalidArgument, "inconsistent tree arrays");
      RegressionTree t;
      for (std::size_t i = 0; i < size; ++i) {
        if (feature[i] >= 0 && (feature[i] >= static_cast<int>(m.n_features) || left[i] <= static_cast<int>(i) ||
                                right[i] <= static_cast<int>(i) || left[i] >= static_cast<int>(size) ||
                                right[i] >= static_cast<int>(size)))
          throw Error(ErrorCode::InvalidArgument, "malformed tree node");
        t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed model json: ") + e.what());
  }
}

}  // namespace readmit::models
