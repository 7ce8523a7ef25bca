#pragma once

// Confusion counts, ROC/AUC, pooled cross-validation and the SMOTE-ratio sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "readmit/cohort.hpp"
#include "readmit/error.hpp"
#include "readmit/features.hpp"
#include "readmit/models.hpp"
#include "readmit/resample.hpp"
#include "readmit/rng.hpp"

namespace readmit::eval {

struct ConfusionMatrix {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return fp + tn; }
  std::size_t total() const { return tp + fn + fp + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Predicted positive iff probability >= threshold.
inline ConfusionMatrix confusion(std::span<const int> labels, std::span<const double> probabilities,
                                 double threshold = 0.5) {
  if (labels.size() != probabilities.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(labels.size()) + " labels vs " +
                                               std::to_string(probabilities.size()) + " probabilities");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "probability out of [0,1] at row " + std::to_string(i));
    const bool predicted = p >= threshold;
    if (labels[i]) (predicted ? cm.tp : cm.fn)++;
    else (predicted ? cm.fp : cm.tn)++;
  }
  return cm;
}

/// Recall of the positive class.
inline double sensitivity(const ConfusionMatrix& cm) {
  if (cm.positives() == 0) throw Error(ErrorCode::NoPositives, "sensitivity undefined without positives");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.positives());
}

inline double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

struct RocPoint {
  double fpr = 0, tpr = 0, threshold = 0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

/// One point per distinct score (descending), preceded by (0, 0) at +inf.
inline RocCurve roc_curve(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw Error(ErrorCode::LengthMismatch, "labels and scores differ in length");
  std::size_t pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClass, "ROC needs both classes");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (labels[order[i]] ? tp : fp)++;
    curve.points.push_back(
        {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos), t});
  }
  return curve;
}

/// Trapezoidal area under the curve.
inline double auc(const RocCurve& curve) {
  double area = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

inline std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : curve.points)
    out += csv::format_number(p.fpr) + "," + csv::format_number(p.tpr) + "," +
           (std::isinf(p.threshold) ? std::string("inf") : csv::format_number(p.threshold)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct EvalOptions {
  models::ModelKind model = models::ModelKind::Gbm;
  models::TrainConfig train;
  resample::SmoteConfig smote;  // smote.seed is the base for per-fold seeds
  std::size_t folds = 5;
  std::uint64_t seed = 0;  // fold assignment
  bool include_income = false;
  features::AgePolicy age_policy = features::AgePolicy::ImputeMedian;
};

struct FoldTrace {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_synthetic = 0;
  std::size_t train_minority = 0;  // after oversampling
  double age_fill = 0;
};

struct CvResult {
  ConfusionMatrix confusion;
  double auc = 0;
  RocCurve roc;
  std::vector<int> labels;
  std::vector<double> probabilities;  // pooled out-of-fold, aligned with the evaluated profiles
  std::vector<FoldTrace> folds;
  std::size_t dropped_missing_income = 0;
};

/// Stratified k-fold CV. Encoding, standardisation and SMOTE are fit on each
/// training split only; held-out rows are real individuals, and their
/// predictions are pooled into one confusion matrix and one ROC curve.
inline CvResult cv_evaluate(std::span<const cohort::ClientProfile> all_profiles, const EvalOptions& opt) {
  opt.train.validate();
  CvResult result;
  std::vector<cohort::ClientProfile> profiles;
  for (const auto& p : all_profiles) {
    if (opt.include_income && !p.income) {
      ++result.dropped_missing_income;
      continue;
    }
    profiles.push_back(p);
  }
  if (profiles.empty()) throw Error(ErrorCode::EmptyAfterFiltering, "no profiles left to evaluate");

  result.labels.reserve(profiles.size());
  for (const auto& p : profiles) result.labels.push_back(p.readmit);
  const auto plan = resample::stratified_folds(result.labels, opt.folds, derive_seed(opt.seed, "folds"));
  const auto schema = features::make_schema(opt.include_income);
  result.probabilities.assign(profiles.size(), 0.0);

  for (std::size_t f = 0; f < opt.folds; ++f) {
    const auto train_idx = plan.train_rows(f), test_idx = plan.test_rows(f);
    std::vector<cohort::ClientProfile> train, test;
    for (auto i : train_idx) train.push_back(profiles[i]);
    for (auto i : test_idx) test.push_back(profiles[i]);

    features::EncodeOptions enc{opt.age_policy, std::nullopt};
    auto train_enc = features::encode(train, schema, enc);
    enc.age_fill = train_enc.age_fill;
    auto test_enc = features::encode(test, schema, enc);

    auto [train_std, stats] = features::standardize(std::move(train_enc.data));
    auto test_std = features::standardize(std::move(test_enc.data), stats).first;

    auto smote_cfg = opt.smote;
    smote_cfg.seed = derive_seed(opt.smote.seed, "fold", f);
    auto train_final = resample::smote(train_std, smote_cfg);

    const auto model = models::fit(opt.model, train_final, opt.train);
    const auto probs = models::predict_proba(model, test_std);
    for (std::size_t t = 0; t < test_idx.size(); ++t) result.probabilities[test_idx[t]] = probs[t];

    FoldTrace trace;
    trace.fold = f;
    trace.n_train = train_idx.size();
    trace.n_test = test_idx.size();
    trace.n_synthetic = train_final.rows() - train_std.rows();
    trace.train_minority = std::min(train_final.count_label(1), train_final.count_label(0));
    trace.age_fill = enc.age_fill.value_or(0.0);
    result.folds.push_back(trace);
  }

  result.confusion = confusion(result.labels, result.probabilities);
  result.roc = roc_curve(result.labels, result.probabilities);
  result.auc = auc(result.roc);
  return result;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  std::string ratio;
  double accuracy = 0;
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
  double auc = 0;
  double sensitivity = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<RocCurve> rocs;  // aligned with rows
};

inline std::vector<resample::SmoteRatio> default_ratios() {
  std::vector<resample::SmoteRatio> r{resample::SmoteRatio::original()};
  for (double v : {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) r.push_back(resample::SmoteRatio::of(v));
  return r;
}

/// One pooled CV run per ratio. All ratios share the fold plan; the SMOTE seed
/// of ratio i is derived from the master seed and i.
inline SweepReport sweep(std::span<const cohort::ClientProfile> profiles,
                         std::span<const resample::SmoteRatio> ratios, const EvalOptions& base) {
  if (ratios.empty()) throw Error(ErrorCode::InvalidArgument, "no SMOTE ratios given");
  SweepReport report;
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    EvalOptions opt = base;
    opt.smote.ratio = ratios[r];
    opt.smote.seed = derive_seed(base.seed, "smote", r);
    const auto cv = cv_evaluate(profiles, opt);
    SweepRow row;
    row.ratio = ratios[r].label();
    row.tp = cv.confusion.tp;
    row.fn = cv.confusion.fn;
    row.fp = cv.confusion.fp;
    row.tn = cv.confusion.tn;
    row.accuracy = accuracy(cv.confusion);
    row.sensitivity = sensitivity(cv.confusion);
    row.auc = cv.auc;
    report.rows.push_back(row);
    report.rocs.push_back(cv.roc);
  }
  return report;
}

inline nlohmann::ordered_json rows_json(const SweepReport& report) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"ratio", r.ratio},
                    {"accuracy", r.accuracy},
                    {"tp", r.tp},
                    {"fn", r.fn},
                    {"fp", r.fp},
                    {"tn", r.tn},
                    {"auc", r.auc},
                    {"sensitivity", r.sensitivity}});
  return rows;
}

inline std::vector<SweepRow> rows_from_json(const nlohmann::json& rows) {
  std::vector<SweepRow> out;
  try {
    for (const auto& j : rows) {
      SweepRow r;
      r.ratio = j.at("ratio").get<std::string>();
      r.accuracy = j.at("accuracy").get<double>();
      r.tp = j.at("tp").get<std::size_t>();
      r.fn = j.at("fn").get<std::size_t>();
      r.fp = j.at("fp").get<std::size_t>();
      r.tn = j.at("tn").get<std::size_t>();
      r.auc = j.at("auc").get<double>();
      r.sensitivity = j.at("sensitivity").get<double>();
      out.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed report rows: ") + e.what());
  }
  return out;
}

/// Metrics as rows and ratios as columns.
inline std::string render_table(const std::vector<SweepRow>& rows) {
  auto fixed = [](double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"SMOTE Ratio"};
  for (const auto& r : rows) head.push_back(r.ratio == "original" ? "Original" : r.ratio);
  grid.push_back(head);
  auto add = [&](std::string name, auto&& cell) {
    std::vector<std::string> line{std::move(name)};
    for (const auto& r : rows) line.push_back(cell(r));
    grid.push_back(std::move(line));
  };
  add("Accuracy", [&](const SweepRow& r) { return fixed(r.accuracy, 4); });
  add("True Positives", [](const SweepRow& r) { return std::to_string(r.tp); });
  add("False Negatives", [](const SweepRow& r) { return std::to_string(r.fn); });
  add("False Positives", [](const SweepRow& r) { return std::to_string(r.fp); });
  add("True Negatives", [](const SweepRow& r) { return std::to_string(r.tn); });
  add("AUC", [&](const SweepRow& r) { return fixed(r.auc, 4); });
  add("Sensitivity", [&](const SweepRow& r) { return fixed(r.sensitivity, 3); });

  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream os;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) {
        os << line[c] << std::string(width[c] - line[c].size(), ' ') << " |";
      } else {
        os << ' ' << std::string(width[c] - line[c].size(), ' ') << line[c];
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace readmit::eval
