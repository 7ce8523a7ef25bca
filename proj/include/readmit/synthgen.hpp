#pragma once

// Synthetic client cohorts with known feature/label dependence, used to
// exercise the pipeline end to end without real client data.
//
// Published marginals: cohort size 6,779, 19% multi-entry, 46% employed, and
// eviction / discord / domestic violence / overcrowding as the most common
// reasons for homelessness. Every other distribution here is a placeholder
// and is listed under "placeholders" in data/spec_default.json.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "readmit/categories.hpp"
#include "readmit/cohort.hpp"
#include "readmit/csv.hpp"
#include "readmit/date.hpp"
#include "readmit/error.hpp"
#include "readmit/models.hpp"
#include "readmit/rng.hpp"

namespace readmit::synth {

struct AgeDistribution {
  double mean = 35;
  double sd = 12;
  double min = 18;
  double max = 85;
};

struct CohortSpec {
  std::size_t n = 6779;
  double minority_rate = 0.19;
  double employed_rate = 0.46;
  double employment_unknown_rate = 0.04;
  std::vector<double> reason_weights{0.30, 0.22, 0.20, 0.16, 0.12};
  std::vector<double> race_weights{0.10, 0.50, 0.35, 0.05};
  std::vector<double> family_type_weights{0.15, 0.10, 0.75};
  std::vector<double> citizenship_weights{0.10, 0.80, 0.07, 0.03};
  AgeDistribution age;
  double income_missing_rate = 0.5;
  double signal_strength = 0.8;  // log-odds per unit of risk score
  std::uint64_t seed = 7;

  void validate() const {
    auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidArgument, "cohort spec: " + what); };
    if (n < 100) throw bad("n must be >= 100");
    for (double r : {minority_rate, employed_rate, employment_unknown_rate, income_missing_rate})
      if (!(r >= 0 && r <= 1)) throw bad("rates must lie in [0, 1]");
    if (employed_rate + employment_unknown_rate > 1) throw bad("employed + unknown employment rates exceed 1");
    auto check = [&](const std::vector<double>& w, CategoricalField f) {
      if (w.size() != static_cast<std::size_t>(category_count(f)))
        throw bad(std::string(field_name(f)) + " weights need " + std::to_string(category_count(f)) + " entries");
      double sum = 0;
      for (double x : w) {
        if (!(x >= 0)) throw bad(std::string(field_name(f)) + " weights must be non-negative");
        sum += x;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw bad(std::string(field_name(f)) + " weights must sum to 1");
    };
    check(reason_weights, CategoricalField::ReasonHomeless);
    check(race_weights, CategoricalField::Race);
    check(family_type_weights, CategoricalField::FamilyType);
    check(citizenship_weights, CategoricalField::Citizenship);
    if (!(age.sd > 0) || !(age.min < age.max) || age.min < 0 || age.max > 120) throw bad("invalid age distribution");
    if (!std::isfinite(signal_strength)) throw bad("signal_strength must be finite");
  }
};

inline nlohmann::ordered_json spec_json(const CohortSpec& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["minority_rate"] = s.minority_rate;
  j["employed_rate"] = s.employed_rate;
  j["employment_unknown_rate"] = s.employment_unknown_rate;
  j["reason_weights"] = s.reason_weights;
  j["race_weights"] = s.race_weights;
  j["family_type_weights"] = s.family_type_weights;
  j["citizenship_weights"] = s.citizenship_weights;
  j["age"] = {{"mean", s.age.mean}, {"sd", s.age.sd}, {"min", s.age.min}, {"max", s.age.max}};
  j["income_missing_rate"] = s.income_missing_rate;
  j["signal_strength"] = s.signal_strength;
  j["seed"] = s.seed;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected. The
/// "placeholders" key carries provenance notes and is ignored.
inline CohortSpec spec_from_json(const nlohmann::json& j) {
  CohortSpec s;
  try {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "cohort spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "n") s.n = value.get<std::size_t>();
      else if (key == "minority_rate") s.minority_rate = value.get<double>();
      else if (key == "employed_rate") s.employed_rate = value.get<double>();
      else if (key == "employment_unknown_rate") s.employment_unknown_rate = value.get<double>();
      else if (key == "reason_weights") s.reason_weights = value.get<std::vector<double>>();
      else if (key == "race_weights") s.race_weights = value.get<std::vector<double>>();
      else if (key == "family_type_weights") s.family_type_weights = value.get<std::vector<double>>();
      else if (key == "citizenship_weights") s.citizenship_weights = value.get<std::vector<double>>();
      else if (key == "age") {
        s.age.mean = value.value("mean", s.age.mean);
        s.age.sd = value.value("sd", s.age.sd);
        s.age.min = value.value("min", s.age.min);
        s.age.max = value.value("max", s.age.max);
      } else if (key == "income_missing_rate") s.income_missing_rate = value.get<double>();
      else if (key == "signal_strength") s.signal_strength = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "placeholders") continue;
      else throw Error(ErrorCode::InvalidArgument, "unknown cohort spec key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("cohort spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline std::uint64_t spec_hash(const CohortSpec& s) { return fnv1a64(spec_json(s).dump()); }

inline const std::vector<std::string>& exit_reasons() {
  static const std::vector<std::string> r{"48-hour curfew violation", "Family reunification", "Independent living",
                                          "Other"};
  return r;
}

inline constexpr Date kWindowStart = Date::from_ymd(2012, 7, 1);
inline constexpr Date kWindowEnd = Date::from_ymd(2017, 6, 30);

/// Risk score behind the planted signal: unemployment, eviction and younger
/// age each raise the readmission log-odds.
inline double risk_score(const cohort::ClientProfile& p, const AgeDistribution& age) {
  return (p.employment == Employment::Unemployed ? 1.0 : 0.0) +
         (p.reason_homeless == ReasonHomeless::Eviction ? 1.0 : 0.0) + (age.mean - p.age.value_or(age.mean)) / age.sd;
}

/// Intercept b with mean_i sigmoid(b + s * risk_i) == rate.
inline double solve_intercept(const std::vector<double>& risk, double strength, double rate) {
  auto mean_p = [&](double b) {
    double total = 0;
    for (double r : risk) total += models::sigmoid(b + strength * r);
    return total / static_cast<double>(risk.size());
  };
  double lo = -60, hi = 60;
  if (mean_p(lo) > rate || mean_p(hi) < rate)
    throw Error(ErrorCode::InfeasibleSpec, "no intercept reaches minority rate " + csv::format_number(rate));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_p(mid) < rate ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  if (std::abs(mean_p(b) - rate) > 0.005)
    throw Error(ErrorCode::InfeasibleSpec, "intercept bisection did not reach the minority rate");
  return b;
}

inline std::string padded(char prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, value);
  return buf;
}

/// Draws a cohort. Features are independent draws from the spec marginals;
/// labels come from a logistic model on the risk score whose intercept is
/// solved so the expected positive rate matches, and the exact positive count
/// round(n * minority_rate) is then enforced by ranking the draws by how far
/// each fell on the positive side of its own probability. Readmitted clients
/// get two to four episodes, everyone else one.
inline std::vector<cohort::ClientProfile> generate(const CohortSpec& spec) {
  spec.validate();
  Rng feat(derive_seed(spec.seed, "features"));
  Rng lab(derive_seed(spec.seed, "labels"));
  Rng epi(derive_seed(spec.seed, "episodes"));

  std::vector<cohort::ClientProfile> out(spec.n);
  const std::vector<double> employment_w{1.0 - spec.employed_rate - spec.employment_unknown_rate, spec.employed_rate,
                                         spec.employment_unknown_rate};
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto& p = out[i];
    p.key = {padded('C', i + 1, 6), padded('F', i / 2 + 1, 5), padded('K', i + 1, 6)};
    p.id = cohort::make_id_combo(p.key);
    double age = 0;
    do age = std::round(spec.age.mean + spec.age.sd * feat.normal());
    while (age < spec.age.min || age > spec.age.max);
    p.age = age;
    p.race = static_cast<Race>(feat.categorical(spec.race_weights));
    p.family_type = static_cast<FamilyType>(feat.categorical(spec.family_type_weights));
    p.reason_homeless = static_cast<ReasonHomeless>(feat.categorical(spec.reason_weights));
    p.employment = static_cast<Employment>(feat.categorical(employment_w));
    p.citizenship = static_cast<Citizenship>(feat.categorical(spec.citizenship_weights));
    const bool has_income = feat.uniform() >= spec.income_missing_rate;
    const double level = p.employment == Employment::Employed ? 1420.0 : 400.0;
    const double income = std::max(0.0, std::round(level + 300.0 * feat.normal()));
    if (has_income) p.income = income;
  }

  const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(spec.n) * spec.minority_rate));
  std::vector<double> risk(spec.n), slack(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) risk[i] = risk_score(out[i], spec.age);
  const bool degenerate = positives == 0 || positives == spec.n;
  const double intercept = degenerate ? 0.0 : solve_intercept(risk, spec.signal_strength, spec.minority_rate);
  for (std::size_t i = 0; i < spec.n; ++i)
    slack[i] = lab.uniform() - models::sigmoid(intercept + spec.signal_strength * risk[i]);  // < 0 means drawn positive
  std::vector<std::size_t> order(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return slack[a] < slack[b]; });
  for (std::size_t r = 0; r < positives; ++r) out[order[r]].readmit = 1;

  const std::vector<double> reason_w{0.30, 0.25, 0.25, 0.20};
  for (auto& p : out) {
    std::size_t count = 1;
    if (p.readmit) {
      const double u = epi.uniform();
      count = u < 0.7 ? 2 : u < 0.9 ? 3 : 4;
    }
    Date entry = kWindowStart.plus_days(static_cast<long>(epi.below(900)));
    for (std::size_t e = 0; e < count; ++e) {
      const auto stay = 1 + static_cast<long>(-110.0 * std::log(1.0 - epi.uniform()));
      const auto gap = 1 + static_cast<long>(-150.0 * std::log(1.0 - epi.uniform()));
      const auto& reason = exit_reasons()[epi.categorical(reason_w)];
      cohort::ResidenceEpisode ep{entry, entry.plus_days(stay), reason};
      if (e + 1 == count && *ep.exit_date > kWindowEnd) {
        ep.exit_date.reset();
        ep.exit_reason.reset();
      }
      p.episodes.push_back(ep);
      entry = entry.plus_days(stay + gap);
    }
    const double u = epi.uniform();
    p.incident_count = u < 0.85 ? 0 : u < 0.97 ? 1 : 2;
    p.total_los_days = cohort::closed_length_of_stay(p.episodes);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

struct RawRecords {
  std::vector<cohort::DemographicRecord> demographics;
  std::vector<cohort::ExitRecord> exits;
  std::vector<cohort::IncidentRecord> incidents;
};

/// One demographic row per episode, one exit row per closed episode and
/// `incident_count` incident rows dated at episode entries.
inline RawRecords to_raw_records(const std::vector<cohort::ClientProfile>& cohort) {
  static const std::vector<std::string> incident_types{"Altercation", "Medical", "Property"};
  RawRecords raw;
  for (const auto& p : cohort) {
    if (p.episodes.empty()) throw Error(ErrorCode::NoEpisodes, p.id.str() + " has no episodes");
    for (const auto& ep : p.episodes) {
      cohort::DemographicRecord d;
      d.key = p.key;
      d.age = p.age;
      d.race = category_label(CategoricalField::Race, static_cast<int>(p.race));
      d.family_type = category_label(CategoricalField::FamilyType, static_cast<int>(p.family_type));
      d.reason_homeless = category_label(CategoricalField::ReasonHomeless, static_cast<int>(p.reason_homeless));
      d.employment = category_label(CategoricalField::Employment, static_cast<int>(p.employment));
      d.citizenship = category_label(CategoricalField::Citizenship, static_cast<int>(p.citizenship));
      d.income = p.income;
      d.entry_date = ep.entry_date;
      d.admitted = true;
      raw.demographics.push_back(std::move(d));
      if (ep.exit_date) raw.exits.push_back({p.key, *ep.exit_date, ep.exit_reason.value_or("")});
    }
    for (int k = 0; k < p.incident_count; ++k) {
      const auto& ep = p.episodes[static_cast<std::size_t>(k) % p.episodes.size()];
      raw.incidents.push_back({p.key, ep.entry_date, incident_types[static_cast<std::size_t>(k) % 3]});
    }
  }
  return raw;
}

inline void emit_raw_files(const std::vector<cohort::ClientProfile>& cohort, const std::filesystem::path& dir) {
  if (cohort.empty()) throw Error(ErrorCode::InvalidArgument, "cohort is empty");
  const auto raw = to_raw_records(cohort);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  csv::write_file(dir / "demographics.csv", cohort::write_demographics(raw.demographics));
  csv::write_file(dir / "exits.csv", cohort::write_exits(raw.exits));
  csv::write_file(dir / "incidents.csv", cohort::write_incidents(raw.incidents));
}

}  // namespace readmit::synth
