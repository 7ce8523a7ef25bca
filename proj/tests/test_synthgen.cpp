#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "readmit/eval.hpp"
#include "readmit/synthgen.hpp"
#include "support.hpp"

using namespace readmit;
using namespace readmit::synth;

namespace {

double logistic_cv_auc(const std::vector<cohort::ClientProfile>& cohort, std::uint64_t seed) {
  eval::EvalOptions opt;
  opt.model = models::ModelKind::Logistic;
  opt.seed = seed;
  return eval::cv_evaluate(cohort, opt).auc;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Generate, ExactPositiveCountAndEpisodes) {
  const auto cohort = generate(CohortSpec{});
  ASSERT_EQ(cohort.size(), 6779u);
  std::size_t positives = 0;
  for (const auto& p : cohort) {
    positives += static_cast<std::size_t>(p.readmit);
    EXPECT_EQ(p.readmit == 1, p.episodes.size() >= 2);
    EXPECT_EQ(p.readmit, cohort::derive_label(p.episodes));
    EXPECT_EQ(p.total_los_days, cohort::closed_length_of_stay(p.episodes));
    EXPECT_GE(p.episodes.front().entry_date, kWindowStart);
    if (p.episodes.back().exit_date) {
      EXPECT_LE(*p.episodes.back().exit_date, kWindowEnd);
    }
  }
  EXPECT_EQ(positives, 1288u);

  CohortSpec exact;
  exact.minority_rate = 1289.0 / 6779.0;
  const auto c2 = generate(exact);
  EXPECT_EQ(std::count_if(c2.begin(), c2.end(), [](const auto& p) { return p.readmit == 1; }), 1289);
}

TEST(Generate, DeterministicPerSeed) {
  CohortSpec spec;
  spec.n = 500;
  EXPECT_EQ(generate(spec), generate(spec));
  auto other = spec;
  other.seed = 8;
  EXPECT_NE(generate(spec), generate(other));
}

TEST(Generate, MarginalsFollowSpec) {
  const CohortSpec spec;
  const auto cohort = generate(spec);
  const double n = static_cast<double>(cohort.size());
  auto share = [&](auto pred) { return static_cast<double>(std::count_if(cohort.begin(), cohort.end(), pred)) / n; };
  EXPECT_NEAR(share([](const auto& p) { return p.employment == Employment::Employed; }), spec.employed_rate, 0.02);
  EXPECT_NEAR(share([](const auto& p) { return p.employment == Employment::Unknown; }), spec.employment_unknown_rate,
              0.02);
  for (int c = 0; c < 5; ++c)
    EXPECT_NEAR(share([&](const auto& p) { return static_cast<int>(p.reason_homeless) == c; }),
                spec.reason_weights[static_cast<std::size_t>(c)], 0.02);
  for (int c = 0; c < 4; ++c)
    EXPECT_NEAR(share([&](const auto& p) { return static_cast<int>(p.race) == c; }),
                spec.race_weights[static_cast<std::size_t>(c)], 0.02);
  for (int c = 0; c < 3; ++c)
    EXPECT_NEAR(share([&](const auto& p) { return static_cast<int>(p.family_type) == c; }),
                spec.family_type_weights[static_cast<std::size_t>(c)], 0.02);
  for (int c = 0; c < 4; ++c)
    EXPECT_NEAR(share([&](const auto& p) { return static_cast<int>(p.citizenship) == c; }),
                spec.citizenship_weights[static_cast<std::size_t>(c)], 0.02);
  EXPECT_NEAR(share([](const auto& p) { return !p.income.has_value(); }), spec.income_missing_rate, 0.02);
  for (const auto& p : cohort) {
    ASSERT_TRUE(p.age.has_value());
    EXPECT_GE(*p.age, spec.age.min);
    EXPECT_LE(*p.age, spec.age.max);
    EXPECT_EQ(*p.age, std::round(*p.age));
  }
}

TEST(RawFiles, RoundTripThroughUnify) {
  CohortSpec spec;
  spec.n = 1200;
  const auto cohort = generate(spec);
  const auto dir = testing_support::scratch_dir("synth_roundtrip");
  emit_raw_files(cohort, dir);
  const auto result = testing_support::unify_dir(dir);
  EXPECT_EQ(result.removed_not_admitted, 0u);
  EXPECT_TRUE(result.warnings.empty()) << result.warnings.front();
  ASSERT_EQ(result.profiles.size(), cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) ASSERT_EQ(result.profiles[i], cohort[i]) << cohort[i].id.str();
}

TEST(RawFiles, RowCountsPerClient) {
  CohortSpec spec;
  spec.n = 300;
  const auto cohort = generate(spec);
  const auto raw = to_raw_records(cohort);
  std::size_t episodes = 0, closed = 0, incidents = 0;
  for (const auto& p : cohort) {
    episodes += p.episodes.size();
    closed += static_cast<std::size_t>(std::count_if(p.episodes.begin(), p.episodes.end(),
                                                     [](const auto& e) { return e.closed(); }));
    incidents += static_cast<std::size_t>(p.incident_count);
  }
  EXPECT_EQ(raw.demographics.size(), episodes);
  EXPECT_EQ(raw.exits.size(), closed);
  EXPECT_EQ(raw.incidents.size(), incidents);

  const auto single = std::find_if(cohort.begin(), cohort.end(), [](const auto& p) { return p.episodes.size() == 1; });
  const auto twice = std::find_if(cohort.begin(), cohort.end(), [](const auto& p) { return p.episodes.size() == 2; });
  ASSERT_NE(single, cohort.end());
  ASSERT_NE(twice, cohort.end());
  auto rows_for = [&](const cohort::ClientProfile& p) {
    return std::count_if(raw.demographics.begin(), raw.demographics.end(),
                         [&](const auto& r) { return r.key == p.key; });
  };
  EXPECT_EQ(rows_for(*single), 1);
  EXPECT_EQ(rows_for(*twice), 2);
}

TEST(Signal, NullSignalGivesChanceAuc) {
  std::vector<double> aucs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CohortSpec spec;
    spec.signal_strength = 0;
    spec.seed = seed;
    aucs.push_back(logistic_cv_auc(generate(spec), seed));
  }
  const double m = median_of(aucs);
  EXPECT_GE(m, 0.47);
  EXPECT_LE(m, 0.53);
}

TEST(Signal, AucGrowsWithSignalStrength) {
  double previous = 0;
  for (double strength : {0.0, 0.4, 0.8, 1.6}) {
    std::vector<double> aucs;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      CohortSpec spec;
      spec.n = 3000;
      spec.signal_strength = strength;
      spec.seed = seed;
      aucs.push_back(logistic_cv_auc(generate(spec), seed));
    }
    const double m = median_of(aucs);
    EXPECT_GT(m, previous) << "signal " << strength;
    previous = m;
  }
}

TEST(Spec, DefaultFileMatchesBuiltInDefaults) {
  std::ifstream in(testing_support::source_dir() / "data" / "spec_default.json");
  ASSERT_TRUE(in);
  const auto j = nlohmann::json::parse(in);
  EXPECT_TRUE(j.contains("placeholders"));
  EXPECT_EQ(spec_json(spec_from_json(j)), spec_json(CohortSpec{}));
  EXPECT_EQ(spec_hash(spec_from_json(j)), spec_hash(CohortSpec{}));
}

TEST(Spec, JsonRoundTripAndValidation) {
  CohortSpec s;
  s.n = 321;
  s.signal_strength = 1.25;
  s.age.mean = 40;
  EXPECT_EQ(spec_json(spec_from_json(nlohmann::json::parse(spec_json(s).dump()))), spec_json(s));

  EXPECT_THROW(spec_from_json(nlohmann::json{{"n", 10}}), Error);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"race_weights", {0.5, 0.5}}}), Error);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"reason_weights", {0.5, 0.5, 0.5, 0.0, 0.0}}}), Error);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"minority_rate", 1.5}}), Error);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"bogus", 1}}), Error);
  EXPECT_THROW(spec_from_json(nlohmann::json::array()), Error);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"n", "many"}}), Error);
}

TEST(Spec, InfeasibleTargetRate) {
  CohortSpec s;
  s.n = 500;
  s.signal_strength = 100;
  s.minority_rate = 0.99;
  try {
    generate(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleSpec);
  }
}
