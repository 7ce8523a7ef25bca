#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "readmit/readmit.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using readmit::csv::read_file;
using testing_support::scratch_dir;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs the CLI with `args` (already shell-quoted where needed), capturing
// stdout and stderr through files in `dir`.
Run run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = env + " " + quote(READMIT_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" +
                          quote(err.string());
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string q(const fs::path& p) { return quote(p.string()); }

fs::path fixture() { return testing_support::fixture_dir() / "linkage_small"; }

// Small cohort so GBM sweeps stay quick.
fs::path small_profiles(const fs::path& dir) {
  const auto spec = dir / "spec.json";
  readmit::csv::write_file(spec, R"({"n": 1000, "seed": 3})");
  EXPECT_EQ(run_cli("synth --spec " + q(spec) + " -o " + q(dir / "raw"), dir).code, 0);
  EXPECT_EQ(run_cli("unify --in " + q(dir / "raw") + " -o " + q(dir / "profiles.csv"), dir).code, 0);
  return dir / "profiles.csv";
}

}  // namespace

TEST(Cli, VersionAndUsage) {
  const auto dir = scratch_dir("cli_usage");
  const auto v = run_cli("--version", dir);
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(readmit::kVersion), std::string::npos);
  EXPECT_EQ(run_cli("", dir).code, 2);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("sweep", dir).code, 2);
}

TEST(Cli, UnifyReproducesGolden) {
  const auto dir = scratch_dir("cli_unify");
  const auto r = run_cli("unify --in " + q(fixture()) + " -o " + q(dir / "profiles.csv"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "profiles.csv"), read_file(fixture() / "profiles.golden.csv"));
  EXPECT_NE(r.out.find("profiles: 20"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("removed: 7"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "warnings.log"));
  EXPECT_NE(read_file(dir / "warnings.log").find("ConflictingDemographics"), std::string::npos);
}

TEST(Cli, UnifyWithoutExitsWarns) {
  const auto dir = scratch_dir("cli_noexits");
  readmit::csv::write_file(dir / "exits.csv", "cares_id,family_id,case_id,exit_date,exit_reason\n");
  const auto r = run_cli("unify --demographics " + q(fixture() / "demographics.csv") + " --exits " +
                             q(dir / "exits.csv") + " --incidents " + q(fixture() / "incidents.csv") + " -o " +
                             q(dir / "p.csv"),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("no exit records"), std::string::npos) << r.err;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli_codes");
  // missing spec file: usage error naming the path
  const auto missing = run_cli("synth --spec " + q(dir / "nope.json") + " -o " + q(dir / "out"), dir);
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("nope.json"), std::string::npos) << missing.err;
  // unknown ratio token
  EXPECT_EQ(run_cli("sweep " + q(fixture() / "profiles.golden.csv") + " --ratios original,huge -o " + q(dir / "s"), dir)
                .code,
            2);
  // unreadable input
  EXPECT_EQ(run_cli("sweep " + q(dir / "absent.csv") + " -o " + q(dir / "s"), dir).code, 3);
  // too few positives for five folds
  EXPECT_EQ(run_cli("sweep " + q(fixture() / "profiles.golden.csv") + " --model logistic --ratios original -o " +
                        q(dir / "s"),
                    dir)
                .code,
            4);
  // malformed CSV
  readmit::csv::write_file(dir / "bad.csv", "id_combo,cares_id\nx\n");
  EXPECT_EQ(run_cli("sweep " + q(dir / "bad.csv") + " -o " + q(dir / "s"), dir).code, 2);
}

TEST(Cli, SynthIsDeterministicAndWritesManifest) {
  const auto dir = scratch_dir("cli_synth");
  readmit::csv::write_file(dir / "spec.json", R"({"n": 400})");
  ASSERT_EQ(run_cli("synth --spec " + q(dir / "spec.json") + " --seed 11 -o " + q(dir / "a"), dir).code, 0);
  ASSERT_EQ(run_cli("synth --spec " + q(dir / "spec.json") + " --seed 11 -o " + q(dir / "b"), dir).code, 0);
  for (const char* f : {"demographics.csv", "exits.csv", "incidents.csv", "manifest.json"})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 11);
  EXPECT_EQ(manifest["n_profiles"], 400);
  EXPECT_EQ(manifest["n_readmitted"], 76);
}

TEST(Cli, LogisticSweepAndReport) {
  const auto dir = scratch_dir("cli_sweep");
  const auto profiles = small_profiles(dir);
  const auto r = run_cli("sweep " + q(profiles) + " --model logistic --ratios original --seed 5 -o " + q(dir / "s"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::ordered_json::parse(read_file(dir / "s" / "report.json"));
  ASSERT_EQ(doc["rows"].size(), 1u);
  EXPECT_EQ(doc["rows"][0]["ratio"], "original");
  EXPECT_EQ(doc["config"]["seed"], 5);
  const auto& row = doc["rows"][0];
  EXPECT_EQ(row["tp"].get<int>() + row["fn"].get<int>() + row["fp"].get<int>() + row["tn"].get<int>(), 1000);
  EXPECT_TRUE(fs::exists(dir / "s" / "roc_original.csv"));
  EXPECT_TRUE(fs::exists(dir / "s" / "schema.json"));
  EXPECT_EQ(read_file(dir / "s" / "roc_original.csv").rfind("fpr,tpr,threshold\n", 0), 0u);

  const auto rep = run_cli("report " + q(dir / "s" / "report.json") + " -o " + q(dir / "table.txt"), dir);
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_EQ(rep.out, r.out);
  EXPECT_EQ(read_file(dir / "table.txt"), r.out);
  EXPECT_NE(rep.out.find("Original"), std::string::npos);
}

TEST(Cli, ConfigRerunIsByteIdentical) {
  const auto dir = scratch_dir("cli_rerun");
  const auto profiles = small_profiles(dir);
  const auto first = run_cli("sweep " + q(profiles) + " --ratios original,1.0 --n-trees 15 --seed 9 -o " +
                                 q(dir / "first"),
                             dir);
  ASSERT_EQ(first.code, 0) << first.err;
  // rerun from the embedded config, with a conflicting environment seed that
  // the config must override
  const auto second =
      run_cli("sweep " + q(profiles) + " --config " + q(dir / "first" / "report.json") + " -o " + q(dir / "second"),
              dir, "READMIT_SEED=1");
  ASSERT_EQ(second.code, 0) << second.err;
  for (const char* f : {"report.json", "roc_original.csv", "roc_1.0.csv", "schema.json"})
    EXPECT_EQ(read_file(dir / "first" / f), read_file(dir / "second" / f)) << f;
  EXPECT_EQ(first.out, second.out);
}

TEST(Cli, EnvironmentSeedIsTheFallback) {
  const auto dir = scratch_dir("cli_env");
  const auto profiles = small_profiles(dir);
  ASSERT_EQ(run_cli("sweep " + q(profiles) + " --model logistic --ratios 0.5 -o " + q(dir / "a"), dir,
                    "READMIT_SEED=123")
                .code,
            0);
  const auto doc = nlohmann::json::parse(read_file(dir / "a" / "report.json"));
  EXPECT_EQ(doc["config"]["seed"], 123);
}

TEST(Cli, TrainWritesLoadableModel) {
  const auto dir = scratch_dir("cli_train");
  const auto profiles = small_profiles(dir);
  for (const char* sub : {"a", "b"}) {
    const auto r = run_cli("train " + q(profiles) + " --ratio 1.0 --n-trees 10 --seed 2 -o " + q(dir / sub), dir);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(read_file(dir / "a" / "model.json"), read_file(dir / "b" / "model.json"));
  const auto doc = nlohmann::json::parse(read_file(dir / "a" / "model.json"));
  const auto model = readmit::models::model_from_json(doc["model"]);
  ASSERT_TRUE(std::holds_alternative<readmit::models::GbmModel>(model));
  EXPECT_EQ(std::get<readmit::models::GbmModel>(model).trees.size(), 10u);
  EXPECT_GT(doc["training"]["synthetic_rows"].get<int>(), 0);
  EXPECT_EQ(doc["schema"]["columns"].size(), 20u);
}
