// readmit: synthesize raw client files, link them into profiles, and run the
// SMOTE-ratio classifier sweep.
//
// Exit codes: 0 success, 2 usage or bad input, 3 I/O, 4 computation.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "readmit/readmit.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace readmit;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json read_json_file(const fs::path& path) {
  const std::string text = csv::read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const ordered_json& j) { csv::write_file(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("READMIT_SEED");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0') throw Error(ErrorCode::InvalidArgument, std::string("READMIT_SEED is not an integer: ") + raw);
  return v;
}

ordered_json provenance(std::string_view command) {
  ordered_json j;
  j["tool"] = "readmit";
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

// ---------------------------------------------------------------------------
// Modeling run configuration shared by sweep and train.

struct RunConfig {
  models::ModelKind model = models::ModelKind::Gbm;
  std::vector<std::string> ratios;
  std::size_t folds = 5;
  std::uint64_t seed = kDefaultSeed;
  int k = 5;
  bool include_income = false;
  bool strict_age = false;
  models::TrainConfig train;
};

ordered_json run_config_json(const RunConfig& c) {
  ordered_json j;
  j["model"] = models::to_string(c.model);
  j["ratios"] = c.ratios;
  j["folds"] = c.folds;
  j["seed"] = c.seed;
  j["k"] = c.k;
  j["include_income"] = c.include_income;
  j["strict_age"] = c.strict_age;
  j["train"] = models::config_json(c.train);
  return j;
}

/// Accepts a bare run config or any output document that embeds one under "config".
RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig c) {
  const nlohmann::json& j = doc.contains("config") ? doc["config"] : doc;
  try {
    if (j.contains("model")) c.model = models::parse_model_kind(j["model"].get<std::string>());
    if (j.contains("ratios")) c.ratios = j["ratios"].get<std::vector<std::string>>();
    c.folds = j.value("folds", c.folds);
    c.seed = j.value("seed", c.seed);
    c.k = j.value("k", c.k);
    c.include_income = j.value("include_income", c.include_income);
    c.strict_age = j.value("strict_age", c.strict_age);
    if (j.contains("train")) c.train = models::config_from_json(j["train"], c.train);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  return c;
}

struct ModelFlags {
  std::string config_path;
  std::string model;
  std::string ratios;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  int k = 5;
  bool include_income = false;
  bool strict_age = false;
  models::TrainConfig train;

  CLI::Option* model_opt = nullptr;
  CLI::Option* ratios_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* income_opt = nullptr;
  CLI::Option* strict_opt = nullptr;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> hyper;

  void add_to(CLI::App* app, bool with_ratios_list) {
    app->add_option("--config", config_path, "JSON run config, or a report/model that embeds one");
    model_opt = app->add_option("--model", model, "logistic or gbm")->check(CLI::IsMember({"logistic", "gbm"}));
    if (with_ratios_list)
      ratios_opt = app->add_option("--ratios", ratios, "comma-separated SMOTE ratios, e.g. original,0.3,1.0");
    else
      ratios_opt = app->add_option("--ratio", ratios, "SMOTE ratio for training (original or (0,1])");
    folds_opt = app->add_option("--folds", folds, "cross-validation folds");
    seed_opt = app->add_option("--seed", seed, "master seed (fallback: READMIT_SEED)");
    k_opt = app->add_option("--k", k, "SMOTE neighbour count");
    income_opt = app->add_flag("--include-income", include_income, "add income as a predictor (drops rows without it)");
    strict_opt = app->add_flag("--strict-age", strict_age, "reject profiles without age instead of imputing");
    hyper.emplace_back(app->add_option("--n-trees", train.gbm.n_trees, "boosting rounds (default 100)"),
                       [this](RunConfig& c) { c.train.gbm.n_trees = train.gbm.n_trees; });
    hyper.emplace_back(app->add_option("--learning-rate", train.gbm.learning_rate, "shrinkage per round (default 0.1)"),
                       [this](RunConfig& c) { c.train.gbm.learning_rate = train.gbm.learning_rate; });
    hyper.emplace_back(app->add_option("--max-depth", train.gbm.max_depth, "tree depth (default 3)"),
                       [this](RunConfig& c) { c.train.gbm.max_depth = train.gbm.max_depth; });
    hyper.emplace_back(app->add_option("--min-samples-leaf", train.gbm.min_samples_leaf, "rows required in each leaf (default 1)"),
                       [this](RunConfig& c) { c.train.gbm.min_samples_leaf = train.gbm.min_samples_leaf; });
    hyper.emplace_back(app->add_option("--ridge", train.logistic.ridge, "L2 penalty on logistic weights (default 1e-6)"),
                       [this](RunConfig& c) { c.train.logistic.ridge = train.logistic.ridge; });
    hyper.emplace_back(app->add_option("--tol", train.logistic.tol, "logistic convergence tolerance (default 1e-8)"),
                       [this](RunConfig& c) { c.train.logistic.tol = train.logistic.tol; });
    hyper.emplace_back(app->add_option("--max-iter", train.logistic.max_iter, "logistic Newton iterations (default 100)"),
                       [this](RunConfig& c) { c.train.logistic.max_iter = train.logistic.max_iter; });
  }

  /// flags > config file > READMIT_SEED (seed only) > defaults
  RunConfig resolve(std::vector<std::string> default_ratios) const {
    RunConfig c;
    c.ratios = std::move(default_ratios);
    if (auto s = env_seed()) c.seed = *s;
    if (!config_path.empty()) c = run_config_from_json(read_json_file(config_path), c);
    if (model_opt->count()) c.model = models::parse_model_kind(model);
    if (ratios_opt->count()) {
      c.ratios.clear();
      std::stringstream ss(ratios);
      std::string token;
      while (std::getline(ss, token, ',')) c.ratios.push_back(csv::trim(token));
    }
    if (folds_opt->count()) c.folds = folds;
    if (seed_opt->count()) c.seed = seed;
    if (k_opt->count()) c.k = k;
    if (income_opt->count()) c.include_income = include_income;
    if (strict_opt->count()) c.strict_age = strict_age;
    for (const auto& [opt, apply] : hyper)
      if (opt->count()) apply(c);
    c.train.seed = c.seed;
    c.train.validate();
    if (c.ratios.empty()) throw Error(ErrorCode::InvalidArgument, "no SMOTE ratios given");
    if (c.k < 1) throw Error(ErrorCode::InvalidArgument, "--k must be >= 1");
    return c;
  }
};

std::vector<resample::SmoteRatio> parse_ratios(const std::vector<std::string>& tokens) {
  std::vector<resample::SmoteRatio> out;
  for (const auto& t : tokens) out.push_back(resample::SmoteRatio::parse(t));
  return out;
}

eval::EvalOptions eval_options(const RunConfig& c) {
  eval::EvalOptions o;
  o.model = c.model;
  o.train = c.train;
  o.smote.k = c.k;
  o.folds = c.folds;
  o.seed = c.seed;
  o.include_income = c.include_income;
  o.age_policy = c.strict_age ? features::AgePolicy::Strict : features::AgePolicy::ImputeMedian;
  return o;
}

std::vector<cohort::ClientProfile> load_profiles(const fs::path& path, std::uint64_t& content_hash) {
  const std::string text = csv::read_file(path);
  content_hash = fnv1a64(text);
  try {
    return cohort::read_profiles(csv::parse(text));
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::Io) throw;
    throw Error(ErrorCode::MalformedCsv, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const std::string& spec_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  synth::CohortSpec spec;
  if (!spec_path.empty()) {
    if (!fs::exists(spec_path)) throw Error(ErrorCode::InvalidArgument, "spec file not found: " + spec_path);
    spec = synth::spec_from_json(read_json_file(spec_path));
  }
  if (seed) spec.seed = *seed;
  else if (auto s = env_seed(); s && spec_path.empty()) spec.seed = *s;
  const auto cohort = synth::generate(spec);
  synth::emit_raw_files(cohort, out);

  std::size_t positives = 0;
  for (const auto& p : cohort) positives += static_cast<std::size_t>(p.readmit);
  auto manifest = provenance("synth");
  manifest["seed"] = spec.seed;
  manifest["spec_hash"] = hex64(synth::spec_hash(spec));
  manifest["spec"] = synth::spec_json(spec);
  manifest["n_profiles"] = cohort.size();
  manifest["n_readmitted"] = positives;
  manifest["files"] = {"demographics.csv", "exits.csv", "incidents.csv"};
  write_json_file(out / "manifest.json", manifest);
  std::cout << "profiles: " << cohort.size() << "\nreadmitted: " << positives << "\nwritten: " << out.string() << "\n";
  return 0;
}

int cmd_unify(const fs::path& demo, const fs::path& exits, const fs::path& incidents, const fs::path& out) {
  const auto d = cohort::read_demographics(csv::read_table(demo));
  const auto e = cohort::read_exits(csv::read_table(exits));
  const auto i = cohort::read_incidents(csv::read_table(incidents));
  const auto result = cohort::unify(d, e, i);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  csv::write_file(out, cohort::write_profiles(result.profiles));
  std::string log;
  for (const auto& w : result.warnings) log += w + "\n";
  const fs::path warn_path = out.parent_path() / "warnings.log";
  csv::write_file(warn_path, log);

  std::size_t multi = 0;
  for (const auto& p : result.profiles) multi += static_cast<std::size_t>(p.readmit);
  std::cout << "profiles: " << result.profiles.size() << "\nmulti-entry: " << multi
            << "\nremoved: " << result.removed_not_admitted << "\nwarnings: " << result.warnings.size() << " (see "
            << warn_path.string() << ")\n";
  for (const auto& w : result.warnings)
    if (w.rfind("no exit records", 0) == 0) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_sweep(const fs::path& profiles_path, const ModelFlags& flags, const fs::path& out) {
  std::vector<std::string> defaults;
  for (const auto& r : eval::default_ratios()) defaults.push_back(r.label());
  const RunConfig config = flags.resolve(defaults);
  const auto ratios = parse_ratios(config.ratios);

  std::uint64_t input_hash = 0;
  const auto profiles = load_profiles(profiles_path, input_hash);
  const auto report = eval::sweep(profiles, ratios, eval_options(config));

  ensure_dir(out);
  auto doc = provenance("sweep");
  doc["config"] = run_config_json(config);
  doc["input"] = {{"profiles", profiles.size()}, {"fnv1a64", hex64(input_hash)}};
  doc["rows"] = eval::rows_json(report);
  write_json_file(out / "report.json", doc);
  for (std::size_t r = 0; r < report.rows.size(); ++r)
    csv::write_file(out / ("roc_" + report.rows[r].ratio + ".csv"), eval::roc_csv(report.rocs[r]));
  write_json_file(out / "schema.json", features::schema_json(features::make_schema(config.include_income)));
  std::cout << eval::render_table(report.rows);
  return 0;
}

int cmd_train(const fs::path& profiles_path, const ModelFlags& flags, const fs::path& out) {
  const RunConfig config = flags.resolve({"original"});
  if (config.ratios.size() != 1) throw Error(ErrorCode::InvalidArgument, "train takes exactly one --ratio");
  const auto ratio = resample::SmoteRatio::parse(config.ratios.front());

  std::uint64_t input_hash = 0;
  const auto profiles = load_profiles(profiles_path, input_hash);
  const auto schema = features::make_schema(config.include_income);
  features::EncodeOptions enc;
  enc.age_policy = config.strict_age ? features::AgePolicy::Strict : features::AgePolicy::ImputeMedian;
  auto encoded = features::encode(profiles, schema, enc);
  auto [standardized, stats] = features::standardize(std::move(encoded.data));
  resample::SmoteConfig smote{ratio, config.k, derive_seed(config.seed, "smote")};
  const auto training = resample::smote(standardized, smote);
  const auto model = models::fit(config.model, training, config.train);

  const auto probs = models::predict_proba(model, standardized);
  const auto cm = eval::confusion(standardized.labels, probs);

  ensure_dir(out);
  auto doc = provenance("train");
  doc["config"] = run_config_json(config);
  doc["input"] = {{"profiles", profiles.size()}, {"fnv1a64", hex64(input_hash)}};
  doc["schema"] = features::schema_json(schema);
  doc["standardization"] = features::stats_json(stats);
  doc["age_fill"] = encoded.age_fill ? ordered_json(*encoded.age_fill) : ordered_json(nullptr);
  doc["training"] = {{"rows", standardized.rows()},
                     {"synthetic_rows", training.rows() - standardized.rows()},
                     {"dropped_missing_income", encoded.dropped_missing_income},
                     {"imputed_age", encoded.imputed_age},
                     {"resubstitution", {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}}}};
  doc["model"] = models::model_json(model);
  write_json_file(out / "model.json", doc);
  write_json_file(out / "schema.json", features::schema_json(schema));
  std::cout << "model: " << models::to_string(config.model) << "\nrows: " << standardized.rows()
            << "\nsynthetic rows: " << training.rows() - standardized.rows() << "\nwritten: " << (out / "model.json").string()
            << "\n";
  return 0;
}

int cmd_report(const fs::path& report_path, const std::string& out) {
  const auto doc = read_json_file(report_path);
  if (!doc.contains("rows")) throw Error(ErrorCode::InvalidArgument, report_path.string() + " has no rows");
  const std::string table = eval::render_table(eval::rows_from_json(doc["rows"]));
  if (!out.empty()) csv::write_file(out, table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shelter readmission pipeline: synthetic cohorts, record linkage, SMOTE sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort as raw demographics/exits/incidents CSVs");
  synth->add_option("--spec", spec_path, "cohort spec JSON (defaults match data/spec_default.json)");
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "overrides the spec seed");
  synth->add_option("-o,--out", synth_out, "output directory")->required();

  std::string in_dir, demo_path, exits_path, incidents_path, unify_out;
  auto* unify = app.add_subcommand("unify", "link raw record files into one profile per individual");
  unify->add_option("--in", in_dir, "directory holding demographics.csv, exits.csv, incidents.csv");
  unify->add_option("--demographics", demo_path);
  unify->add_option("--exits", exits_path);
  unify->add_option("--incidents", incidents_path);
  unify->add_option("-o,--out", unify_out, "profiles.csv path")->required();

  std::string sweep_profiles, sweep_out;
  ModelFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "pooled cross-validation across SMOTE ratios");
  sweep->add_option("profiles", sweep_profiles, "profiles.csv")->required();
  sweep_flags.add_to(sweep, true);
  sweep->add_option("-o,--out", sweep_out, "output directory")->required();

  std::string train_profiles, train_out;
  ModelFlags train_flags;
  auto* train = app.add_subcommand("train", "fit one model on all profiles and save model.json");
  train->add_option("profiles", train_profiles, "profiles.csv")->required();
  train_flags.add_to(train, false);
  train->add_option("-o,--out", train_out, "output directory")->required();

  std::string report_path, report_out;
  auto* report = app.add_subcommand("report", "render report.json as a text table");
  report->add_option("report", report_path, "report.json")->required();
  report->add_option("-o,--out", report_out, "also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::Usage);
  }

  try {
    if (*synth)
      return cmd_synth(spec_path, synth_seed_opt->count() ? std::optional<std::uint64_t>(synth_seed) : std::nullopt,
                       synth_out);
    if (*unify) {
      auto pick = [&](const std::string& explicit_path, const char* name) -> fs::path {
        if (!explicit_path.empty()) return explicit_path;
        if (in_dir.empty())
          throw Error(ErrorCode::InvalidArgument, std::string("need --in or --") +
                                                      std::string(name).substr(0, std::string(name).find('.')));
        return fs::path(in_dir) / name;
      };
      return cmd_unify(pick(demo_path, "demographics.csv"), pick(exits_path, "exits.csv"),
                       pick(incidents_path, "incidents.csv"), unify_out);
    }
    if (*sweep) return cmd_sweep(sweep_profiles, sweep_flags, sweep_out);
    if (*train) return cmd_train(train_profiles, train_flags, train_out);
    if (*report) return cmd_report(report_path, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::Computation);
  }
  return 0;
}
