#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "drml/clate.hpp"
#include "drml/common.hpp"
#include "drml/dataset.hpp"
#include "drml/late.hpp"
#include "drml/profiling.hpp"
#include "drml/rng.hpp"
#include "drml/sensitivity.hpp"
#include "drml/serialize.hpp"
#include "drml/simulation.hpp"
#include "drml/version.hpp"

namespace {

using json = nlohmann::ordered_json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  int threads = 0;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw drml::input_error("file not found: " + path);
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw drml::input_error("malformed config: " + std::string(e.what()));
  }
  return config;
}

drml::SchemaConfig parse_schema(const json& config,
                                const std::string& config_dir) {
  if (!config.contains("dataset")) {
    throw drml::input_error("config missing \"dataset\" block");
  }
  const json& d = config.at("dataset");
  drml::SchemaConfig schema;
  schema.path = d.at("path").get<std::string>();
  if (!schema.path.empty() && schema.path.front() != '/') {
    schema.path = config_dir + "/" + schema.path;
  }
  schema.outcome_column = d.at("outcome").get<std::string>();
  schema.treatment_column = d.at("treatment").get<std::string>();
  schema.instrument_column = d.at("instrument").get<std::string>();
  schema.covariate_columns =
      d.value("covariates", std::vector<std::string>{});
  schema.categorical_columns =
      d.value("categoricals", std::vector<std::string>{});
  const std::string missing = d.value("missing", std::string("reject"));
  if (missing == "reject") {
    schema.missing_policy = drml::MissingPolicy::reject;
  } else if (missing == "drop_rows") {
    schema.missing_policy = drml::MissingPolicy::drop_rows;
  } else {
    throw drml::input_error("missing policy must be reject or drop_rows");
  }
  schema.dichotomize_instrument_column =
      d.value("dichotomize_instrument", false);
  return schema;
}

drml::LearnerSpec parse_learner(const json& value, bool probability_target) {
  if (value.is_string()) {
    const std::string name = value.get<std::string>();
    if (name == "linear") return drml::LearnerSpec::linear();
    if (name == "logistic") return drml::LearnerSpec::logistic();
    if (name == "glm") {
      return probability_target ? drml::LearnerSpec::logistic()
                                : drml::LearnerSpec::linear();
    }
    if (name == "tree") return drml::LearnerSpec::tree_spec();
    if (name == "tree_pruned") return drml::LearnerSpec::tree_spec(6, 20, true);
    if (name == "stack") {
      return drml::LearnerSpec::default_stack(probability_target);
    }
    throw drml::input_error("unknown learner name: " + name);
  }
  if (!value.is_object()) throw drml::input_error("bad learner spec");
  const std::string kind = value.at("kind").get<std::string>();
  if (kind == "tree") {
    return drml::LearnerSpec::tree_spec(value.value("max_depth", 6),
                                        value.value("min_leaf", 20),
                                        value.value("prune", false));
  }
  if (kind == "stack") {
    std::vector<drml::LearnerSpec> members;
    for (const auto& m : value.at("members")) {
      members.push_back(parse_learner(m, probability_target));
    }
    return drml::LearnerSpec::stack(members, value.value("cv_folds", 5));
  }
  return parse_learner(json(kind), probability_target);
}

struct PipelineSettings {
  int folds = 5;
  double epsilon = 0.01;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  drml::NuisanceSpecs specs;
};

PipelineSettings parse_pipeline(const json& config, const CommonArgs& args,
                                bool y_binary) {
  PipelineSettings s;
  s.folds = config.value("folds", 5);
  s.epsilon = config.value("epsilon", 0.01);
  s.alpha = args.alpha ? *args.alpha : config.value("alpha", 0.05);
  if (args.seed) {
    s.seed = *args.seed;
  } else if (config.contains("seed")) {
    s.seed = config.at("seed").get<std::uint64_t>();
  } else {
    throw drml::input_error("a seed is required (config or --seed)");
  }
  s.specs = drml::NuisanceSpecs::nonparametric(y_binary);
  if (config.contains("learners")) {
    const json& l = config.at("learners");
    if (l.contains("pi")) s.specs.pi = parse_learner(l.at("pi"), true);
    if (l.contains("mu")) s.specs.mu = parse_learner(l.at("mu"), y_binary);
    if (l.contains("lambda")) {
      s.specs.lambda = parse_learner(l.at("lambda"), true);
    }
  }
  return s;
}

std::uint64_t config_hash(const json& config, const CommonArgs& args) {
  json effective = config;
  if (args.seed) effective["seed"] = *args.seed;
  if (args.alpha) effective["alpha"] = *args.alpha;
  return drml::fnv1a_hash(effective.dump());
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

std::string config_dir_of(const std::string& config_path) {
  const auto parent = std::filesystem::path(config_path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

struct FittedPipeline {
  drml::IvDataset data;
  drml::FoldPlan folds;
  drml::PseudoOutcomes pseudo;
  PipelineSettings settings;
};

FittedPipeline run_pipeline(const json& config, const CommonArgs& args) {
  const drml::SchemaConfig schema =
      parse_schema(config, config_dir_of(args.config_path));
  FittedPipeline p;
  p.data = drml::load_dataset(schema);
  p.settings = parse_pipeline(config, args, p.data.y_binary);
  p.folds = drml::make_folds(p.data.n, p.settings.folds, p.data.z,
                             p.settings.seed);
  const drml::NuisanceModel model = drml::NuisanceModel::fit(
      p.data, p.folds, p.settings.specs, p.settings.epsilon);
  p.pseudo = drml::compute_pseudo_outcomes(
      p.data, model.predict_out_of_fold(p.data, p.folds));
  return p;
}

int cmd_estimate(const json& config, const CommonArgs& args) {
  FittedPipeline p = run_pipeline(config, args);
  std::vector<drml::LateResult> results;
  results.push_back(drml::estimate_late_unadjusted(p.data, p.settings.alpha));
  results.push_back(drml::estimate_late_tsls(p.data, p.settings.alpha));
  drml::LateResult dr =
      drml::estimate_late_from_pseudo(p.pseudo, p.settings.alpha);
  dr.epsilon = p.settings.epsilon;
  dr.folds = p.settings.folds;
  results.push_back(dr);

  const std::uint64_t hash = config_hash(config, args);
  json records = json::array();
  for (const auto& r : results) records.push_back(drml::to_json(r));
  json summary;
  summary["version"] = drml::kVersion;
  summary["seed"] = p.settings.seed;
  summary["config"] = hash;
  summary["results"] = records;
  drml::write_text_file(out_path(args, "late.json"), summary.dump(2) + "\n");
  drml::write_text_file(out_path(args, "late.csv"),
                        drml::late_csv(results, p.settings.seed, hash));
  return 0;
}

int cmd_clate(const json& config, const CommonArgs& args) {
  FittedPipeline p = run_pipeline(config, args);
  const json block = config.value("clate", json::object());
  drml::ClateOptions options;
  options.modifier_columns =
      block.value("modifiers", std::vector<std::string>{});
  if (block.contains("second_stage")) {
    const json& ss = block.at("second_stage");
    if (!(ss.is_string() && ss.get<std::string>() == "cells")) {
      options.second_stage = parse_learner(ss, false);
    }
  }
  options.grid_points = block.value("grid_points", 50);
  options.bootstrap_replicates = block.value("bootstrap", 500);
  options.alpha = p.settings.alpha;
  options.seed = drml::derive_seed(p.settings.seed, 0x626f6f74ULL);
  options.threads = args.threads;
  const drml::ClateResult result =
      drml::estimate_clate(p.data, p.pseudo, options);

  const std::uint64_t hash = config_hash(config, args);
  drml::write_text_file(out_path(args, "clate.csv"),
                        drml::clate_csv(result, p.settings.seed, hash));
  json j = drml::to_json(result);
  j["version"] = drml::kVersion;
  j["seed"] = p.settings.seed;
  drml::write_text_file(out_path(args, "clate.json"), j.dump(2) + "\n");

  if (block.value("ite", false)) {
    drml::ClateOptions ite_options = options;
    ite_options.modifier_columns.clear();  // all covariates
    const drml::IteResult ite =
        drml::ite_distribution(p.data, p.pseudo, ite_options);
    json ij = drml::to_json(ite);
    ij["version"] = drml::kVersion;
    ij["seed"] = p.settings.seed;
    drml::write_text_file(out_path(args, "ite.json"), ij.dump(2) + "\n");
  }
  return 0;
}

int cmd_profile(const json& config, const CommonArgs& args) {
  FittedPipeline p = run_pipeline(config, args);
  const json block = config.value("profile", json::object());
  if (!block.contains("column")) {
    throw drml::input_error("profile config needs a \"column\"");
  }
  const std::string column = block.at("column").get<std::string>();
  const int idx = p.data.column_index(column);
  if (idx < 0) throw drml::input_error("unknown profile column: " + column);
  const std::vector<double> v =
      p.data.covariate_column(static_cast<std::size_t>(idx));
  const std::string type = block.value("type", std::string("discrete"));
  const std::uint64_t hash = config_hash(config, args);

  const drml::StrataShares shares = drml::strata_shares(p.pseudo);
  json shares_json = drml::to_json(shares);
  shares_json["version"] = drml::kVersion;
  shares_json["seed"] = p.settings.seed;
  drml::write_text_file(out_path(args, "strata_shares.json"),
                        shares_json.dump(2) + "\n");

  if (type == "discrete") {
    for (const drml::Stratum stratum :
         {drml::Stratum::complier, drml::Stratum::always_taker,
          drml::Stratum::never_taker}) {
      const drml::DiscreteProfile profile =
          drml::profile_discrete(p.pseudo, v, stratum, p.settings.alpha);
      drml::write_text_file(
          out_path(args, "profile_" + drml::stratum_name(stratum) + ".csv"),
          drml::discrete_profile_csv(profile, p.settings.seed, hash));
    }
  } else if (type == "continuous") {
    drml::DensitySpec spec;
    spec.bandwidth = block.value("bandwidth", 0.0);
    spec.grid_points = block.value("grid_points", 100);
    const std::string stratum_text =
        block.value("stratum", std::string("complier"));
    drml::Stratum stratum = drml::Stratum::complier;
    if (stratum_text == "always_taker") stratum = drml::Stratum::always_taker;
    else if (stratum_text == "never_taker") stratum = drml::Stratum::never_taker;
    else if (stratum_text != "complier") {
      throw drml::input_error("unknown stratum: " + stratum_text);
    }
    const drml::DensityProfile profile =
        drml::profile_density(p.pseudo, v, spec, stratum);
    drml::write_text_file(
        out_path(args, "profile_" + drml::stratum_name(stratum) + ".csv"),
        drml::density_profile_csv(profile, p.settings.seed, hash));
  } else {
    throw drml::input_error("profile type must be discrete or continuous");
  }
  return 0;
}

int cmd_sensitivity(const json& config, const CommonArgs& args) {
  const json block = config.value("sensitivity", json::object());
  double chi_hat = 0.0, delta_hat = 0.0;
  std::uint64_t seed = args.seed ? *args.seed : config.value("seed", 1ULL);
  if (block.contains("chi_hat") && block.contains("delta_hat")) {
    chi_hat = block.at("chi_hat").get<double>();
    delta_hat = block.at("delta_hat").get<double>();
  } else {
    FittedPipeline p = run_pipeline(config, args);
    const drml::LateResult dr =
        drml::estimate_late_from_pseudo(p.pseudo, p.settings.alpha);
    chi_hat = dr.chi_hat;
    delta_hat = dr.delta_hat;
    seed = p.settings.seed;
  }
  drml::SensitivityOptions options;
  options.delta1_points = block.value("delta1_points", 101);
  options.delta2_points = block.value("delta2_points", 161);
  options.delta2_min = block.value("delta2_min", -2.0);
  options.delta2_max = block.value("delta2_max", 2.0);
  const drml::SensitivitySurface surface =
      drml::sensitivity_surface(chi_hat, delta_hat, options);
  const std::uint64_t hash = config_hash(config, args);
  drml::write_text_file(out_path(args, "sensitivity_surface.csv"),
                        drml::sensitivity_surface_csv(surface, seed, hash));
  drml::write_text_file(out_path(args, "sensitivity_frontier.csv"),
                        drml::sensitivity_frontier_csv(surface, seed, hash));
  return 0;
}

int cmd_simulate(const json& config, const CommonArgs& args) {
  const json block = config.value("simulate", json::object());
  const int scenario_id = block.value("scenario", 1);
  const drml::ScenarioSpec spec = drml::ScenarioSpec::scenario(scenario_id);
  drml::ExperimentConfig experiment;
  experiment.n_list = block.value("n_list", std::vector<std::size_t>{1000});
  experiment.reps = block.value("reps", 500);
  experiment.folds = config.value("folds", 5);
  experiment.epsilon = config.value("epsilon", 0.01);
  experiment.alpha = args.alpha ? *args.alpha : config.value("alpha", 0.05);
  if (args.seed) {
    experiment.seed = *args.seed;
  } else if (config.contains("seed")) {
    experiment.seed = config.at("seed").get<std::uint64_t>();
  } else {
    throw drml::input_error("a seed is required (config or --seed)");
  }
  experiment.threads = args.threads;
  experiment.true_late_draws = block.value("true_late_draws", 10000000ULL);
  if (block.contains("estimators")) {
    experiment.estimators.clear();
    for (const auto& name : block.at("estimators")) {
      const std::string text = name.get<std::string>();
      if (text == "tsls") {
        experiment.estimators.push_back(drml::EstimatorKind::tsls);
      } else if (text == "drml_parametric") {
        experiment.estimators.push_back(drml::EstimatorKind::drml_parametric);
      } else if (text == "drml_nonparametric") {
        experiment.estimators.push_back(
            drml::EstimatorKind::drml_nonparametric);
      } else {
        throw drml::input_error("unknown estimator: " + text);
      }
    }
  }
  const drml::SimulationReport report = drml::run_experiment(spec, experiment);
  const std::uint64_t hash = config_hash(config, args);
  drml::write_text_file(
      out_path(args, "simulation.csv"),
      drml::simulation_csv(report, experiment.seed, hash));
  json j = drml::to_json(report);
  j["version"] = drml::kVersion;
  drml::write_text_file(out_path(args, "simulation.json"), j.dump(2) + "\n");
  return 0;
}

void write_error_record(const CommonArgs& args, const std::string& kind,
                        const std::string& message) {
  try {
    json j;
    j["error"] = kind;
    j["message"] = message;
    drml::write_text_file(out_path(args, "error.json"), j.dump(2) + "\n");
  } catch (...) {
    // stderr already carries the message
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust machine learning for instrumental variables"};
  app.set_version_flag("--version", drml::kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  std::uint64_t seed_arg = 0;
  double alpha_arg = 0.0;
  bool seed_set = false, alpha_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "JSON configuration file")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", seed_arg, "seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--alpha", alpha_arg, "interval level override")
        ->each([&](const std::string&) { alpha_set = true; });
    cmd->add_option("--threads", args.threads,
                    "worker threads (0 = all cores)");
  };

  CLI::App* estimate = app.add_subcommand(
      "estimate", "Unadjusted, TSLS and DRML effect estimates");
  CLI::App* clate = app.add_subcommand(
      "clate", "Conditional effects over modifier values");
  CLI::App* profile =
      app.add_subcommand("profile", "Principal-strata covariate profiles");
  CLI::App* sensitivity = app.add_subcommand(
      "sensitivity", "Defier sensitivity surface and sign frontier");
  CLI::App* simulate =
      app.add_subcommand("simulate", "Synthetic-scenario estimator comparison");
  for (CLI::App* cmd : {estimate, clate, profile, sensitivity, simulate}) {
    add_common(cmd);
  }

  CLI11_PARSE(app, argc, argv);
  if (seed_set) args.seed = seed_arg;
  if (alpha_set) args.alpha = alpha_arg;

  try {
    const json config = load_config(args.config_path);
    if (estimate->parsed()) return cmd_estimate(config, args);
    if (clate->parsed()) return cmd_clate(config, args);
    if (profile->parsed()) return cmd_profile(config, args);
    if (sensitivity->parsed()) return cmd_sensitivity(config, args);
    if (simulate->parsed()) return cmd_simulate(config, args);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const drml::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    write_error_record(args, "input", e.what());
    return 2;
  } catch (const drml::estimation_error& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    write_error_record(args, "estimation", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_record(args, "internal", e.what());
    return 1;
  }
}
