// Acceptance suite: one verification criterion per section, each printing a
// single [PASS]/[FAIL] line with the measured quantities. Run with a
// criterion number to execute one section, or with no arguments for all.

#include <sys/wait.h>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "drml/clate.hpp"
#include "drml/common.hpp"
#include "drml/influence.hpp"
#include "drml/late.hpp"
#include "drml/profiling.hpp"
#include "drml/rng.hpp"
#include "drml/sensitivity.hpp"
#include "drml/serialize.hpp"
#include "drml/simulation.hpp"
#include "reference_values.hpp"

#ifndef ACCEPTANCE_CLI_PATH
#define ACCEPTANCE_CLI_PATH ""
#endif
#ifndef ACCEPTANCE_ROOT
#define ACCEPTANCE_ROOT "."
#endif

namespace {

using drml::EstimatorKind;
using drml::ScenarioSpec;

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

const drml::SimulationCell& cell_for(const drml::SimulationReport& report,
                                     EstimatorKind estimator, std::size_t n) {
  for (const auto& cell : report.cells) {
    if (cell.estimator == estimator && cell.n == n) return cell;
  }
  throw std::runtime_error("missing simulation cell");
}

// ---------------------------------------------------------------------------

void criterion_1() {
  drml::Rng rng(101);
  double max_partition_gap = 0.0;
  double max_centering_gap = 0.0;
  for (int dataset = 0; dataset < 100; ++dataset) {
    const std::size_t n = 50 + static_cast<std::size_t>(rng.below(400));
    drml::PseudoOutcomes pseudo;
    pseudo.gamma_dot.resize(n);
    pseudo.delta_dot.resize(n);
    pseudo.at_dot.resize(n);
    pseudo.nt_dot.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = rng.normal() * 3.0;
      const double a = rng.bernoulli(0.5) ? 1.0 : 0.0;
      const int z = rng.bernoulli(0.5) ? 1 : 0;
      const double mu0 = rng.normal();
      const double mu1 = rng.normal();
      const double lam0 = rng.uniform01();
      const double lam1 = rng.uniform01();
      const double pi1 = rng.uniform(0.01, 0.99);
      pseudo.gamma_dot[i] = drml::gamma_dot_point(y, z, mu0, mu1, pi1);
      pseudo.delta_dot[i] = drml::delta_dot_point(a, z, lam0, lam1, pi1);
      const drml::StrataDot strata =
          drml::strata_dot_point(a, z, lam0, lam1, pi1);
      pseudo.at_dot[i] = strata.at_dot;
      pseudo.nt_dot[i] = strata.nt_dot;
      max_partition_gap = std::max(
          max_partition_gap, std::fabs(pseudo.delta_dot[i] + strata.at_dot +
                                       strata.nt_dot - 1.0));
    }
    const double chi =
        drml::mean(pseudo.gamma_dot) / drml::mean(pseudo.delta_dot);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += pseudo.gamma_dot[i] - chi * pseudo.delta_dot[i];
    }
    max_centering_gap =
        std::max(max_centering_gap, std::fabs(acc / static_cast<double>(n)));
  }
  const bool pass = max_partition_gap <= 1e-10 && max_centering_gap <= 1e-10;
  report(1, pass,
         fmt("influence identities on 100 random datasets: max partition gap "
             "%.2e, max centering gap %.2e (tolerance 1e-10)",
             max_partition_gap, max_centering_gap));
}

void criterion_2() {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  const drml::NuisanceModel oracle = drml::oracle_nuisances(spec);
  const int reps = 100;
  const std::size_t n = 10000;
  std::vector<double> estimates;
  estimates.reserve(reps);
  for (int rep = 0; rep < reps; ++rep) {
    const drml::GeneratedData gen =
        drml::generate_dataset(spec, n, drml::derive_seed(2101, rep));
    const drml::FoldPlan folds =
        drml::make_folds(n, 5, gen.data.z, drml::derive_seed(2102, rep));
    const drml::LateResult result = drml::estimate_late_from_pseudo(
        drml::compute_pseudo_outcomes(
            gen.data, oracle.predict_out_of_fold(gen.data, folds)),
        0.05);
    estimates.push_back(result.chi_hat);
  }
  const double mean_estimate = drml::mean(estimates);
  const double se_mean =
      drml::sample_sd(estimates) / std::sqrt(static_cast<double>(reps));
  const double tolerance =
      3.0 * std::sqrt(se_mean * se_mean + reference::kScenario2TrueLateSe *
                                              reference::kScenario2TrueLateSe);
  const double gap = std::fabs(mean_estimate - reference::kScenario2TrueLate);
  report(2, gap <= tolerance,
         fmt("oracle-nuisance mean over %d reps (n=%zu) = %.4f vs reference "
             "%.4f: gap %.4f <= 3SE %.4f",
             reps, n, mean_estimate, reference::kScenario2TrueLate, gap,
             tolerance));
}

void criterion_3() {
  const ScenarioSpec spec = ScenarioSpec::scenario(1);
  drml::ExperimentConfig config;
  config.n_list = {5000};
  config.reps = 500;
  config.seed = 31415;
  config.threads = 0;
  const drml::SimulationReport sim = drml::run_experiment(spec, config);
  const double b_tsls =
      std::fabs(cell_for(sim, EstimatorKind::tsls, 5000).bias);
  const double b_par =
      std::fabs(cell_for(sim, EstimatorKind::drml_parametric, 5000).bias);
  const double b_np =
      std::fabs(cell_for(sim, EstimatorKind::drml_nonparametric, 5000).bias);
  const bool ratio_ok = b_tsls >= 1.5 * b_np;
  const bool between_ok = b_np <= b_par && b_par <= b_tsls;
  report(3, ratio_ok && between_ok,
         fmt("scenario 1 (n=5000, 500 reps): |bias| tsls=%.4f parametric=%.4f "
             "nonparametric=%.4f; tsls >= 1.5x np %s; parametric between %s",
             b_tsls, b_par, b_np, ratio_ok ? "yes" : "NO",
             between_ok ? "yes" : "NO"));
}

void criterion_4() {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  drml::ExperimentConfig config;
  config.n_list = {1000, 5000};
  config.reps = 500;
  config.seed = 27182;
  config.threads = 0;
  const drml::SimulationReport sim = drml::run_experiment(spec, config);
  const double tsls_small =
      std::fabs(cell_for(sim, EstimatorKind::tsls, 1000).bias);
  const double tsls_large =
      std::fabs(cell_for(sim, EstimatorKind::tsls, 5000).bias);
  const double np_small =
      std::fabs(cell_for(sim, EstimatorKind::drml_nonparametric, 1000).bias);
  const double np_large =
      std::fabs(cell_for(sim, EstimatorKind::drml_nonparametric, 5000).bias);
  const bool tsls_persists = tsls_large >= 0.8 * tsls_small;
  const bool np_shrinks = np_large <= 0.5 * np_small;
  report(4, tsls_persists && np_shrinks,
         fmt("scenario 2 (500 reps): |bias(tsls)| %.4f->%.4f (persistence %s); "
             "|bias(np)| %.4f->%.4f (halving %s)",
             tsls_small, tsls_large, tsls_persists ? "yes" : "NO", np_small,
             np_large, np_shrinks ? "yes" : "NO"));
}

void criterion_5() {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  drml::ExperimentConfig config;
  config.n_list = {2000};
  config.reps = 500;
  config.estimators = {EstimatorKind::drml_nonparametric};
  config.seed = 16180;
  config.threads = 0;
  const drml::SimulationReport sim = drml::run_experiment(spec, config);
  const drml::SimulationCell& cell =
      cell_for(sim, EstimatorKind::drml_nonparametric, 2000);
  const bool pass = cell.coverage >= 0.90 && cell.coverage <= 0.98 &&
                    cell.failures == 0;
  report(5, pass,
         fmt("scenario 2 nonparametric coverage at n=2000 over 500 reps: "
             "%.3f (target [0.90, 0.98], failures %d)",
             cell.coverage, cell.failures));
}

void criterion_6() {
  bool pass_a, pass_b, pass_c;
  double reduction_gap, sup_gap, mse_small, mse_large;
  // (a) constant second stage reduces to the marginal estimate exactly.
  {
    const ScenarioSpec spec = ScenarioSpec::scenario(2);
    const drml::GeneratedData gen = drml::generate_dataset(spec, 4000, 61);
    const drml::FoldPlan folds = drml::make_folds(4000, 5, gen.data.z, 62);
    const drml::PseudoOutcomes pseudo = drml::compute_pseudo_outcomes(
        gen.data,
        drml::oracle_nuisances(spec).predict_out_of_fold(gen.data, folds));
    const drml::LateResult marginal =
        drml::estimate_late_from_pseudo(pseudo, 0.05);
    drml::ClateOptions options;
    options.second_stage = drml::LearnerSpec::linear();
    options.bootstrap_replicates = 0;
    options.seed = 63;
    const drml::ClateResult clate =
        drml::estimate_clate(gen.data, pseudo, options);
    reduction_gap = std::fabs(clate.chi_v[0] - marginal.chi_hat);
    pass_a = reduction_gap <= 1e-12 * std::max(1.0, std::fabs(marginal.chi_hat));
  }
  // (b) constant-effect process, linear second stage, n = 1e4.
  {
    ScenarioSpec spec;
    spec.r_intercept = 2.0;
    spec.lam_intercept = -2.2;
    spec.lam_z = 4.4;
    spec.lam_x1 = 0.3;
    spec.lam_u = 0.3;
    spec.s_intercept = 40.0;
    spec.s_x1 = -7.0;
    spec.s_x2 = -8.0;
    const drml::GeneratedData gen = drml::generate_dataset(spec, 10000, 64);
    const drml::FoldPlan folds = drml::make_folds(10000, 5, gen.data.z, 65);
    const drml::PseudoOutcomes pseudo = drml::compute_pseudo_outcomes(
        gen.data,
        drml::oracle_nuisances(spec).predict_out_of_fold(gen.data, folds));
    drml::ClateOptions options;
    options.modifier_columns = {"x1"};
    options.second_stage = drml::LearnerSpec::linear();
    options.bootstrap_replicates = 0;
    options.seed = 66;
    const drml::ClateResult clate =
        drml::estimate_clate(gen.data, pseudo, options);
    sup_gap = 0.0;
    for (std::size_t g = 0; g < clate.v_grid.rows(); ++g) {
      sup_gap = std::max(sup_gap, std::fabs(clate.chi_v[g] - 2.0));
    }
    pass_b = sup_gap < 0.1;
  }
  // (c) scenario 1 grid MSE against the conditional-effect truth shrinks
  // from n=2000 to n=10000.
  {
    const ScenarioSpec spec = ScenarioSpec::scenario(1);
    auto grid_mse = [&](std::size_t n, std::uint64_t seed) {
      const drml::GeneratedData gen = drml::generate_dataset(spec, n, seed);
      const drml::FoldPlan folds = drml::make_folds(
          n, 5, gen.data.z, drml::derive_seed(seed, 1));
      const drml::NuisanceModel model = drml::NuisanceModel::fit(
          gen.data, folds, drml::NuisanceSpecs::nonparametric(false), 0.01);
      const drml::PseudoOutcomes pseudo = drml::compute_pseudo_outcomes(
          gen.data, model.predict_out_of_fold(gen.data, folds));
      drml::ClateOptions options;
      options.modifier_columns = {"x1", "x2"};
      options.second_stage = drml::LearnerSpec::tree_spec(6, 20, true);
      options.bootstrap_replicates = 0;
      options.seed = drml::derive_seed(seed, 2);
      const drml::ClateResult clate =
          drml::estimate_clate(gen.data, pseudo, options);
      double mse = 0.0;
      std::size_t used = 0;
      for (std::size_t g = 0; g < clate.v_grid.rows(); ++g) {
        if (clate.flagged[g]) continue;
        const double truth = spec.r(clate.v_grid(g, 0), clate.v_grid(g, 1));
        mse += (clate.chi_v[g] - truth) * (clate.chi_v[g] - truth);
        ++used;
      }
      return mse / static_cast<double>(used);
    };
    mse_small = 0.0;
    mse_large = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      mse_small += grid_mse(2000, drml::derive_seed(67, rep));
      mse_large += grid_mse(10000, drml::derive_seed(68, rep));
    }
    mse_small /= 3.0;
    mse_large /= 3.0;
    pass_c = mse_large < mse_small;
  }
  report(6, pass_a && pass_b && pass_c,
         fmt("conditional effects: (a) reduction gap %.2e; (b) constant-effect "
             "sup error %.4f (< 0.1 %s); (c) grid MSE %.4f @2000 -> %.4f "
             "@10000 (%s)",
             reduction_gap, sup_gap, pass_b ? "yes" : "NO", mse_small,
             mse_large, pass_c ? "decreasing" : "NOT decreasing"));
}

void criterion_7() {
  bool pass_sums, pass_kde, pass_quadrature;
  double share_gap, partition_gap, profile_gap, kde_err, kde_integral;
  {
    drml::Rng rng(71);
    const std::size_t n = 4000;
    drml::PseudoOutcomes pseudo;
    pseudo.gamma_dot.resize(n);
    pseudo.delta_dot.resize(n);
    pseudo.at_dot.resize(n);
    pseudo.nt_dot.resize(n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rng.bernoulli(0.6) ? 1.0 : 0.0;
      const int z = rng.bernoulli(0.5) ? 1 : 0;
      const double lam0 = rng.uniform(0.05, 0.4);
      const double lam1 = rng.uniform(0.5, 0.95);
      const double pi1 = rng.uniform(0.2, 0.8);
      pseudo.gamma_dot[i] = rng.normal();
      pseudo.delta_dot[i] = drml::delta_dot_point(a, z, lam0, lam1, pi1);
      const drml::StrataDot strata =
          drml::strata_dot_point(a, z, lam0, lam1, pi1);
      pseudo.at_dot[i] = strata.at_dot;
      pseudo.nt_dot[i] = strata.nt_dot;
      v[i] = rng.bernoulli(0.35) ? 1.0 : 0.0;
    }
    const drml::StrataShares shares = drml::strata_shares(pseudo);
    share_gap = std::fabs(shares.p_co + shares.p_at + shares.p_nt - 1.0);
    partition_gap = 0.0;
    for (const drml::Stratum stratum :
         {drml::Stratum::complier, drml::Stratum::always_taker,
          drml::Stratum::never_taker}) {
      const drml::DiscreteProfile profile =
          drml::profile_discrete(pseudo, v, stratum);
      double total = 0.0;
      for (const auto& cell : profile.cells) total += cell.estimate;
      partition_gap = std::max(partition_gap, std::fabs(total - 1.0));
    }
    pass_sums = share_gap <= 1e-12 && partition_gap <= 1e-12;
  }
  {
    // Compliance rising with the binary covariate; analytic target by
    // Simpson quadrature over the confounder.
    ScenarioSpec spec;
    spec.lam_intercept = -2.5;
    spec.lam_z = 1.6;
    spec.lam_x2 = 2.2;
    spec.lam_u = 0.4;
    spec.r_intercept = 1.0;
    const std::size_t n = 10000;
    const drml::GeneratedData gen = drml::generate_dataset(spec, n, 72);
    const drml::FoldPlan folds = drml::make_folds(n, 2, gen.data.z, 73);
    const drml::PseudoOutcomes pseudo = drml::compute_pseudo_outcomes(
        gen.data,
        drml::oracle_nuisances(spec).predict_out_of_fold(gen.data, folds));
    const drml::DiscreteProfile profile = drml::profile_discrete(
        pseudo, gen.data.covariate_column(1), drml::Stratum::complier);
    auto simpson = [](const std::function<double(double)>& f, double lo,
                      double hi) {
      const int m = 2000;
      const double h = (hi - lo) / m;
      double acc = f(lo) + f(hi);
      for (int k = 1; k < m; ++k) acc += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
      return acc * h / 3.0;
    };
    auto delta_bar = [&](double x2) {
      return simpson(
                 [&](double u) {
                   return spec.treatment_prob(0.0, x2, 1, u) -
                          spec.treatment_prob(0.0, x2, 0, u);
                 },
                 -1.5, 1.5) /
             3.0;
    };
    const double numer = 0.3 * delta_bar(1.0);
    const double truth = numer / (numer + 0.7 * delta_bar(0.0));
    const drml::DiscreteProfileCell& cell = profile.cells[1];
    profile_gap = std::fabs(cell.estimate - truth);
    pass_quadrature = profile_gap <= 3.0 * cell.se && cell.estimate > 0.3;
  }
  {
    // Covariate independent of compliance: the weighted KDE recovers the
    // standard normal density. A strong instrument keeps the weight noise
    // well below the tolerance.
    ScenarioSpec spec;
    spec.r_intercept = 1.0;
    spec.lam_intercept = -2.2;
    spec.lam_z = 4.4;
    spec.lam_x1 = 0.3;
    spec.lam_u = 0.3;
    spec.s_intercept = 2.0;
    const std::size_t n = 10000;
    const drml::GeneratedData gen = drml::generate_dataset(spec, n, 74);
    const drml::FoldPlan folds = drml::make_folds(n, 2, gen.data.z, 75);
    const drml::PseudoOutcomes pseudo = drml::compute_pseudo_outcomes(
        gen.data,
        drml::oracle_nuisances(spec).predict_out_of_fold(gen.data, folds));
    drml::Rng rng(76);
    std::vector<double> v(n);
    for (auto& value : v) value = rng.normal();
    drml::DensitySpec density_spec;
    density_spec.grid_points = 101;
    const drml::DensityProfile profile =
        drml::profile_density(pseudo, v, density_spec, drml::Stratum::complier);
    kde_err = 0.0;
    for (std::size_t g = 0; g < profile.grid.size(); ++g) {
      const double x = profile.grid[g];
      if (x < -2.0 || x > 2.0) continue;
      const double target =
          std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
      kde_err = std::max(kde_err, std::fabs(profile.density[g] - target));
    }
    kde_integral = 0.0;
    for (std::size_t g = 0; g + 1 < profile.grid.size(); ++g) {
      kde_integral += 0.5 * (profile.density[g] + profile.density[g + 1]) *
                      (profile.grid[g + 1] - profile.grid[g]);
    }
    pass_kde = kde_err < 0.05 && kde_integral >= 0.97 && kde_integral <= 1.03;
  }
  report(7, pass_sums && pass_quadrature && pass_kde,
         fmt("profiling: share sum gap %.2e, partition gap %.2e; analytic "
             "profile gap %.4f (3SE check %s); KDE max error %.4f, integral "
             "%.4f",
             share_gap, partition_gap, profile_gap,
             pass_quadrature ? "yes" : "NO", kde_err, kde_integral));
}

void criterion_8() {
  const double chi = -0.04, delta = 0.5;
  bool exact = true;
  for (double d2 : {-2.0, -1.0, 0.0, 0.5, 2.0}) {
    exact = exact && drml::xi(chi, delta, 0.0, d2) == chi;
  }
  for (double d1 : {0.0, 0.25, 1.0}) {
    exact = exact && drml::xi(chi, delta, d1, 0.0) == chi;
  }
  const bool worked_case = drml::xi(chi, delta, 0.25, 0.08) == 0.0;
  const drml::SensitivitySurface surface = drml::sensitivity_surface(chi, delta);
  double frontier_gap = 0.0;
  for (const auto& [d1, d2] : surface.frontier) {
    frontier_gap =
        std::max(frontier_gap, std::fabs(drml::xi(chi, delta, d1, d2)));
  }
  const bool pass = exact && worked_case && frontier_gap <= 1e-12 &&
                    !surface.frontier.empty();
  report(8, pass,
         fmt("sensitivity: boundary reductions exact %s; worked case zero %s; "
             "max |xi| on frontier %.2e (tolerance 1e-12)",
             exact ? "yes" : "NO", worked_case ? "yes" : "NO", frontier_gap));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void criterion_9() {
  const std::string cli = ACCEPTANCE_CLI_PATH;
  const std::string root = ACCEPTANCE_ROOT;
  const std::filesystem::path work =
      std::filesystem::temp_directory_path() / "drml_acceptance_cli";
  std::filesystem::remove_all(work);
  std::filesystem::create_directories(work);

  struct Run {
    std::string subcommand;
    std::string config;
  };
  const std::vector<Run> runs = {
      {"estimate", root + "/configs/synthetic_estimate.json"},
      {"clate", root + "/configs/synthetic_estimate.json"},
      {"profile", root + "/configs/synthetic_estimate.json"},
      {"profile", root + "/configs/synthetic_profile_age.json"},
      {"sensitivity", root + "/configs/synthetic_estimate.json"},
      {"simulate", root + "/configs/simulate_smoke.json"},
  };
  bool identical = true;
  std::string mismatch;
  for (const Run& run : runs) {
    static int run_index = 0;
    ++run_index;
    const std::string tag = run.subcommand + std::to_string(run_index);
    const std::filesystem::path out1 = work / (tag + "_t1");
    const std::filesystem::path out2 = work / (tag + "_t2");
    for (const auto& [out, threads] :
         {std::pair{out1, 1}, std::pair{out2, 2}}) {
      const std::string command = cli + " " + run.subcommand + " --config " +
                                  run.config + " --out " + out.string() +
                                  " --threads " + std::to_string(threads) +
                                  " > /dev/null 2>&1";
      if (std::system(command.c_str()) != 0) {
        identical = false;
        mismatch = run.subcommand + " exited nonzero";
      }
    }
    for (const auto& entry : std::filesystem::directory_iterator(out1)) {
      const auto other = out2 / entry.path().filename();
      if (!std::filesystem::exists(other) ||
          read_file(entry.path()) != read_file(other)) {
        identical = false;
        mismatch = run.subcommand + "/" + entry.path().filename().string();
      }
    }
  }

  // Shapes promised by the command surface: three estimate records and the
  // full sensitivity grid.
  auto body_lines = [&](const std::filesystem::path& path) {
    std::istringstream lines(read_file(path));
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
      if (!line.empty() && line[0] != '#') ++count;
    }
    return count;
  };
  const bool shapes_ok =
      body_lines(work / "estimate1_t1" / "late.csv") == 4 &&
      body_lines(work / "sensitivity5_t1" / "sensitivity_surface.csv") ==
          101 * 161 + 1;

  // Exit codes and interval monotonicity through the CLI surface.
  const std::string missing_cmd =
      cli + " estimate --config /nonexistent.json --out " +
      (work / "missing").string() + " > /dev/null 2>&1";
  const int missing_status = std::system(missing_cmd.c_str());
  const bool missing_ok =
      WIFEXITED(missing_status) && WEXITSTATUS(missing_status) == 2;

  auto ci_width = [&](const std::string& alpha,
                      const std::filesystem::path& out) {
    const std::string command = cli + " estimate --config " + runs[0].config +
                                " --alpha " + alpha + " --out " + out.string() +
                                " > /dev/null 2>&1";
    if (std::system(command.c_str()) != 0) return -1.0;
    const std::string body = read_file(out / "late.csv");
    // last line is the drml record: ...,se,ci_lo,ci_hi,alpha,n
    std::istringstream lines(body);
    std::string line, last;
    while (std::getline(lines, line)) {
      if (!line.empty() && line[0] != '#') last = line;
    }
    std::vector<std::string> fields;
    std::istringstream split(last);
    std::string field;
    while (std::getline(split, field, ',')) fields.push_back(field);
    return std::stod(fields[6]) - std::stod(fields[5]);
  };
  const double wide = ci_width("0.05", work / "alpha05");
  const double narrow = ci_width("0.10", work / "alpha10");
  const bool alpha_ok = wide > 0.0 && narrow > 0.0 && narrow < wide;

  report(9, identical && missing_ok && alpha_ok && shapes_ok,
         fmt("CLI determinism across thread counts: %s%s; output shapes: %s; "
             "missing input exits 2: %s; alpha=0.10 interval narrower than "
             "alpha=0.05: %s (%.4f < %.4f)",
             identical ? "byte-identical" : "MISMATCH ",
             identical ? "" : mismatch.c_str(), shapes_ok ? "yes" : "NO",
             missing_ok ? "yes" : "NO", alpha_ok ? "yes" : "NO", narrow,
             wide));
}

void criterion_10() {
  // Exact identification on a noiseless linear system.
  drml::Rng rng(1001);
  const std::size_t n = 300;
  drml::Matrix x(n, 1);
  std::vector<double> y(n);
  std::vector<int> a(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-1.0, 1.0);
    z[i] = rng.bernoulli(0.5) ? 1 : 0;
    a[i] = z[i];
    y[i] = 2.0 * a[i] + 3.0 * x(i, 0);
  }
  const drml::LateResult exact =
      drml::estimate_late_tsls(drml::make_dataset(y, a, z, x), 0.05);
  const double exact_gap = std::fabs(exact.chi_hat - 2.0);

  // No-covariate equivalence with the arm-mean ratio on 50 random datasets.
  double equiv_gap = 0.0;
  for (int dataset = 0; dataset < 50; ++dataset) {
    drml::Rng local(drml::derive_seed(1002, dataset));
    const std::size_t m = 80 + local.below(200);
    std::vector<double> yy(m);
    std::vector<int> aa(m), zz(m);
    for (std::size_t i = 0; i < m; ++i) {
      zz[i] = local.bernoulli(0.5) ? 1 : 0;
      aa[i] = local.bernoulli(zz[i] == 1 ? 0.8 : 0.25) ? 1 : 0;
      yy[i] = 0.6 * aa[i] + local.normal();
    }
    const drml::IvDataset data =
        drml::make_dataset(yy, aa, zz, drml::Matrix(m, 0));
    const drml::LateResult tsls = drml::estimate_late_tsls(data, 0.05);
    const drml::LateResult wald = drml::estimate_late_unadjusted(data, 0.05);
    equiv_gap = std::max(equiv_gap, std::fabs(tsls.chi_hat - wald.chi_hat));
  }
  const bool pass = exact_gap <= 1e-8 && equiv_gap <= 1e-10;
  report(10, pass,
         fmt("TSLS: exact-identification gap %.2e (tol 1e-8); max gap to the "
             "arm-mean ratio over 50 datasets %.2e (tol 1e-10)",
             exact_gap, equiv_gap));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<void()>> criteria = {
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  if (argc > 1) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "criterion number must be 1..%zu\n", criteria.size());
      return 2;
    }
    criteria[static_cast<std::size_t>(k - 1)]();
  } else {
    for (const auto& criterion : criteria) criterion();
  }
  return failures == 0 ? 0 : 1;
}
