#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "drml/common.hpp"
#include "drml/rng.hpp"
#include "drml/serialize.hpp"
#include "drml/simulation.hpp"
#include "reference_values.hpp"
#include "test_util.hpp"

using drml::ScenarioSpec;

TEST_CASE("shipped scenario coefficients are pinned") {
  const ScenarioSpec s1 = ScenarioSpec::scenario(1);
  CHECK(s1.pi_x1 == 0.4);
  CHECK(s1.pi_x2 == -0.8);
  CHECK(s1.pi_step == 0.4);
  CHECK(s1.lam_intercept == -0.3);
  CHECK(s1.lam_x1 == -0.4);
  CHECK(s1.lam_x2 == -0.14);
  CHECK(s1.lam_z == 1.1);
  CHECK(s1.lam_x1z == -0.55);
  CHECK(s1.lam_step == -0.7);
  CHECK(s1.lam_u == 0.7);
  CHECK(s1.r_x1 == -4.0);
  CHECK(s1.r_x2 == 6.0);
  CHECK(s1.r_step == -4.0);
  CHECK(s1.s_intercept == 40.0);
  CHECK(s1.s_x1 == -7.0);
  CHECK(s1.s_x2 == -8.0);
  CHECK(s1.s_step == 10.0);
  CHECK(s1.outcome_noise_sd == 0.2);
  CHECK(s1.u_outcome_coef == 1.5);
  CHECK(s1.u_half_range == 1.5);
  CHECK(s1.x2_bernoulli_p == 0.3);

  const ScenarioSpec s2 = ScenarioSpec::scenario(2);
  CHECK(s2.pi_step == 0.0);
  CHECK(s2.lam_x1z == 0.0);
  CHECK(s2.lam_step == 0.0);
  CHECK(s2.r_step == 0.0);
  CHECK(s2.s_step == 0.0);
  CHECK(s2.lam_z == 1.1);

  const ScenarioSpec s3 = ScenarioSpec::scenario(3);
  CHECK(s3.pi_step == 0.4);
  CHECK(s3.lam_x1z == -0.55);
  CHECK(s3.lam_step == -0.7);
  CHECK(s3.r_step == 0.0);
  CHECK(s3.s_step == 0.0);

  CHECK_THROWS_AS(ScenarioSpec::scenario(4), drml::input_error);
}

TEST_CASE("potential treatments are monotone by construction") {
  for (int id : {1, 2, 3}) {
    const drml::GeneratedData gen =
        drml::generate_dataset(ScenarioSpec::scenario(id), 10000, 100 + id);
    for (std::size_t i = 0; i < gen.data.n; ++i) {
      CHECK(gen.latent.a1[i] >= gen.latent.a0[i]);
      const int expected =
          gen.data.z[i] == 1 ? gen.latent.a1[i] : gen.latent.a0[i];
      CHECK(gen.data.a[i] == expected);
    }
  }
}

TEST_CASE("instrument frequency matches the scenario propensity") {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  const std::size_t n = 1000000;
  const drml::GeneratedData gen = drml::generate_dataset(spec, n, 5);
  double z_rate = 0.0;
  for (const int z : gen.data.z) z_rate += z;
  z_rate /= static_cast<double>(n);
  // E[expit(0.4 X1 - 0.8 X2)] by Simpson over X1 and the two X2 values.
  auto inner = [&](double x2) {
    return test_util::simpson(
               [&](double x1) { return drml::expit(0.4 * x1 - 0.8 * x2); },
               -1.0, 1.0) /
           2.0;
  };
  const double expected = 0.7 * inner(0.0) + 0.3 * inner(1.0);
  CHECK(std::fabs(z_rate - expected) < 0.002);
}

TEST_CASE("the instrument is relevant in every scenario") {
  for (int id : {1, 2, 3}) {
    const drml::GeneratedData gen =
        drml::generate_dataset(ScenarioSpec::scenario(id), 100000, 200 + id);
    double a1 = 0.0, a0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < gen.data.n; ++i) {
      if (gen.data.z[i] == 1) {
        a1 += gen.data.a[i];
        ++n1;
      } else {
        a0 += gen.data.a[i];
        ++n0;
      }
    }
    CHECK(a1 / static_cast<double>(n1) > a0 / static_cast<double>(n0));
  }
}

TEST_CASE("binned treatment frequencies reproduce the treatment model") {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  const std::size_t n = 1000000;
  const drml::GeneratedData gen = drml::generate_dataset(spec, n, 6);
  struct Cell {
    double a_sum = 0.0, x1_sum = 0.0, u_sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::tuple<int, int, int, int>, Cell> cells;
  for (std::size_t i = 0; i < n; ++i) {
    const int x1_bin =
        std::min(4, static_cast<int>((gen.data.x(i, 0) + 1.0) / 0.4));
    const int u_bin =
        std::min(4, static_cast<int>((gen.latent.u[i] + 1.5) / 0.6));
    const auto key = std::make_tuple(
        x1_bin, static_cast<int>(gen.data.x(i, 1)), gen.data.z[i], u_bin);
    Cell& cell = cells[key];
    cell.a_sum += gen.data.a[i];
    cell.x1_sum += gen.data.x(i, 0);
    cell.u_sum += gen.latent.u[i];
    ++cell.count;
  }
  for (const auto& [key, cell] : cells) {
    if (cell.count < 4000) continue;
    const double n_cell = static_cast<double>(cell.count);
    const double predicted = spec.treatment_prob(
        cell.x1_sum / n_cell, static_cast<double>(std::get<1>(key)),
        std::get<2>(key), cell.u_sum / n_cell);
    CHECK(std::fabs(cell.a_sum / n_cell - predicted) < 0.02);
  }
}

TEST_CASE("constant conditional effect makes the complier mean exact") {
  ScenarioSpec spec = ScenarioSpec::scenario(2);
  spec.r_x1 = 0.0;
  spec.r_x2 = 0.0;
  spec.r_intercept = 1.75;
  const drml::TrueLate truth = drml::true_late(spec, 100000, 17);
  CHECK(truth.value == doctest::Approx(1.75).epsilon(1e-9));
  CHECK(truth.mc_se < 1e-3);
}

TEST_CASE("reference effects reproduce across disjoint seeds") {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  const drml::TrueLate a = drml::true_late(spec, 1000000, 31);
  const drml::TrueLate b = drml::true_late(spec, 1000000, 32);
  const double tolerance = 3.0 * std::sqrt(a.mc_se * a.mc_se + b.mc_se * b.mc_se);
  CHECK(std::fabs(a.value - b.value) < tolerance);
  CHECK(std::fabs(a.value - reference::kScenario2TrueLate) <
        3.0 * std::sqrt(a.mc_se * a.mc_se +
                        reference::kScenario2TrueLateSe *
                            reference::kScenario2TrueLateSe));
}

TEST_CASE("oracle nuisance estimation lands on the reference effect") {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  const drml::GeneratedData gen = drml::generate_dataset(spec, 10000, 88);
  const drml::FoldPlan folds = drml::make_folds(gen.data.n, 5, gen.data.z, 2);
  const drml::LateResult result = drml::estimate_late_from_pseudo(
      drml::compute_pseudo_outcomes(
          gen.data,
          drml::oracle_nuisances(spec).predict_out_of_fold(gen.data, folds)),
      0.05);
  CHECK(std::fabs(result.chi_hat - reference::kScenario2TrueLate) <=
        3.0 * result.se);
}

TEST_CASE("decreasing treatment models are rejected by the generator") {
  ScenarioSpec spec;
  spec.lam_z = -1.0;  // instrument suppresses treatment
  spec.r_intercept = 1.0;
  CHECK_THROWS_AS(drml::generate_dataset(spec, 100, 1),
                  drml::estimation_error);
}

TEST_CASE("experiment reports are bit-identical across runs and threads") {
  const ScenarioSpec spec = ScenarioSpec::scenario(2);
  drml::ExperimentConfig config;
  config.n_list = {400};
  config.reps = 4;
  config.estimators = {drml::EstimatorKind::tsls,
                       drml::EstimatorKind::drml_parametric};
  config.seed = 777;
  config.true_late_draws = 100000;
  config.threads = 1;
  const drml::SimulationReport serial = drml::run_experiment(spec, config);
  config.threads = 2;
  const drml::SimulationReport parallel = drml::run_experiment(spec, config);
  CHECK(drml::to_json(serial).dump() == drml::to_json(parallel).dump());
  const drml::SimulationReport again = drml::run_experiment(spec, config);
  CHECK(drml::to_json(again).dump() == drml::to_json(parallel).dump());

  for (const auto& cell : serial.cells) {
    CHECK(cell.rmse * cell.rmse >= cell.bias * cell.bias - 1e-15);
    CHECK(cell.reps_completed + cell.failures == config.reps);
  }
}

TEST_CASE("estimator failures are counted, not silently dropped") {
  // Near-irrelevant instrument: many replications trip the weak-instrument
  // floor inside the ratio estimator.
  ScenarioSpec spec;
  spec.lam_intercept = 0.0;
  spec.lam_z = 0.02;
  spec.lam_u = 0.3;
  spec.r_intercept = 1.0;
  spec.s_intercept = 1.0;
  drml::ExperimentConfig config;
  config.n_list = {300};
  config.reps = 10;
  config.estimators = {drml::EstimatorKind::drml_parametric};
  config.seed = 3;
  config.true_late_draws = 100000;
  const drml::SimulationReport report = drml::run_experiment(spec, config);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].failures > 0);
  CHECK(report.cells[0].reps_completed + report.cells[0].failures == 10);
}
