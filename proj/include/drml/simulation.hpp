#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drml/dataset.hpp"
#include "drml/late.hpp"
#include "drml/nuisance.hpp"

namespace drml {

// Synthetic data-generating process: X1 ~ Unif(-1,1), X2 ~ Bernoulli(0.3),
// U ~ Unif(-u_half_range, u_half_range) mutually independent;
// Z ~ Bernoulli(pi0(X)), treatment from treatment_prob with potential
// treatments generated monotonically, Y ~ N(r(X) A + s(X) + c U, sd^2).
struct ScenarioSpec {
  int id = 0;  // 1..3 shipped, 0 custom

  // pi0(x, 1) = expit(pi_intercept + pi_x1 x1 + pi_x2 x2 + pi_step 1(x1>0))
  double pi_intercept = 0.0, pi_x1 = 0.0, pi_x2 = 0.0, pi_step = 0.0;
  // treatment_prob(x, z, u) = expit(lam_intercept + lam_x1 x1 + lam_x2 x2
  //                                + lam_z z + lam_x1z x1 z
  //                                + lam_step 1(x1>0) + lam_u u)
  double lam_intercept = 0.0, lam_x1 = 0.0, lam_x2 = 0.0, lam_z = 0.0,
         lam_x1z = 0.0, lam_step = 0.0, lam_u = 0.0;
  // r(x) = r_intercept + r_x1 x1 + r_x2 (x2 - 0.3) + r_step (1(x1>0) - 0.5)
  double r_intercept = 0.0, r_x1 = 0.0, r_x2 = 0.0, r_step = 0.0;
  // s(x) = s_intercept + s_x1 x1 + s_x2 x2 + s_step 1(x1>0)
  double s_intercept = 0.0, s_x1 = 0.0, s_x2 = 0.0, s_step = 0.0;

  double outcome_noise_sd = 0.2;
  double u_outcome_coef = 1.5;
  double u_half_range = 1.5;
  double x2_bernoulli_p = 0.3;

  double pi0(double x1, double x2) const;
  double treatment_prob(double x1, double x2, int z, double u) const;
  double r(double x1, double x2) const;
  double s(double x1, double x2) const;

  static ScenarioSpec scenario(int id);
};

struct LatentDraws {
  std::vector<int> a0, a1;  // potential treatments, a1 >= a0 by construction
  std::vector<double> u;
};

struct GeneratedData {
  IvDataset data;
  LatentDraws latent;
};

GeneratedData generate_dataset(const ScenarioSpec& spec, std::size_t n,
                               std::uint64_t seed);

struct TrueLate {
  double value = 0.0;
  double mc_se = 0.0;
  std::size_t draws = 0;
  std::size_t compliers = 0;
};

// Monte Carlo mean of r(X) among complier draws.
TrueLate true_late(const ScenarioSpec& spec, std::size_t draws,
                   std::uint64_t seed);

// E[A | X, Z=z] with the unobserved confounder integrated out by 64-point
// Gauss-Legendre quadrature.
double marginal_lambda(const ScenarioSpec& spec, double x1, double x2, int z);
// E[Y | X, Z=z] = r(x) marginal_lambda + s(x); the confounder is mean zero.
double marginal_mu(const ScenarioSpec& spec, double x1, double x2, int z);

// Closed-form nuisances for the scenario, for oracle-injection runs.
NuisanceModel oracle_nuisances(const ScenarioSpec& spec, double epsilon = 0.01);

enum class EstimatorKind { tsls, drml_parametric, drml_nonparametric };

std::string estimator_name(EstimatorKind kind);

struct ExperimentConfig {
  std::vector<std::size_t> n_list;
  int reps = 500;
  std::vector<EstimatorKind> estimators = {EstimatorKind::tsls,
                                           EstimatorKind::drml_parametric,
                                           EstimatorKind::drml_nonparametric};
  int folds = 5;
  double epsilon = 0.01;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;
  std::size_t true_late_draws = 10000000;
};

struct SimulationCell {
  EstimatorKind estimator;
  std::size_t n = 0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_ci_width = 0.0;
  int reps_completed = 0;
  int failures = 0;  // excluded with a count, never silently dropped
};

struct SimulationReport {
  int scenario_id = 0;
  TrueLate truth;
  std::uint64_t seed = 0;
  int reps = 0;
  std::vector<SimulationCell> cells;
};

// Replications run on counter-based seed streams, so serial and parallel
// schedules produce identical reports.
SimulationReport run_experiment(const ScenarioSpec& spec,
                                const ExperimentConfig& config);

}  // namespace drml
