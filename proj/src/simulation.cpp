#include "drml/simulation.hpp"

#include <cmath>

#include "drml/common.hpp"
#include "drml/parallel.hpp"
#include "drml/rng.hpp"

namespace drml {

double ScenarioSpec::pi0(double x1, double x2) const {
  return expit(pi_intercept + pi_x1 * x1 + pi_x2 * x2 +
               pi_step * (x1 > 0.0 ? 1.0 : 0.0));
}

double ScenarioSpec::treatment_prob(double x1, double x2, int z,
                                   double u) const {
  const double zd = static_cast<double>(z);
  return expit(lam_intercept + lam_x1 * x1 + lam_x2 * x2 + lam_z * zd +
               lam_x1z * x1 * zd + lam_step * (x1 > 0.0 ? 1.0 : 0.0) +
               lam_u * u);
}

double ScenarioSpec::r(double x1, double x2) const {
  return r_intercept + r_x1 * x1 + r_x2 * (x2 - 0.3) +
         r_step * ((x1 > 0.0 ? 1.0 : 0.0) - 0.5);
}

double ScenarioSpec::s(double x1, double x2) const {
  return s_intercept + s_x1 * x1 + s_x2 * x2 +
         s_step * (x1 > 0.0 ? 1.0 : 0.0);
}

ScenarioSpec ScenarioSpec::scenario(int id) {
  ScenarioSpec spec;
  spec.id = id;
  spec.pi_x1 = 0.4;
  spec.pi_x2 = -0.8;
  spec.lam_intercept = -0.3;
  spec.lam_x1 = -0.4;
  spec.lam_x2 = -0.14;
  spec.lam_z = 1.1;
  spec.lam_u = 0.7;
  spec.r_x1 = -4.0;
  spec.r_x2 = 6.0;
  spec.s_intercept = 40.0;
  spec.s_x1 = -7.0;
  spec.s_x2 = -8.0;
  switch (id) {
    case 1:
      spec.pi_step = 0.4;
      spec.lam_x1z = -0.55;
      spec.lam_step = -0.7;
      spec.r_step = -4.0;
      spec.s_step = 10.0;
      break;
    case 2:
      break;
    case 3:
      spec.pi_step = 0.4;
      spec.lam_x1z = -0.55;
      spec.lam_step = -0.7;
      break;
    default:
      throw input_error("shipped scenarios are 1, 2, and 3");
  }
  return spec;
}

GeneratedData generate_dataset(const ScenarioSpec& spec, std::size_t n,
                               std::uint64_t seed) {
  if (n == 0) throw input_error("cannot generate an empty dataset");
  Rng rng(seed);
  GeneratedData out;
  out.data.n = n;
  out.data.y.resize(n);
  out.data.a.resize(n);
  out.data.z.resize(n);
  out.data.x = Matrix(n, 2);
  out.data.column_names = {"x1", "x2"};
  out.latent.a0.resize(n);
  out.latent.a1.resize(n);
  out.latent.u.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.bernoulli(spec.x2_bernoulli_p) ? 1.0 : 0.0;
    const double u = rng.uniform(-spec.u_half_range, spec.u_half_range);
    const int z = rng.bernoulli(spec.pi0(x1, x2)) ? 1 : 0;
    const double lam0 = spec.treatment_prob(x1, x2, 0, u);
    const double lam1 = spec.treatment_prob(x1, x2, 1, u);
    if (lam1 < lam0) {
      throw estimation_error(
          "treatment model decreases in the instrument; complier probability "
          "would be negative");
    }
    const int a0 = rng.bernoulli(lam0) ? 1 : 0;
    int a1 = a0;
    if (a0 == 0) {
      const double p_comply = (lam1 - lam0) / (1.0 - lam0);
      a1 = rng.bernoulli(p_comply) ? 1 : 0;
    }
    const int a = z == 1 ? a1 : a0;
    const double y = spec.r(x1, x2) * static_cast<double>(a) + spec.s(x1, x2) +
                     spec.u_outcome_coef * u +
                     spec.outcome_noise_sd * rng.normal();
    out.data.x(i, 0) = x1;
    out.data.x(i, 1) = x2;
    out.data.z[i] = z;
    out.data.a[i] = a;
    out.data.y[i] = y;
    out.latent.a0[i] = a0;
    out.latent.a1[i] = a1;
    out.latent.u[i] = u;
  }
  out.data.y_binary = false;
  out.data.load_report.rows_read = n;
  return out;
}

TrueLate true_late(const ScenarioSpec& spec, std::size_t draws,
                   std::uint64_t seed) {
  if (draws < 100000) throw input_error("true_late needs at least 1e5 draws");
  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  std::size_t compliers = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.bernoulli(spec.x2_bernoulli_p) ? 1.0 : 0.0;
    const double u = rng.uniform(-spec.u_half_range, spec.u_half_range);
    const double lam0 = spec.treatment_prob(x1, x2, 0, u);
    const double lam1 = spec.treatment_prob(x1, x2, 1, u);
    if (lam1 < lam0) {
      throw estimation_error("treatment model decreases in the instrument");
    }
    const int a0 = rng.bernoulli(lam0) ? 1 : 0;
    int a1 = a0;
    if (a0 == 0) {
      a1 = rng.bernoulli((lam1 - lam0) / (1.0 - lam0)) ? 1 : 0;
    }
    if (a1 > a0) {
      const double value = spec.r(x1, x2);
      sum += value;
      sum2 += value * value;
      ++compliers;
    }
  }
  if (compliers == 0) throw estimation_error("no compliers drawn");
  TrueLate out;
  out.draws = draws;
  out.compliers = compliers;
  const double m = static_cast<double>(compliers);
  out.value = sum / m;
  const double var = std::max(0.0, sum2 / m - out.value * out.value);
  out.mc_se = std::sqrt(var / m);
  return out;
}

namespace {

struct Quadrature {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// Legendre nodes by Newton iteration on the recurrence.
Quadrature gauss_legendre(int n) {
  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(3.14159265358979323846 * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    q.nodes[static_cast<std::size_t>(i)] = x;
    q.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

const Quadrature& confounder_quadrature() {
  static const Quadrature q = gauss_legendre(64);
  return q;
}

}  // namespace

double marginal_lambda(const ScenarioSpec& spec, double x1, double x2, int z) {
  const Quadrature& q = confounder_quadrature();
  double acc = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    acc += q.weights[k] *
           spec.treatment_prob(x1, x2, z, spec.u_half_range * q.nodes[k]);
  }
  return 0.5 * acc;  // uniform density over [-h, h]
}

double marginal_mu(const ScenarioSpec& spec, double x1, double x2, int z) {
  return spec.r(x1, x2) * marginal_lambda(spec, x1, x2, z) + spec.s(x1, x2);
}

NuisanceModel oracle_nuisances(const ScenarioSpec& spec, double epsilon) {
  auto pi = [spec](std::span<const double> x) {
    return spec.pi0(x[0], x[1]);
  };
  auto mu = [spec](std::span<const double> x, int z) {
    return marginal_mu(spec, x[0], x[1], z);
  };
  auto lambda = [spec](std::span<const double> x, int z) {
    return marginal_lambda(spec, x[0], x[1], z);
  };
  return NuisanceModel::oracle(pi, mu, lambda, epsilon, false);
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::tsls:
      return "tsls";
    case EstimatorKind::drml_parametric:
      return "drml_parametric";
    case EstimatorKind::drml_nonparametric:
      return "drml_nonparametric";
  }
  return "unknown";
}

namespace {

struct RepOutcome {
  bool ok = false;
  double chi = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

RepOutcome run_estimator(EstimatorKind kind, const IvDataset& data,
                         const ExperimentConfig& config, std::uint64_t seed) {
  RepOutcome out;
  try {
    LateResult result;
    switch (kind) {
      case EstimatorKind::tsls:
        result = estimate_late_tsls(data, config.alpha);
        break;
      case EstimatorKind::drml_parametric: {
        DrmlOptions options;
        options.folds = config.folds;
        options.epsilon = config.epsilon;
        options.alpha = config.alpha;
        options.seed = seed;
        options.specs = NuisanceSpecs::parametric();
        result = estimate_late_drml(data, options);
        break;
      }
      case EstimatorKind::drml_nonparametric: {
        DrmlOptions options;
        options.folds = config.folds;
        options.epsilon = config.epsilon;
        options.alpha = config.alpha;
        options.seed = seed;
        options.specs = NuisanceSpecs::nonparametric(data.y_binary);
        result = estimate_late_drml(data, options);
        break;
      }
    }
    out.ok = true;
    out.chi = result.chi_hat;
    out.lo = result.ci_lo;
    out.hi = result.ci_hi;
  } catch (const estimation_error&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

SimulationReport run_experiment(const ScenarioSpec& spec,
                                const ExperimentConfig& config) {
  if (config.reps < 2) throw input_error("need at least two replications");
  if (config.n_list.empty()) throw input_error("empty sample size list");
  if (config.estimators.empty()) throw input_error("no estimators requested");

  SimulationReport report;
  report.scenario_id = spec.id;
  report.seed = config.seed;
  report.reps = config.reps;
  report.truth =
      true_late(spec, config.true_late_draws, derive_seed(config.seed, 0));

  const std::size_t cells = config.n_list.size();
  const std::size_t reps = static_cast<std::size_t>(config.reps);
  const std::size_t jobs = cells * reps;
  std::vector<std::vector<RepOutcome>> outcomes(
      jobs, std::vector<RepOutcome>(config.estimators.size()));

  parallel_for(jobs, config.threads, [&](std::size_t job) {
    const std::size_t n_idx = job / reps;
    const std::uint64_t rep_seed = derive_seed(config.seed, job + 1);
    const GeneratedData generated =
        generate_dataset(spec, config.n_list[n_idx], rep_seed);
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      outcomes[job][e] =
          run_estimator(config.estimators[e], generated.data, config,
                        derive_seed(rep_seed, e + 1));
    }
  });

  for (std::size_t n_idx = 0; n_idx < cells; ++n_idx) {
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      SimulationCell cell;
      cell.estimator = config.estimators[e];
      cell.n = config.n_list[n_idx];
      double sum = 0.0, sum_sq_err = 0.0, covered = 0.0, width = 0.0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const RepOutcome& o = outcomes[n_idx * reps + rep][e];
        if (!o.ok) {
          ++cell.failures;
          continue;
        }
        ++cell.reps_completed;
        sum += o.chi;
        const double err = o.chi - report.truth.value;
        sum_sq_err += err * err;
        covered += (o.lo <= report.truth.value && report.truth.value <= o.hi)
                       ? 1.0
                       : 0.0;
        width += o.hi - o.lo;
      }
      if (cell.reps_completed > 0) {
        const double m = static_cast<double>(cell.reps_completed);
        cell.bias = sum / m - report.truth.value;
        cell.rmse = std::sqrt(sum_sq_err / m);
        cell.coverage = covered / m;
        cell.mean_ci_width = width / m;
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace drml
