#include "drml/influence.hpp"

#include "drml/common.hpp"

namespace drml {

namespace {

void check_pi(double pi1) {
  if (!(pi1 > 0.0 && pi1 < 1.0)) {
    throw estimation_error("instrument propensity outside (0,1)");
  }
}

}  // namespace

double gamma_dot_point(double y, int z, double mu0, double mu1, double pi1) {
  check_pi(pi1);
  const double pi_z = z == 1 ? pi1 : 1.0 - pi1;
  const double mu_z = z == 1 ? mu1 : mu0;
  const double residual = (y - mu_z) / pi_z;
  return (z == 1 ? residual : -residual) + (mu1 - mu0);
}

double delta_dot_point(double a, int z, double lam0, double lam1, double pi1) {
  check_pi(pi1);
  const double pi_z = z == 1 ? pi1 : 1.0 - pi1;
  const double lam_z = z == 1 ? lam1 : lam0;
  const double residual = (a - lam_z) / pi_z;
  return (z == 1 ? residual : -residual) + (lam1 - lam0);
}

StrataDot strata_dot_point(double a, int z, double lam0, double lam1,
                           double pi1) {
  check_pi(pi1);
  StrataDot out;
  out.at_dot =
      (z == 0 ? (a - lam0) / (1.0 - pi1) : 0.0) + lam0;
  out.nt_dot = (z == 1 ? (lam1 - a) / pi1 : 0.0) + (1.0 - lam1);
  return out;
}

double chi_if_point(double gamma_dot, double delta_dot, double chi,
                    double Delta) {
  if (Delta == 0.0) throw estimation_error("zero denominator in ratio");
  return (gamma_dot - chi * delta_dot) / Delta;
}

PseudoOutcomes compute_pseudo_outcomes(const IvDataset& data,
                                       const NuisancePredictions& preds) {
  if (preds.pi1.size() != data.n || preds.mu0.size() != data.n ||
      preds.mu1.size() != data.n || preds.lam0.size() != data.n ||
      preds.lam1.size() != data.n) {
    throw input_error("nuisance predictions not aligned with dataset");
  }
  PseudoOutcomes out;
  out.gamma_dot.resize(data.n);
  out.delta_dot.resize(data.n);
  out.at_dot.resize(data.n);
  out.nt_dot.resize(data.n);
  out.gamma_hat.resize(data.n);
  out.delta_hat.resize(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    out.gamma_dot[i] = gamma_dot_point(data.y[i], data.z[i], preds.mu0[i],
                                       preds.mu1[i], preds.pi1[i]);
    out.delta_dot[i] =
        delta_dot_point(static_cast<double>(data.a[i]), data.z[i],
                        preds.lam0[i], preds.lam1[i], preds.pi1[i]);
    const StrataDot strata =
        strata_dot_point(static_cast<double>(data.a[i]), data.z[i],
                         preds.lam0[i], preds.lam1[i], preds.pi1[i]);
    out.at_dot[i] = strata.at_dot;
    out.nt_dot[i] = strata.nt_dot;
    out.gamma_hat[i] = preds.mu1[i] - preds.mu0[i];
    out.delta_hat[i] = preds.lam1[i] - preds.lam0[i];
  }
  return out;
}

}  // namespace drml
