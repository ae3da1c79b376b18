#pragma once

#include <vector>

#include "drml/dataset.hpp"
#include "drml/nuisance.hpp"

namespace drml {

// Uncentered influence value for the instrument effect on the outcome:
// (2z-1)/pi(x,z) * (y - mu(x,z)) + (mu1 - mu0), with pi(x,1) = pi1 and
// pi(x,0) = 1 - pi1.
double gamma_dot_point(double y, int z, double mu0, double mu1, double pi1);

// Same form with the treatment regression in place of the outcome one.
double delta_dot_point(double a, int z, double lam0, double lam1, double pi1);

struct StrataDot {
  double at_dot;  // always-taker share contribution
  double nt_dot;  // never-taker share contribution
};

// Uncentered influence values for the always-taker share E[lambda(X,0)] and
// the never-taker share E[1 - lambda(X,1)]. Together with delta_dot these
// partition 1 row by row.
StrataDot strata_dot_point(double a, int z, double lam0, double lam1,
                           double pi1);

// Centered influence value of the ratio at (chi, Delta):
// (gamma_dot - chi * delta_dot) / Delta.
double chi_if_point(double gamma_dot, double delta_dot, double chi,
                    double Delta);

struct PseudoOutcomes {
  std::vector<double> gamma_dot;
  std::vector<double> delta_dot;
  std::vector<double> at_dot;     // always-taker values
  std::vector<double> nt_dot;     // never-taker values
  std::vector<double> gamma_hat;  // mu1 - mu0 per row
  std::vector<double> delta_hat;  // lam1 - lam0 per row

  std::size_t n() const { return gamma_dot.size(); }
};

PseudoOutcomes compute_pseudo_outcomes(const IvDataset& data,
                                       const NuisancePredictions& preds);

}  // namespace drml
