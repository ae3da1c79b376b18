#pragma once

#include <cstdint>
#include <string>

#include "drml/influence.hpp"
#include "drml/nuisance.hpp"

namespace drml {

enum class LateMethod { drml, tsls, unadjusted };

std::string late_method_name(LateMethod method);

struct LateResult {
  LateMethod method = LateMethod::drml;
  double chi_hat = 0.0;
  double gamma_hat = 0.0;  // numerator estimate (drml only)
  double delta_hat = 0.0;  // denominator / first-stage strength
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  std::size_t n = 0;
  // Diagnostics.
  double epsilon = 0.0;
  int folds = 0;
  bool nuisance_warning = false;
};

struct DrmlOptions {
  int folds = 5;
  double epsilon = 0.01;
  double alpha = 0.05;
  double delta_floor = 0.01;  // weak-instrument guard on |delta_hat|
  std::uint64_t seed = 0;
  NuisanceSpecs specs;
};

// Cross-fitted one-step ratio estimator with a Wald interval from the
// estimated influence function. Throws estimation_error when the first
// stage falls below the weak-instrument floor.
LateResult estimate_late_drml(const IvDataset& data, const DrmlOptions& options);

// Same estimator over precomputed out-of-fold pseudo-outcomes.
LateResult estimate_late_from_pseudo(const PseudoOutcomes& pseudo, double alpha,
                                     double delta_floor = 0.01);

// Two-stage least squares with linear main effects for the covariates;
// classical homoskedastic standard errors with stage-2 residuals formed
// against the observed treatment.
LateResult estimate_late_tsls(const IvDataset& data, double alpha = 0.05);

// Ratio of instrument-arm mean differences with a delta-method interval.
LateResult estimate_late_unadjusted(const IvDataset& data, double alpha = 0.05);

}  // namespace drml
