#pragma once

#include <string>
#include <vector>

#include "drml/influence.hpp"

namespace drml {

enum class Stratum { complier, always_taker, never_taker };

std::string stratum_name(Stratum stratum);

struct StrataShares {
  double p_co = 0.0, p_at = 0.0, p_nt = 0.0;
  double se_co = 0.0, se_at = 0.0, se_nt = 0.0;
  std::size_t n = 0;
};

// Marginal stratum probabilities: the sample means of the three uncentered
// influence values, which partition 1 row by row.
StrataShares strata_shares(const PseudoOutcomes& pseudo);

struct DiscreteProfileCell {
  double v0 = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;  // rows with V = v0
};

struct DiscreteProfile {
  Stratum stratum = Stratum::complier;
  std::vector<DiscreteProfileCell> cells;  // one per observed level
  double denominator = 0.0;                // stratum share estimate
  double alpha = 0.05;
};

// P(V = v0 | stratum) over every observed level of a discrete covariate,
// with Wald intervals from the plug-in influence function of the ratio.
DiscreteProfile profile_discrete(const PseudoOutcomes& pseudo,
                                 const std::vector<double>& v, Stratum stratum,
                                 double alpha = 0.05, double floor = 0.01);

struct DensitySpec {
  double bandwidth = 0.0;  // <= 0 selects the Silverman rule
  std::vector<double> grid;  // empty: equispaced over the sample range
  int grid_points = 100;
};

struct DensityProfile {
  Stratum stratum = Stratum::complier;
  std::vector<double> grid;
  std::vector<double> density;
  std::vector<int> negative_flag;  // influence weights can dip below zero
  double bandwidth = 0.0;
  double denominator = 0.0;
};

// Weighted Gaussian kernel density of a continuous covariate within a
// stratum. Point estimates only: smoothing bias invalidates Wald bands.
DensityProfile profile_density(const PseudoOutcomes& pseudo,
                               const std::vector<double>& v,
                               const DensitySpec& spec,
                               Stratum stratum = Stratum::complier,
                               double floor = 0.01);

// Silverman's rule on the unweighted sample: 0.9 min(sd, IQR/1.34) n^(-1/5).
double silverman_bandwidth(const std::vector<double>& v);

}  // namespace drml
