#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drml/influence.hpp"
#include "drml/late.hpp"

namespace drml {

struct ClateOptions {
  std::vector<std::string> modifier_columns;
  // Second stage for the two pseudo-outcome regressions. Unset selects
  // per-cell means when every modifier is low-cardinality discrete and the
  // default stack otherwise.
  std::optional<LearnerSpec> second_stage;
  std::optional<Matrix> grid;  // explicit evaluation points (m x q)
  int grid_points = 50;        // per continuous modifier when grid unset
  int bootstrap_replicates = 500;
  // Refitting nuisances inside the bootstrap is not implemented; the flag
  // exists so callers state the approximation explicitly.
  bool refit_nuisances = false;
  double alpha = 0.05;
  double delta_floor = 0.01;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct ClateResult {
  Matrix v_grid;
  std::vector<std::string> modifier_columns;
  std::vector<double> gamma_v;
  std::vector<double> delta_v;
  std::vector<double> chi_v;  // NaN where flagged
  std::vector<int> flagged;   // |delta_v| below floor
  std::vector<double> band_lo, band_hi;  // empty when B = 0
  int bootstrap_replicates = 0;
  std::size_t bootstrap_retries = 0;
  double alpha = 0.05;
};

// DR-Learner over precomputed out-of-fold pseudo-outcomes: regress the
// numerator and denominator pseudo-outcome on the modifiers, evaluate the
// ratio on a grid, and bootstrap the second stage with nuisances frozen.
ClateResult estimate_clate(const IvDataset& data, const PseudoOutcomes& pseudo,
                           const ClateOptions& options);

struct IteResult {
  std::vector<double> ite;  // ratio evaluated at each observation's modifiers
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
  std::size_t flagged = 0;  // rows below the denominator floor
};

// Individual-level effect distribution: the conditional ratio evaluated at
// every observation's own modifier values.
IteResult ite_distribution(const IvDataset& data, const PseudoOutcomes& pseudo,
                           const ClateOptions& options);

}  // namespace drml
