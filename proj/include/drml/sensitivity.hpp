#pragma once

#include <vector>

namespace drml {

// The estimand shift from defiers: chi_hat + delta1 * delta2 / Delta_hat,
// where delta1 is the defier share and delta2 the defier-complier gap in
// average effects.
double xi(double chi_hat, double delta_hat, double delta1, double delta2);

struct SensitivityOptions {
  int delta1_points = 101;   // over [0, 1]
  int delta2_points = 161;   // over [delta2_min, delta2_max]
  double delta2_min = -2.0;  // bounds for a binary outcome
  double delta2_max = 2.0;
};

struct SensitivitySurface {
  double chi_hat = 0.0;
  double delta_hat = 0.0;
  std::vector<double> delta1_grid;
  std::vector<double> delta2_grid;
  std::vector<std::vector<double>> xi_values;  // [delta1][delta2]
  // Sign-change frontier: delta2*(delta1) = -chi_hat * Delta_hat / delta1,
  // kept where it lands inside the delta2 range.
  std::vector<std::pair<double, double>> frontier;
};

SensitivitySurface sensitivity_surface(double chi_hat, double delta_hat,
                                       const SensitivityOptions& options = {});

}  // namespace drml
