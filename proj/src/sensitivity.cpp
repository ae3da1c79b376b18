#include "drml/sensitivity.hpp"

#include "drml/common.hpp"

namespace drml {

double xi(double chi_hat, double delta_hat, double delta1, double delta2) {
  if (delta_hat == 0.0) {
    throw estimation_error("xi undefined at zero first stage");
  }
  if (delta1 < 0.0 || delta1 > 1.0) {
    throw input_error("defier share must lie in [0,1]");
  }
  return chi_hat + delta1 * delta2 / delta_hat;
}

SensitivitySurface sensitivity_surface(double chi_hat, double delta_hat,
                                       const SensitivityOptions& options) {
  if (delta_hat == 0.0) {
    throw estimation_error("xi undefined at zero first stage");
  }
  if (options.delta1_points < 2 || options.delta2_points < 2) {
    throw input_error("sensitivity grids need at least two points");
  }
  SensitivitySurface out;
  out.chi_hat = chi_hat;
  out.delta_hat = delta_hat;
  for (int i = 0; i < options.delta1_points; ++i) {
    out.delta1_grid.push_back(static_cast<double>(i) /
                              static_cast<double>(options.delta1_points - 1));
  }
  for (int j = 0; j < options.delta2_points; ++j) {
    out.delta2_grid.push_back(
        options.delta2_min +
        (options.delta2_max - options.delta2_min) * static_cast<double>(j) /
            static_cast<double>(options.delta2_points - 1));
  }
  out.xi_values.resize(out.delta1_grid.size());
  for (std::size_t i = 0; i < out.delta1_grid.size(); ++i) {
    out.xi_values[i].resize(out.delta2_grid.size());
    for (std::size_t j = 0; j < out.delta2_grid.size(); ++j) {
      out.xi_values[i][j] =
          xi(chi_hat, delta_hat, out.delta1_grid[i], out.delta2_grid[j]);
    }
  }
  for (const double d1 : out.delta1_grid) {
    if (d1 <= 0.0) continue;
    const double d2 = -chi_hat * delta_hat / d1;
    if (d2 >= options.delta2_min && d2 <= options.delta2_max) {
      out.frontier.emplace_back(d1, d2);
    }
  }
  return out;
}

}  // namespace drml
