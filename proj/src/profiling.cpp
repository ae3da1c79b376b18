#include "drml/profiling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "drml/common.hpp"

namespace drml {

std::string stratum_name(Stratum stratum) {
  switch (stratum) {
    case Stratum::complier:
      return "complier";
    case Stratum::always_taker:
      return "always_taker";
    case Stratum::never_taker:
      return "never_taker";
  }
  return "unknown";
}

namespace {

const std::vector<double>& stratum_weights(const PseudoOutcomes& pseudo,
                                           Stratum stratum) {
  switch (stratum) {
    case Stratum::complier:
      return pseudo.delta_dot;
    case Stratum::always_taker:
      return pseudo.at_dot;
    case Stratum::never_taker:
      return pseudo.nt_dot;
  }
  throw input_error("unknown stratum");
}

double if_se(const std::vector<double>& centered_if) {
  double sq = 0.0;
  for (const double v : centered_if) sq += v * v;
  const double n = static_cast<double>(centered_if.size());
  return std::sqrt(sq / n) / std::sqrt(n);
}

}  // namespace

StrataShares strata_shares(const PseudoOutcomes& pseudo) {
  const std::size_t n = pseudo.n();
  if (n == 0) throw input_error("empty pseudo-outcomes");
  StrataShares out;
  out.n = n;
  out.p_co = mean(pseudo.delta_dot);
  out.p_at = mean(pseudo.at_dot);
  out.p_nt = mean(pseudo.nt_dot);
  const double nd = static_cast<double>(n);
  out.se_co = population_sd(pseudo.delta_dot) / std::sqrt(nd);
  out.se_at = population_sd(pseudo.at_dot) / std::sqrt(nd);
  out.se_nt = population_sd(pseudo.nt_dot) / std::sqrt(nd);
  return out;
}

DiscreteProfile profile_discrete(const PseudoOutcomes& pseudo,
                                 const std::vector<double>& v, Stratum stratum,
                                 double alpha, double floor) {
  const std::size_t n = pseudo.n();
  if (v.size() != n) throw input_error("modifier length mismatch");
  const std::vector<double>& weights = stratum_weights(pseudo, stratum);

  const double denom = mean(weights);
  if (std::fabs(denom) < floor) {
    throw estimation_error("stratum share below floor: " +
                           stratum_name(stratum));
  }

  std::set<double> levels(v.begin(), v.end());
  DiscreteProfile out;
  out.stratum = stratum;
  out.denominator = denom;
  out.alpha = alpha;
  const double q = normal_quantile(1.0 - alpha / 2.0);
  const double nd = static_cast<double>(n);

  for (const double v0 : levels) {
    double numer = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == v0) {
        numer += weights[i];
        ++count;
      }
    }
    numer /= nd;
    const double psi = numer / denom;

    // Influence function of the ratio: (1/denom) * [(w 1(V=v0) - numer)
    // - psi (w - denom)].
    std::vector<double> infl(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double num_if = (v[i] == v0 ? weights[i] : 0.0) - numer;
      const double den_if = weights[i] - denom;
      infl[i] = (num_if - psi * den_if) / denom;
    }
    DiscreteProfileCell cell;
    cell.v0 = v0;
    cell.estimate = psi;
    cell.se = if_se(infl);
    cell.lo = psi - q * cell.se;
    cell.hi = psi + q * cell.se;
    cell.count = count;
    out.cells.push_back(cell);
  }
  return out;
}

double silverman_bandwidth(const std::vector<double>& v) {
  const double sd = sample_sd(v);
  std::vector<double> copy(v);
  const double iqr =
      quantile_type7(copy, 0.75) - quantile_type7(copy, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h =
      0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
  if (!(h > 0.0)) {
    throw estimation_error("degenerate sample: Silverman bandwidth is zero");
  }
  return h;
}

DensityProfile profile_density(const PseudoOutcomes& pseudo,
                               const std::vector<double>& v,
                               const DensitySpec& spec, Stratum stratum,
                               double floor) {
  const std::size_t n = pseudo.n();
  if (v.size() != n) throw input_error("modifier length mismatch");
  const std::vector<double>& weights = stratum_weights(pseudo, stratum);

  const double denom = mean(weights);
  if (std::fabs(denom) < floor) {
    throw estimation_error("stratum share below floor: " +
                           stratum_name(stratum));
  }
  const double h = spec.bandwidth > 0.0 ? spec.bandwidth : silverman_bandwidth(v);
  if (!(h > 0.0)) throw input_error("bandwidth must be positive");

  DensityProfile out;
  out.stratum = stratum;
  out.bandwidth = h;
  out.denominator = denom;
  if (!spec.grid.empty()) {
    out.grid = spec.grid;
  } else {
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    const int m = std::max(2, spec.grid_points);
    for (int g = 0; g < m; ++g) {
      out.grid.push_back(lo + (hi - lo) * static_cast<double>(g) /
                                  static_cast<double>(m - 1));
    }
  }

  const double norm = 1.0 / (h * std::sqrt(2.0 * 3.14159265358979323846));
  out.density.resize(out.grid.size());
  out.negative_flag.assign(out.grid.size(), 0);
  for (std::size_t g = 0; g < out.grid.size(); ++g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (v[i] - out.grid[g]) / h;
      acc += weights[i] * norm * std::exp(-0.5 * u * u);
    }
    const double density = acc / static_cast<double>(n) / denom;
    out.density[g] = density;  // negative values reported, never clipped
    if (density < 0.0) out.negative_flag[g] = 1;
  }
  return out;
}

}  // namespace drml
