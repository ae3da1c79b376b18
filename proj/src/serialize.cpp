#include "drml/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "drml/common.hpp"
#include "drml/version.hpp"

namespace drml {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string csv_provenance(std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream out;
  out << "# drml_iv " << kVersion << " seed=" << seed << " config=" << std::hex
      << config_hash << std::dec << "\n";
  return out.str();
}

nlohmann::ordered_json to_json(const LateResult& result) {
  nlohmann::ordered_json j;
  j["method"] = late_method_name(result.method);
  j["chi_hat"] = result.chi_hat;
  j["gamma_hat"] = result.gamma_hat;
  j["delta_hat"] = result.delta_hat;
  j["se"] = result.se;
  j["ci_lo"] = result.ci_lo;
  j["ci_hi"] = result.ci_hi;
  j["alpha"] = result.alpha;
  j["n"] = result.n;
  j["epsilon"] = result.epsilon;
  j["folds"] = result.folds;
  j["nuisance_warning"] = result.nuisance_warning;
  return j;
}

nlohmann::ordered_json to_json(const StrataShares& shares) {
  nlohmann::ordered_json j;
  j["complier"] = {{"share", shares.p_co}, {"se", shares.se_co}};
  j["always_taker"] = {{"share", shares.p_at}, {"se", shares.se_at}};
  j["never_taker"] = {{"share", shares.p_nt}, {"se", shares.se_nt}};
  j["n"] = shares.n;
  return j;
}

nlohmann::ordered_json to_json(const IteResult& result) {
  nlohmann::ordered_json j;
  j["mean"] = result.mean;
  j["sd"] = result.sd;
  j["q05"] = result.q05;
  j["q25"] = result.q25;
  j["q50"] = result.q50;
  j["q75"] = result.q75;
  j["q95"] = result.q95;
  j["flagged"] = result.flagged;
  j["n"] = result.ite.size();
  return j;
}

nlohmann::ordered_json to_json(const SimulationReport& report) {
  nlohmann::ordered_json j;
  j["scenario"] = report.scenario_id;
  j["seed"] = report.seed;
  j["reps"] = report.reps;
  j["true_late"] = report.truth.value;
  j["true_late_mc_se"] = report.truth.mc_se;
  j["true_late_draws"] = report.truth.draws;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& cell : report.cells) {
    nlohmann::ordered_json c;
    c["estimator"] = estimator_name(cell.estimator);
    c["n"] = cell.n;
    c["bias"] = cell.bias;
    c["rmse"] = cell.rmse;
    c["coverage"] = cell.coverage;
    c["mean_ci_width"] = cell.mean_ci_width;
    c["reps_completed"] = cell.reps_completed;
    c["failures"] = cell.failures;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j;
}

nlohmann::ordered_json to_json(const ClateResult& result) {
  nlohmann::ordered_json j;
  j["modifiers"] = result.modifier_columns;
  j["alpha"] = result.alpha;
  j["bootstrap_replicates"] = result.bootstrap_replicates;
  j["bootstrap_retries"] = result.bootstrap_retries;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < result.v_grid.rows(); ++g) {
    nlohmann::ordered_json row;
    nlohmann::ordered_json point = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < result.v_grid.cols(); ++c) {
      point.push_back(result.v_grid(g, c));
    }
    row["v"] = point;
    row["gamma"] = result.gamma_v[g];
    row["delta"] = result.delta_v[g];
    if (std::isnan(result.chi_v[g])) {
      row["chi"] = nullptr;
    } else {
      row["chi"] = result.chi_v[g];
    }
    if (!result.band_lo.empty()) {
      row["lo"] = std::isnan(result.band_lo[g])
                      ? nlohmann::ordered_json()
                      : nlohmann::ordered_json(result.band_lo[g]);
      row["hi"] = std::isnan(result.band_hi[g])
                      ? nlohmann::ordered_json()
                      : nlohmann::ordered_json(result.band_hi[g]);
    }
    row["flagged"] = result.flagged[g];
    rows.push_back(row);
  }
  j["grid"] = rows;
  return j;
}

std::string late_csv(const std::vector<LateResult>& results,
                     std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  out << "method,chi_hat,gamma_hat,delta_hat,se,ci_lo,ci_hi,alpha,n\n";
  for (const auto& r : results) {
    out << late_method_name(r.method) << ',' << format_double(r.chi_hat) << ','
        << format_double(r.gamma_hat) << ',' << format_double(r.delta_hat)
        << ',' << format_double(r.se) << ',' << format_double(r.ci_lo) << ','
        << format_double(r.ci_hi) << ',' << format_double(r.alpha) << ','
        << r.n << "\n";
  }
  return out.str();
}

std::string clate_csv(const ClateResult& result, std::uint64_t seed,
                      std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  for (const auto& name : result.modifier_columns) out << name << ',';
  out << "gamma,delta,chi,lo,hi,flagged\n";
  const bool bands = !result.band_lo.empty();
  for (std::size_t g = 0; g < result.v_grid.rows(); ++g) {
    for (std::size_t c = 0; c < result.v_grid.cols(); ++c) {
      out << format_double(result.v_grid(g, c)) << ',';
    }
    out << format_double(result.gamma_v[g]) << ','
        << format_double(result.delta_v[g]) << ','
        << format_double(result.chi_v[g]) << ','
        << format_double(bands ? result.band_lo[g]
                               : std::numeric_limits<double>::quiet_NaN())
        << ','
        << format_double(bands ? result.band_hi[g]
                               : std::numeric_limits<double>::quiet_NaN())
        << ',' << result.flagged[g] << "\n";
  }
  return out.str();
}

std::string discrete_profile_csv(const DiscreteProfile& profile,
                                 std::uint64_t seed,
                                 std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  out << "stratum,v0,estimate,se,lo,hi,count\n";
  for (const auto& cell : profile.cells) {
    out << stratum_name(profile.stratum) << ',' << format_double(cell.v0)
        << ',' << format_double(cell.estimate) << ',' << format_double(cell.se)
        << ',' << format_double(cell.lo) << ',' << format_double(cell.hi)
        << ',' << cell.count << "\n";
  }
  return out.str();
}

std::string density_profile_csv(const DensityProfile& profile,
                                std::uint64_t seed,
                                std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  out << "stratum,v0,density,negative_flag\n";
  for (std::size_t g = 0; g < profile.grid.size(); ++g) {
    out << stratum_name(profile.stratum) << ','
        << format_double(profile.grid[g]) << ','
        << format_double(profile.density[g]) << ',' << profile.negative_flag[g]
        << "\n";
  }
  return out.str();
}

std::string sensitivity_surface_csv(const SensitivitySurface& surface,
                                    std::uint64_t seed,
                                    std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  out << "delta1,delta2,xi\n";
  for (std::size_t i = 0; i < surface.delta1_grid.size(); ++i) {
    for (std::size_t j = 0; j < surface.delta2_grid.size(); ++j) {
      out << format_double(surface.delta1_grid[i]) << ','
          << format_double(surface.delta2_grid[j]) << ','
          << format_double(surface.xi_values[i][j]) << "\n";
    }
  }
  return out.str();
}

std::string sensitivity_frontier_csv(const SensitivitySurface& surface,
                                     std::uint64_t seed,
                                     std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  out << "delta1,delta2\n";
  for (const auto& [d1, d2] : surface.frontier) {
    out << format_double(d1) << ',' << format_double(d2) << "\n";
  }
  return out.str();
}

std::string simulation_csv(const SimulationReport& report, std::uint64_t seed,
                           std::uint64_t config_hash) {
  std::ostringstream out;
  out << csv_provenance(seed, config_hash);
  out << "scenario,estimator,n,bias,rmse,coverage,mean_ci_width,reps_completed,"
         "failures\n";
  for (const auto& cell : report.cells) {
    out << report.scenario_id << ',' << estimator_name(cell.estimator) << ','
        << cell.n << ',' << format_double(cell.bias) << ','
        << format_double(cell.rmse) << ',' << format_double(cell.coverage)
        << ',' << format_double(cell.mean_ci_width) << ','
        << cell.reps_completed << ',' << cell.failures << "\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  out << content;
  if (!out) throw input_error("failed writing file: " + path);
}

}  // namespace drml
