#pragma once

#include <cstdint>
#include <string>

#include "drml/clate.hpp"
#include "drml/late.hpp"
#include "drml/profiling.hpp"
#include "drml/sensitivity.hpp"
#include "drml/simulation.hpp"

#include <json.hpp>

namespace drml {

// Locale-independent, round-trip-exact double formatting.
std::string format_double(double v);

std::uint64_t fnv1a_hash(const std::string& text);

// "# drml_iv <version> seed=<seed> config=<hash>" - leading comment carried
// by every CSV so a run can be traced back to its inputs.
std::string csv_provenance(std::uint64_t seed, std::uint64_t config_hash);

nlohmann::ordered_json to_json(const LateResult& result);
nlohmann::ordered_json to_json(const StrataShares& shares);
nlohmann::ordered_json to_json(const IteResult& result);
nlohmann::ordered_json to_json(const SimulationReport& report);
nlohmann::ordered_json to_json(const ClateResult& result);

std::string late_csv(const std::vector<LateResult>& results,
                     std::uint64_t seed, std::uint64_t config_hash);
std::string clate_csv(const ClateResult& result, std::uint64_t seed,
                      std::uint64_t config_hash);
std::string discrete_profile_csv(const DiscreteProfile& profile,
                                 std::uint64_t seed, std::uint64_t config_hash);
std::string density_profile_csv(const DensityProfile& profile,
                                std::uint64_t seed, std::uint64_t config_hash);
std::string sensitivity_surface_csv(const SensitivitySurface& surface,
                                    std::uint64_t seed,
                                    std::uint64_t config_hash);
std::string sensitivity_frontier_csv(const SensitivitySurface& surface,
                                     std::uint64_t seed,
                                     std::uint64_t config_hash);
std::string simulation_csv(const SimulationReport& report, std::uint64_t seed,
                           std::uint64_t config_hash);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace drml
