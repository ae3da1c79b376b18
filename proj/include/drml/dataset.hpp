#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "drml/linalg.hpp"

namespace drml {

enum class MissingPolicy { reject, drop_rows };

struct SchemaConfig {
  std::string path;
  std::string outcome_column;
  std::string treatment_column;
  std::string instrument_column;
  std::vector<std::string> covariate_columns;
  std::vector<std::string> categorical_columns;  // subset of covariates
  MissingPolicy missing_policy = MissingPolicy::reject;
  // When set, the instrument column may be continuous and is split at the
  // sample median during loading.
  bool dichotomize_instrument_column = false;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

struct IvDataset {
  std::size_t n = 0;
  std::vector<double> y;  // outcome; may be binary-coded 0/1
  std::vector<int> a;     // treatment received, {0,1}
  std::vector<int> z;     // instrument, {0,1}
  Matrix x;               // n x p covariates, dense after one-hot encoding
  std::vector<std::string> column_names;
  std::map<std::string, std::vector<std::size_t>> categorical_map;
  bool y_binary = false;
  LoadReport load_report;

  std::size_t p() const { return x.cols(); }

  // Index into column_names, -1 if absent.
  int column_index(const std::string& name) const;

  std::vector<double> covariate_column(std::size_t j) const;
};

IvDataset load_dataset(const SchemaConfig& config);

// Builds a dataset directly from vectors (simulation and tests).
IvDataset make_dataset(std::vector<double> y, std::vector<int> a,
                       std::vector<int> z, Matrix x,
                       std::vector<std::string> column_names = {});

// 1 when raw exceeds the sample median (midpoint of the two central order
// statistics for even n). Throws on a constant vector.
std::vector<int> dichotomize_instrument(const std::vector<double>& raw);

struct PreferenceInstrument {
  std::vector<double> tto;  // operating proportion from the measurement split
  std::vector<int> usable;  // 1 where tto is defined for the patient
};

// Splits each provider's patients into n_splits subsets; the first subset
// under the seeded shuffle measures the operating proportion that serves as
// the instrument for the remaining patients.
PreferenceInstrument compute_preference_instrument(
    const std::vector<std::string>& provider_id, const std::vector<int>& operated,
    int n_splits, std::uint64_t seed);

}  // namespace drml
