#include "drml/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "drml/common.hpp"
#include "drml/rng.hpp"

namespace drml {

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 style: quoted fields may contain commas, doubled quotes and
// newlines; a header row is required.
CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("file not found: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool saw_header = false;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (!saw_header) {
      table.header = record;
      saw_header = true;
    } else {
      table.rows.push_back(record);
    }
    record.clear();
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw input_error("unterminated quoted field in " + path);
  if (!field.empty() || !record.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_record();
  }
  if (!saw_header) throw input_error("empty CSV: " + path);
  return table;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

double parse_number(const std::string& s, const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw input_error("non-numeric value \"" + s + "\" in column " + column);
  }
  return v;
}

int parse_binary(const std::string& s, const std::string& role,
                 const std::string& column) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw input_error(role + " not binary: value \"" + s + "\" in column " +
                    column);
}

std::size_t find_column(const CsvTable& table, const std::string& name) {
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j] == name) return j;
  }
  throw input_error("missing column: " + name);
}

}  // namespace

int IvDataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    if (column_names[j] == name) return static_cast<int>(j);
  }
  return -1;
}

std::vector<double> IvDataset::covariate_column(std::size_t j) const {
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
  return col;
}

IvDataset load_dataset(const SchemaConfig& config) {
  if (config.outcome_column == config.treatment_column ||
      config.outcome_column == config.instrument_column ||
      config.treatment_column == config.instrument_column) {
    throw input_error("outcome/treatment/instrument columns must be distinct");
  }
  for (const auto& c : config.covariate_columns) {
    if (c == config.outcome_column || c == config.treatment_column ||
        c == config.instrument_column) {
      throw input_error("column " + c + " listed as both role and covariate");
    }
  }
  for (const auto& c : config.categorical_columns) {
    if (std::find(config.covariate_columns.begin(),
                  config.covariate_columns.end(),
                  c) == config.covariate_columns.end()) {
      throw input_error("categorical column " + c + " is not a covariate");
    }
  }

  const CsvTable table = read_csv(config.path);
  const std::size_t y_col = find_column(table, config.outcome_column);
  const std::size_t a_col = find_column(table, config.treatment_column);
  const std::size_t z_col = find_column(table, config.instrument_column);
  std::vector<std::size_t> x_cols;
  for (const auto& name : config.covariate_columns) {
    x_cols.push_back(find_column(table, name));
  }
  const std::set<std::string> categorical(config.categorical_columns.begin(),
                                          config.categorical_columns.end());

  LoadReport report;
  report.rows_read = table.rows.size();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) {
      throw input_error("ragged CSV row " + std::to_string(i + 2));
    }
    bool missing = is_missing(row[y_col]) || is_missing(row[a_col]) ||
                   is_missing(row[z_col]);
    for (const std::size_t j : x_cols) missing = missing || is_missing(row[j]);
    if (missing) {
      if (config.missing_policy == MissingPolicy::reject) {
        throw input_error("missing value in row " + std::to_string(i + 2));
      }
      ++report.rows_dropped;
      continue;
    }
    kept.push_back(i);
  }
  if (kept.empty()) throw input_error("empty dataset after filtering");

  IvDataset data;
  data.n = kept.size();
  data.load_report = report;
  data.y.resize(data.n);
  data.a.resize(data.n);
  data.z.resize(data.n);
  std::vector<double> raw_instrument(data.n);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& row = table.rows[kept[i]];
    data.y[i] = parse_number(row[y_col], config.outcome_column);
    data.a[i] = parse_binary(row[a_col], "treatment", config.treatment_column);
    if (config.dichotomize_instrument_column) {
      raw_instrument[i] = parse_number(row[z_col], config.instrument_column);
    } else {
      data.z[i] =
          parse_binary(row[z_col], "instrument", config.instrument_column);
    }
  }
  if (config.dichotomize_instrument_column) {
    data.z = dichotomize_instrument(raw_instrument);
  }

  // Assemble covariates: numeric columns pass through, categorical columns
  // one-hot encode with the first (sorted) level dropped.
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < x_cols.size(); ++c) {
    const std::string& name = config.covariate_columns[c];
    const std::size_t j = x_cols[c];
    if (categorical.count(name) == 0) {
      std::vector<double> col(data.n);
      for (std::size_t i = 0; i < kept.size(); ++i) {
        col[i] = parse_number(table.rows[kept[i]][j], name);
      }
      columns.push_back(std::move(col));
      names.push_back(name);
      continue;
    }
    std::set<std::string> levels;
    for (const std::size_t i : kept) levels.insert(table.rows[i][j]);
    if (levels.size() < 2) {
      // Constant categorical contributes nothing under reference coding.
      data.categorical_map[name] = {};
      continue;
    }
    std::vector<std::size_t> block;
    auto it = levels.begin();
    ++it;  // reference level dropped
    for (; it != levels.end(); ++it) {
      std::vector<double> col(data.n, 0.0);
      for (std::size_t i = 0; i < kept.size(); ++i) {
        if (table.rows[kept[i]][j] == *it) col[i] = 1.0;
      }
      block.push_back(columns.size());
      columns.push_back(std::move(col));
      names.push_back(name + "=" + *it);
    }
    data.categorical_map[name] = block;
  }

  data.x = Matrix(data.n, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < data.n; ++i) data.x(i, j) = columns[j][i];
  }
  data.column_names = std::move(names);
  data.y_binary = std::all_of(data.y.begin(), data.y.end(), [](double v) {
    return v == 0.0 || v == 1.0;
  });
  return data;
}

IvDataset make_dataset(std::vector<double> y, std::vector<int> a,
                       std::vector<int> z, Matrix x,
                       std::vector<std::string> column_names) {
  IvDataset data;
  data.n = y.size();
  if (a.size() != data.n || z.size() != data.n || x.rows() != data.n) {
    throw input_error("make_dataset: length mismatch");
  }
  for (std::size_t i = 0; i < data.n; ++i) {
    if ((a[i] != 0 && a[i] != 1) || (z[i] != 0 && z[i] != 1)) {
      throw input_error("make_dataset: treatment/instrument must be binary");
    }
  }
  data.y = std::move(y);
  data.a = std::move(a);
  data.z = std::move(z);
  data.x = std::move(x);
  if (column_names.empty()) {
    for (std::size_t j = 0; j < data.x.cols(); ++j) {
      column_names.push_back("x" + std::to_string(j + 1));
    }
  }
  if (column_names.size() != data.x.cols()) {
    throw input_error("make_dataset: column name count mismatch");
  }
  data.column_names = std::move(column_names);
  data.y_binary = std::all_of(data.y.begin(), data.y.end(), [](double v) {
    return v == 0.0 || v == 1.0;
  });
  data.load_report.rows_read = data.n;
  return data;
}

std::vector<int> dichotomize_instrument(const std::vector<double>& raw) {
  if (raw.empty()) throw input_error("empty instrument vector");
  std::vector<double> sorted(raw);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw input_error("constant instrument: no variation to dichotomize");
  }
  const std::size_t n = sorted.size();
  double median;
  if (n % 2 == 1) {
    median = sorted[n / 2];
  } else {
    median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = raw[i] > median ? 1 : 0;
  return out;
}

PreferenceInstrument compute_preference_instrument(
    const std::vector<std::string>& provider_id, const std::vector<int>& operated,
    int n_splits, std::uint64_t seed) {
  if (provider_id.size() != operated.size()) {
    throw input_error("provider/operated length mismatch");
  }
  if (n_splits < 2) throw input_error("n_splits must be at least 2");

  std::map<std::string, std::vector<std::size_t>> by_provider;
  for (std::size_t i = 0; i < provider_id.size(); ++i) {
    by_provider[provider_id[i]].push_back(i);
  }

  PreferenceInstrument out;
  out.tto.assign(provider_id.size(), 0.0);
  out.usable.assign(provider_id.size(), 0);

  std::uint64_t provider_counter = 0;
  for (const auto& [provider, patients] : by_provider) {
    Rng rng = Rng::substream(seed, provider_counter++);
    std::vector<std::size_t> order(patients);
    rng.shuffle(order);
    // Deal shuffled patients into n_splits subsets round-robin; subset 0 is
    // the measurement split.
    double operated_in_split = 0.0;
    double split_size = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k % static_cast<std::size_t>(n_splits) == 0) {
        operated_in_split += operated[order[k]];
        split_size += 1.0;
      }
    }
    if (split_size == 0.0) continue;  // unreachable: subset 0 always fills first
    const double rate = operated_in_split / split_size;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k % static_cast<std::size_t>(n_splits) == 0) continue;
      out.tto[order[k]] = rate;
      out.usable[order[k]] = 1;
    }
  }
  return out;
}

}  // namespace drml
