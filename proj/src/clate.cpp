#include "drml/clate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "drml/common.hpp"
#include "drml/parallel.hpp"
#include "drml/rng.hpp"

namespace drml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kDiscreteCardinality = 10;

std::vector<std::size_t> resolve_modifiers(const IvDataset& data,
                                           const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    const int j = data.column_index(name);
    if (j < 0) throw input_error("unknown modifier column: " + name);
    idx.push_back(static_cast<std::size_t>(j));
  }
  return idx;
}

bool all_discrete(const Matrix& v) {
  for (std::size_t j = 0; j < v.cols(); ++j) {
    std::set<double> values;
    for (std::size_t i = 0; i < v.rows(); ++i) {
      values.insert(v(i, j));
      if (values.size() > kDiscreteCardinality) return false;
    }
  }
  return true;
}

Matrix build_grid(const Matrix& v, int grid_points) {
  std::vector<std::vector<double>> axes;
  for (std::size_t j = 0; j < v.cols(); ++j) {
    std::vector<double> column(v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i) column[i] = v(i, j);
    std::set<double> distinct(column.begin(), column.end());
    std::vector<double> axis;
    if (distinct.size() <= kDiscreteCardinality) {
      axis.assign(distinct.begin(), distinct.end());
    } else {
      // Equispaced between the 2nd and 98th percentiles keeps the band
      // away from boundary variance blowup.
      const double lo = quantile_type7(column, 0.02);
      const double hi = quantile_type7(column, 0.98);
      const int m = std::max(2, grid_points);
      for (int g = 0; g < m; ++g) {
        axis.push_back(lo + (hi - lo) * static_cast<double>(g) /
                                static_cast<double>(m - 1));
      }
    }
    axes.push_back(std::move(axis));
  }
  std::size_t total = 1;
  for (const auto& axis : axes) {
    total *= axis.size();
    if (total > 100000) throw input_error("modifier grid too large");
  }
  Matrix grid(total, v.cols());
  for (std::size_t g = 0; g < total; ++g) {
    std::size_t rem = g;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      grid(g, j) = axes[j][rem % axes[j].size()];
      rem /= axes[j].size();
    }
  }
  return grid;
}

// Second stage over (V, gamma_dot) and (V, delta_dot): either exact
// per-cell means or a fitted learner pair.
class SecondStage {
 public:
  SecondStage(bool cell_means, const LearnerSpec& spec, const Matrix& v,
              const std::vector<double>& gamma, const std::vector<double>& delta)
      : cell_means_(cell_means) {
    if (cell_means_) {
      struct Cell {
        double gamma_sum = 0.0;
        double delta_sum = 0.0;
        std::size_t count = 0;
      };
      std::map<std::vector<double>, Cell> cells;
      std::vector<double> key(v.cols());
      for (std::size_t i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < v.cols(); ++j) key[j] = v(i, j);
        Cell& cell = cells[key];
        cell.gamma_sum += gamma[i];
        cell.delta_sum += delta[i];
        ++cell.count;
      }
      for (const auto& [k, cell] : cells) {
        const double n = static_cast<double>(cell.count);
        cells_[k] = {cell.gamma_sum / n, cell.delta_sum / n};
      }
    } else {
      gamma_fit_ = fit(spec, v, gamma, false);
      delta_fit_ = fit(spec, v, delta, false);
    }
  }

  // False when the grid point falls in an empty cell.
  bool evaluate(std::span<const double> point, double& gamma_v,
                double& delta_v) const {
    if (cell_means_) {
      const std::vector<double> key(point.begin(), point.end());
      const auto it = cells_.find(key);
      if (it == cells_.end()) return false;
      gamma_v = it->second.first;
      delta_v = it->second.second;
      return true;
    }
    gamma_v = gamma_fit_.predict_row(point);
    delta_v = delta_fit_.predict_row(point);
    return true;
  }

 private:
  bool cell_means_;
  std::map<std::vector<double>, std::pair<double, double>> cells_;
  FittedLearner gamma_fit_, delta_fit_;
};

void evaluate_grid(const SecondStage& stage, const Matrix& grid,
                   double delta_floor, std::vector<double>& gamma_v,
                   std::vector<double>& delta_v, std::vector<double>& chi_v,
                   std::vector<int>* flagged) {
  const std::size_t m = grid.rows();
  gamma_v.assign(m, kNaN);
  delta_v.assign(m, kNaN);
  chi_v.assign(m, kNaN);
  if (flagged) flagged->assign(m, 0);
  for (std::size_t g = 0; g < m; ++g) {
    double gv = 0.0, dv = 0.0;
    if (!stage.evaluate(grid.row(g), gv, dv)) {
      if (flagged) (*flagged)[g] = 1;
      continue;
    }
    gamma_v[g] = gv;
    delta_v[g] = dv;
    if (std::fabs(dv) < delta_floor) {
      if (flagged) (*flagged)[g] = 1;
    } else {
      chi_v[g] = gv / dv;
    }
  }
}

}  // namespace

ClateResult estimate_clate(const IvDataset& data, const PseudoOutcomes& pseudo,
                           const ClateOptions& options) {
  if (pseudo.n() != data.n) {
    throw input_error("pseudo-outcomes not aligned with dataset");
  }
  if (options.bootstrap_replicates < 0) {
    throw input_error("bootstrap replicate count must be nonnegative");
  }
  if (options.refit_nuisances) {
    throw input_error(
        "refitting nuisances inside the bootstrap is not implemented");
  }
  const std::vector<std::size_t> idx =
      resolve_modifiers(data, options.modifier_columns);
  const Matrix v = data.x.select_cols(idx);

  const bool cell_means =
      options.second_stage ? false : all_discrete(v);
  const LearnerSpec spec = options.second_stage
                               ? *options.second_stage
                               : LearnerSpec::default_stack(false);

  ClateResult result;
  result.modifier_columns = options.modifier_columns;
  result.alpha = options.alpha;
  result.v_grid = options.grid ? *options.grid : build_grid(v, options.grid_points);
  if (result.v_grid.cols() != v.cols()) {
    throw input_error("grid width does not match modifier count");
  }

  const SecondStage stage(cell_means, spec, v, pseudo.gamma_dot,
                          pseudo.delta_dot);
  evaluate_grid(stage, result.v_grid, options.delta_floor, result.gamma_v,
                result.delta_v, result.chi_v, &result.flagged);

  const int B = options.bootstrap_replicates;
  result.bootstrap_replicates = B;
  if (B == 0) return result;

  const std::size_t m = result.v_grid.rows();
  const std::size_t n = data.n;
  std::vector<std::vector<double>> boot(static_cast<std::size_t>(B));
  std::vector<std::size_t> retries(static_cast<std::size_t>(B), 0);

  parallel_for(static_cast<std::size_t>(B), options.threads, [&](std::size_t b) {
    Rng rng = Rng::substream(options.seed, b);
    std::vector<std::size_t> sample(n);
    for (int attempt = 0;; ++attempt) {
      bool has0 = false, has1 = false;
      for (std::size_t i = 0; i < n; ++i) {
        sample[i] = static_cast<std::size_t>(rng.below(n));
        (data.z[sample[i]] == 1 ? has1 : has0) = true;
      }
      if (has0 && has1) break;
      if (attempt >= 1000) {
        throw estimation_error("bootstrap could not find both instrument arms");
      }
      ++retries[b];
    }
    Matrix vb(n, v.cols());
    std::vector<double> gamma_b(n), delta_b(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) vb(i, j) = v(sample[i], j);
      gamma_b[i] = pseudo.gamma_dot[sample[i]];
      delta_b[i] = pseudo.delta_dot[sample[i]];
    }
    const SecondStage stage_b(cell_means, spec, vb, gamma_b, delta_b);
    std::vector<double> gamma_v, delta_v, chi_v;
    evaluate_grid(stage_b, result.v_grid, options.delta_floor, gamma_v, delta_v,
                  chi_v, nullptr);
    boot[b] = std::move(chi_v);
  });

  result.band_lo.assign(m, kNaN);
  result.band_hi.assign(m, kNaN);
  for (std::size_t g = 0; g < m; ++g) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      const double v_b = boot[static_cast<std::size_t>(b)][g];
      if (std::isfinite(v_b)) values.push_back(v_b);
    }
    if (values.size() < 2) continue;
    result.band_lo[g] = quantile_type7(values, options.alpha / 2.0);
    result.band_hi[g] = quantile_type7(values, 1.0 - options.alpha / 2.0);
  }
  for (const std::size_t r : retries) result.bootstrap_retries += r;
  return result;
}

IteResult ite_distribution(const IvDataset& data, const PseudoOutcomes& pseudo,
                           const ClateOptions& options) {
  ClateOptions opts = options;
  if (opts.modifier_columns.empty()) opts.modifier_columns = data.column_names;
  const std::vector<std::size_t> idx =
      resolve_modifiers(data, opts.modifier_columns);
  const Matrix v = data.x.select_cols(idx);
  const bool cell_means = opts.second_stage ? false : all_discrete(v);
  const LearnerSpec spec =
      opts.second_stage ? *opts.second_stage : LearnerSpec::default_stack(false);
  const SecondStage stage(cell_means, spec, v, pseudo.gamma_dot,
                          pseudo.delta_dot);

  IteResult result;
  result.ite.assign(data.n, kNaN);
  std::vector<double> finite;
  finite.reserve(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    double gv = 0.0, dv = 0.0;
    if (!stage.evaluate(v.row(i), gv, dv) ||
        std::fabs(dv) < opts.delta_floor) {
      ++result.flagged;
      continue;
    }
    result.ite[i] = gv / dv;
    finite.push_back(result.ite[i]);
  }
  if (finite.empty()) throw estimation_error("no usable individual effects");
  result.mean = mean(finite);
  result.sd = sample_sd(finite);
  result.q05 = quantile_type7(finite, 0.05);
  result.q25 = quantile_type7(finite, 0.25);
  result.q50 = quantile_type7(finite, 0.50);
  result.q75 = quantile_type7(finite, 0.75);
  result.q95 = quantile_type7(finite, 0.95);
  return result;
}

}  // namespace drml
