#include "drml/nuisance.hpp"

#include <algorithm>

#include "drml/common.hpp"
#include "drml/rng.hpp"

namespace drml {

FoldPlan make_folds(std::size_t n, int k, const std::vector<int>& z,
                    std::uint64_t seed) {
  if (k < 2) throw input_error("fold count must be at least 2");
  if (z.size() != n) throw input_error("make_folds: z length mismatch");
  std::vector<std::size_t> arm0, arm1;
  for (std::size_t i = 0; i < n; ++i) {
    (z[i] == 1 ? arm1 : arm0).push_back(i);
  }
  if (arm0.size() < static_cast<std::size_t>(k) ||
      arm1.size() < static_cast<std::size_t>(k)) {
    throw input_error("fold count exceeds an instrument arm size");
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(n, 0);
  Rng rng(seed);
  // Dealing continues across strata so overall fold sizes stay balanced,
  // not just the per-stratum counts.
  std::size_t next_fold = 0;
  for (auto* arm : {&arm0, &arm1}) {
    rng.shuffle(*arm);
    for (const std::size_t row : *arm) {
      plan.assignment[row] = static_cast<int>(next_fold % k);
      ++next_fold;
    }
  }
  return plan;
}

NuisanceModel NuisanceModel::fit(const IvDataset& data, const FoldPlan& folds,
                                 const NuisanceSpecs& specs, double epsilon) {
  if (folds.assignment.size() != data.n) {
    throw input_error("fold plan does not match dataset length");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw input_error("propensity truncation must lie in (0, 0.5)");
  }
  NuisanceModel model;
  model.epsilon_ = epsilon;
  model.clip_mu_to_unit_ = data.y_binary;
  model.fold_fits_.resize(static_cast<std::size_t>(folds.k));

  for (int f = 0; f < folds.k; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.n; ++i) {
      if (folds.assignment[i] != f) train.push_back(i);
    }
    std::vector<std::size_t> arm[2];
    for (const std::size_t i : train) {
      arm[static_cast<std::size_t>(data.z[i])].push_back(i);
    }
    if (arm[0].empty() || arm[1].empty()) {
      throw estimation_error("training split lost an instrument arm");
    }

    const Matrix x_train = data.x.select_rows(train);
    std::vector<double> z_target(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      z_target[i] = static_cast<double>(data.z[train[i]]);
    }
    FoldFit& fits = model.fold_fits_[static_cast<std::size_t>(f)];
    fits.pi = drml::fit(specs.pi, x_train, z_target, true);

    for (int zv = 0; zv < 2; ++zv) {
      const auto& rows = arm[static_cast<std::size_t>(zv)];
      const Matrix xz = data.x.select_rows(rows);
      std::vector<double> y_arm(rows.size()), a_arm(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        y_arm[i] = data.y[rows[i]];
        a_arm[i] = static_cast<double>(data.a[rows[i]]);
      }
      FittedLearner mu_fit = drml::fit(specs.mu, xz, y_arm, data.y_binary);
      FittedLearner lam_fit = drml::fit(specs.lambda, xz, a_arm, true);
      if (zv == 0) {
        fits.mu0 = std::move(mu_fit);
        fits.lam0 = std::move(lam_fit);
      } else {
        fits.mu1 = std::move(mu_fit);
        fits.lam1 = std::move(lam_fit);
      }
    }
  }
  return model;
}

NuisanceModel NuisanceModel::oracle(InstrumentPropensityFn pi1,
                                    ArmRegressionFn mu, ArmRegressionFn lambda,
                                    double epsilon, bool clip_mu_to_unit) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw input_error("propensity truncation must lie in (0, 0.5)");
  }
  NuisanceModel model;
  model.oracle_mode_ = true;
  model.oracle_pi_ = std::move(pi1);
  model.oracle_mu_ = std::move(mu);
  model.oracle_lambda_ = std::move(lambda);
  model.epsilon_ = epsilon;
  model.clip_mu_to_unit_ = clip_mu_to_unit;
  return model;
}

NuisancePredictions NuisanceModel::predict_out_of_fold(
    const IvDataset& data, const FoldPlan& folds) const {
  NuisancePredictions out;
  out.pi1.resize(data.n);
  out.mu0.resize(data.n);
  out.mu1.resize(data.n);
  out.lam0.resize(data.n);
  out.lam1.resize(data.n);

  if (oracle_mode_) {
    for (std::size_t i = 0; i < data.n; ++i) {
      const auto row = data.x.row(i);
      out.pi1[i] = clip(oracle_pi_(row), epsilon_, 1.0 - epsilon_);
      out.mu0[i] = oracle_mu_(row, 0);
      out.mu1[i] = oracle_mu_(row, 1);
      out.lam0[i] = clip(oracle_lambda_(row, 0), 0.0, 1.0);
      out.lam1[i] = clip(oracle_lambda_(row, 1), 0.0, 1.0);
      if (clip_mu_to_unit_) {
        out.mu0[i] = clip(out.mu0[i], 0.0, 1.0);
        out.mu1[i] = clip(out.mu1[i], 0.0, 1.0);
      }
    }
    return out;
  }

  if (folds.assignment.size() != data.n) {
    throw input_error("fold plan does not match dataset length");
  }
  for (std::size_t i = 0; i < data.n; ++i) {
    const int f = folds.assignment[i];
    if (f < 0 || f >= static_cast<int>(fold_fits_.size())) {
      throw input_error("fold index out of range");
    }
    const FoldFit& fits = fold_fits_[static_cast<std::size_t>(f)];
    const auto row = data.x.row(i);
    out.pi1[i] = clip(fits.pi.predict_row(row), epsilon_, 1.0 - epsilon_);
    out.mu0[i] = fits.mu0.predict_row(row);
    out.mu1[i] = fits.mu1.predict_row(row);
    out.lam0[i] = clip(fits.lam0.predict_row(row), 0.0, 1.0);
    out.lam1[i] = clip(fits.lam1.predict_row(row), 0.0, 1.0);
    if (clip_mu_to_unit_) {
      out.mu0[i] = clip(out.mu0[i], 0.0, 1.0);
      out.mu1[i] = clip(out.mu1[i], 0.0, 1.0);
    }
  }
  return out;
}

bool NuisanceModel::convergence_warning() const {
  for (const auto& fits : fold_fits_) {
    if (fits.pi.convergence_warning() || fits.mu0.convergence_warning() ||
        fits.mu1.convergence_warning() || fits.lam0.convergence_warning() ||
        fits.lam1.convergence_warning()) {
      return true;
    }
  }
  return false;
}

}  // namespace drml
