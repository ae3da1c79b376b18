#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "drml/dataset.hpp"
#include "drml/learners.hpp"

namespace drml {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index per row
  std::uint64_t seed = 0;
};

// Stratified by instrument arm so every training split sees both arms;
// fold sizes within a stratum differ by at most one.
FoldPlan make_folds(std::size_t n, int k, const std::vector<int>& z,
                    std::uint64_t seed);

struct NuisanceSpecs {
  LearnerSpec pi = LearnerSpec::logistic();
  LearnerSpec mu = LearnerSpec::linear();
  LearnerSpec lambda = LearnerSpec::logistic();

  // Linear main effects only.
  static NuisanceSpecs parametric() { return {}; }
  // Pruned tree + tree + generalized linear member per nuisance.
  static NuisanceSpecs nonparametric(bool y_binary) {
    NuisanceSpecs s;
    s.pi = LearnerSpec::default_stack(true);
    s.mu = LearnerSpec::default_stack(y_binary);
    s.lambda = LearnerSpec::default_stack(true);
    return s;
  }
};

struct NuisancePredictions {
  std::vector<double> pi1;   // P(Z=1|X), truncated to [eps, 1-eps]
  std::vector<double> mu0;   // E[Y|X, Z=0]
  std::vector<double> mu1;   // E[Y|X, Z=1]
  std::vector<double> lam0;  // E[A|X, Z=0], clipped to [0,1]
  std::vector<double> lam1;  // E[A|X, Z=1], clipped to [0,1]
};

using InstrumentPropensityFn = std::function<double(std::span<const double>)>;
using ArmRegressionFn = std::function<double(std::span<const double>, int)>;

// Per-fold fits of the instrument propensity and the per-arm outcome and
// treatment regressions, or user-supplied closed forms (oracle mode).
class NuisanceModel {
 public:
  static NuisanceModel fit(const IvDataset& data, const FoldPlan& folds,
                           const NuisanceSpecs& specs, double epsilon = 0.01);

  static NuisanceModel oracle(InstrumentPropensityFn pi1, ArmRegressionFn mu,
                              ArmRegressionFn lambda, double epsilon = 0.01,
                              bool clip_mu_to_unit = false);

  // Row i is scored by the model fit without row i's fold. Oracle models
  // score every row directly.
  NuisancePredictions predict_out_of_fold(const IvDataset& data,
                                          const FoldPlan& folds) const;

  double epsilon() const { return epsilon_; }
  bool is_oracle() const { return oracle_mode_; }
  bool convergence_warning() const;

 private:
  struct FoldFit {
    FittedLearner pi;
    FittedLearner mu0, mu1;
    FittedLearner lam0, lam1;
  };
  std::vector<FoldFit> fold_fits_;
  InstrumentPropensityFn oracle_pi_;
  ArmRegressionFn oracle_mu_;
  ArmRegressionFn oracle_lambda_;
  double epsilon_ = 0.01;
  bool clip_mu_to_unit_ = false;
  bool oracle_mode_ = false;
};

}  // namespace drml
