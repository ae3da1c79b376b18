#include "drml/late.hpp"

#include <cmath>

#include "drml/common.hpp"

namespace drml {

std::string late_method_name(LateMethod method) {
  switch (method) {
    case LateMethod::drml:
      return "drml";
    case LateMethod::tsls:
      return "tsls";
    case LateMethod::unadjusted:
      return "unadjusted";
  }
  return "unknown";
}

LateResult estimate_late_from_pseudo(const PseudoOutcomes& pseudo, double alpha,
                                     double delta_floor) {
  const std::size_t n = pseudo.n();
  if (n == 0) throw input_error("empty pseudo-outcomes");
  const double gamma_bar = mean(pseudo.gamma_dot);
  const double delta_bar = mean(pseudo.delta_dot);
  if (std::fabs(delta_bar) < delta_floor) {
    throw estimation_error(
        "weak instrument: |delta_hat| = " + std::to_string(delta_bar) +
        " below floor " + std::to_string(delta_floor));
  }
  const double chi = gamma_bar / delta_bar;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v =
        chi_if_point(pseudo.gamma_dot[i], pseudo.delta_dot[i], chi, delta_bar);
    sq += v * v;
  }
  const double nd = static_cast<double>(n);
  const double se = std::sqrt(sq / nd) / std::sqrt(nd);
  const double q = normal_quantile(1.0 - alpha / 2.0);

  LateResult result;
  result.method = LateMethod::drml;
  result.chi_hat = chi;
  result.gamma_hat = gamma_bar;
  result.delta_hat = delta_bar;
  result.se = se;
  result.ci_lo = chi - q * se;
  result.ci_hi = chi + q * se;
  result.alpha = alpha;
  result.n = n;
  return result;
}

LateResult estimate_late_drml(const IvDataset& data,
                              const DrmlOptions& options) {
  if (data.n < 10 * static_cast<std::size_t>(options.folds)) {
    throw input_error("dataset too small for the requested fold count");
  }
  const FoldPlan folds = make_folds(data.n, options.folds, data.z, options.seed);
  const NuisanceModel model =
      NuisanceModel::fit(data, folds, options.specs, options.epsilon);
  const NuisancePredictions preds = model.predict_out_of_fold(data, folds);
  const PseudoOutcomes pseudo = compute_pseudo_outcomes(data, preds);
  LateResult result =
      estimate_late_from_pseudo(pseudo, options.alpha, options.delta_floor);
  result.epsilon = options.epsilon;
  result.folds = options.folds;
  result.nuisance_warning = model.convergence_warning();
  return result;
}

namespace {

// Design [1, v, X]; returns the fitted coefficients.
std::vector<double> regress_with(const IvDataset& data,
                                 const std::vector<double>& v,
                                 const std::vector<double>& target) {
  const std::size_t n = data.n;
  const std::size_t p = data.p();
  Matrix design(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = v[i];
    for (std::size_t j = 0; j < p; ++j) design(i, j + 1) = data.x(i, j);
  }
  const FittedLearner ols = fit(LearnerSpec::linear(), design, target, false);
  if (ols.is_constant()) {
    std::vector<double> coef(p + 2, 0.0);
    coef[0] = ols.predict_row(design.row(0));
    return coef;
  }
  return ols.coefficients();  // [intercept, v, x...]
}

double evaluate(const std::vector<double>& coef, double v,
                std::span<const double> x) {
  double value = coef[0] + coef[1] * v;
  for (std::size_t j = 0; j < x.size(); ++j) value += coef[j + 2] * x[j];
  return value;
}

}  // namespace

LateResult estimate_late_tsls(const IvDataset& data, double alpha) {
  const std::size_t n = data.n;
  if (n < 3) throw input_error("too few rows for two-stage least squares");
  std::vector<double> z_real(n), a_real(n);
  for (std::size_t i = 0; i < n; ++i) {
    z_real[i] = static_cast<double>(data.z[i]);
    a_real[i] = static_cast<double>(data.a[i]);
  }

  // Stage 1: treatment on [1, Z, X].
  const std::vector<double> stage1 = regress_with(data, z_real, a_real);
  std::vector<double> a_hat(n);
  for (std::size_t i = 0; i < n; ++i) {
    a_hat[i] = evaluate(stage1, z_real[i], data.x.row(i));
  }

  // Stage 2: outcome on [1, A_hat, X].
  const std::vector<double> stage2 = regress_with(data, a_hat, data.y);

  // Residuals use the observed treatment.
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = data.y[i] - evaluate(stage2, a_real[i], data.x.row(i));
    rss += e * e;
  }
  const std::size_t k = data.p() + 2;
  if (n <= k) throw input_error("too few rows for TSLS degrees of freedom");
  const double sigma2 = rss / static_cast<double>(n - k);

  Matrix wtw(k, k);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> w(k);
    w[0] = 1.0;
    w[1] = a_hat[i];
    for (std::size_t j = 0; j < data.p(); ++j) w[j + 2] = data.x(i, j);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = r; c < k; ++c) wtw(r, c) += w[r] * w[c];
    }
  }
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < r; ++c) wtw(r, c) = wtw(c, r);
  }
  const Matrix cov = invert_spd(wtw);
  const double se = std::sqrt(std::max(0.0, sigma2 * cov(1, 1)));
  const double q = normal_quantile(1.0 - alpha / 2.0);

  LateResult result;
  result.method = LateMethod::tsls;
  result.chi_hat = stage2[1];
  result.se = se;
  result.ci_lo = result.chi_hat - q * se;
  result.ci_hi = result.chi_hat + q * se;
  result.alpha = alpha;
  result.n = n;
  // First-stage strength mirrors the drml diagnostic.
  double d = 0.0;
  {
    double a1 = 0.0, a0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (data.z[i] == 1) {
        a1 += a_real[i];
        ++n1;
      } else {
        a0 += a_real[i];
        ++n0;
      }
    }
    if (n1 > 0 && n0 > 0) {
      d = a1 / static_cast<double>(n1) - a0 / static_cast<double>(n0);
    }
  }
  result.delta_hat = d;
  return result;
}

LateResult estimate_late_unadjusted(const IvDataset& data, double alpha) {
  double y1 = 0.0, y0 = 0.0, a1 = 0.0, a0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    if (data.z[i] == 1) {
      y1 += data.y[i];
      a1 += data.a[i];
      ++n1;
    } else {
      y0 += data.y[i];
      a0 += data.a[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) {
    throw estimation_error("an instrument arm is empty");
  }
  const double my1 = y1 / static_cast<double>(n1);
  const double my0 = y0 / static_cast<double>(n0);
  const double ma1 = a1 / static_cast<double>(n1);
  const double ma0 = a0 / static_cast<double>(n0);
  const double denom = ma1 - ma0;
  if (denom == 0.0) {
    throw estimation_error("zero first-stage difference in treatment means");
  }
  const double chi = (my1 - my0) / denom;

  // Delta method: within-arm variance of Y - chi * A.
  double s1 = 0.0, s0 = 0.0;
  double m1 = my1 - chi * ma1;
  double m0 = my0 - chi * ma0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const double g = data.y[i] - chi * static_cast<double>(data.a[i]);
    if (data.z[i] == 1) {
      s1 += (g - m1) * (g - m1);
    } else {
      s0 += (g - m0) * (g - m0);
    }
  }
  const double var =
      (s1 / static_cast<double>(n1) / static_cast<double>(n1) +
       s0 / static_cast<double>(n0) / static_cast<double>(n0)) /
      (denom * denom);
  const double se = std::sqrt(var);
  const double q = normal_quantile(1.0 - alpha / 2.0);

  LateResult result;
  result.method = LateMethod::unadjusted;
  result.chi_hat = chi;
  result.delta_hat = denom;
  result.gamma_hat = my1 - my0;
  result.se = se;
  result.ci_lo = chi - q * se;
  result.ci_hi = chi + q * se;
  result.alpha = alpha;
  result.n = data.n;
  return result;
}

}  // namespace drml
