#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace drml {

// Bad user input: missing files, malformed schemas, contract violations.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Estimation failed on structurally valid input: weak instruments,
// degenerate designs, empty strata.
class estimation_error : public std::runtime_error {
 public:
  explicit estimation_error(const std::string& what)
      : std::runtime_error(what) {}
};

inline double expit(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double clip(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

double mean(const std::vector<double>& v);

// Divides by n (empirical second moment about the mean).
double population_sd(const std::vector<double>& v);

// Divides by n-1.
double sample_sd(const std::vector<double>& v);

// Linear interpolation between order statistics (R type 7). p in [0,1].
double quantile_type7(std::vector<double> v, double p);

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double normal_quantile(double p);

}  // namespace drml
