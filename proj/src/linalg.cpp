#include "drml/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "drml/common.hpp"

namespace drml {

namespace {

// In-place lower Cholesky; returns false on a non-positive pivot.
bool cholesky(Matrix& a) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  const double floor = std::max(max_diag, 1.0) * 1e-13;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > floor)) return false;
    const double root = std::sqrt(d);
    a(j, j) = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / root;
    }
  }
  return true;
}

std::vector<double> back_substitute(const Matrix& chol,
                                    const std::vector<double>& b) {
  const std::size_t n = chol.rows();
  std::vector<double> x(b);
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol(i, k) * x[k];
    x[i] = s / chol(i, i);
  }
  for (std::size_t ip = n; ip > 0; --ip) {
    const std::size_t i = ip - 1;
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= chol(k, i) * x[k];
    x[i] = s / chol(i, i);
  }
  return x;
}

bool factor_with_ridge(const Matrix& a, Matrix& chol, double& ridge_used) {
  chol = a;
  ridge_used = 0.0;
  if (cholesky(chol)) return true;
  double ridge = 1e-8;
  for (int attempt = 0; attempt < 8; ++attempt) {
    chol = a;
    for (std::size_t i = 0; i < a.rows(); ++i) chol(i, i) += ridge;
    if (cholesky(chol)) {
      ridge_used = ridge;
      return true;
    }
    ridge *= 100.0;
  }
  return false;
}

}  // namespace

std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw input_error("solve_spd: dimension mismatch");
  }
  if (a.rows() == 0) return {};
  Matrix chol;
  double ridge = 0.0;
  if (!factor_with_ridge(a, chol, ridge)) {
    throw estimation_error("singular normal equations beyond ridge tolerance");
  }
  return back_substitute(chol, b);
}

Matrix invert_spd(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw input_error("invert_spd: matrix not square");
  Matrix chol;
  double ridge = 0.0;
  if (!factor_with_ridge(a, chol, ridge)) {
    throw estimation_error("singular matrix beyond ridge tolerance");
  }
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    const std::vector<double> col = back_substitute(chol, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

}  // namespace drml
