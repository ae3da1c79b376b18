#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drml {

// Dense row-major matrix. Minimal surface for the regression workloads here.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  Matrix select_rows(const std::vector<std::size_t>& idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < cols_; ++j) out(i, j) = (*this)(idx[i], j);
    }
    return out;
  }

  Matrix select_cols(const std::vector<std::size_t>& idx) const {
    Matrix out(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = (*this)(i, idx[j]);
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Solves A x = b for symmetric positive (semi)definite A via Cholesky.
// On a failed factorization the system is re-solved with an escalating
// ridge starting at 1e-8, so collinear one-hot blocks stay solvable.
std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b);

// Inverse through the same factorization; used for coefficient covariances.
Matrix invert_spd(const Matrix& a);

}  // namespace drml
