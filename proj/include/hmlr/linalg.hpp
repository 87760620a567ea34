#pragma once

// Small dense matrices (at most a few dozen rows) for the MIMO simulation
// boundary and the classical detectors. Row-major storage.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "hmlr/errors.hpp"

namespace hmlr {

using cdouble = std::complex<double>;
using RealVector = std::vector<double>;
using ComplexVector = std::vector<cdouble>;

template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorKind::Dimension, "matrix data size mismatch");
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows);

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Matrix<T>::Matrix(std::initializer_list<std::initializer_list<T>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    require(row.size() == cols_, ErrorKind::Dimension, "ragged matrix initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<cdouble>;

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
RealMatrix operator+(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b);
ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
RealMatrix operator*(double s, const RealMatrix& a);
ComplexMatrix operator*(double s, const ComplexMatrix& a);

RealVector matvec(const RealMatrix& a, std::span<const double> x);
ComplexVector matvec(const ComplexMatrix& a, std::span<const cdouble> x);
ComplexMatrix adjoint(const ComplexMatrix& a);

double frobenius_norm(const RealMatrix& a);
double frobenius_norm(const ComplexMatrix& a);
bool all_finite(const RealMatrix& a);
bool all_finite(const ComplexMatrix& a);

// [[Re H, -Im H], [Im H, Re H]]
RealMatrix to_real_composite(const ComplexMatrix& h);
// [Re v; Im v]
RealVector to_real_vector(std::span<const cdouble> v);
ComplexVector from_real_vector(std::span<const double> v);

struct SymmetricEigen {
  RealVector values;    // ascending
  RealMatrix vectors;   // column k is the eigenvector for values[k]
};

// Cyclic Jacobi rotations; intended for n <= 8 or so.
SymmetricEigen symmetric_eigen(const RealMatrix& a);

// Principal square root of a symmetric PSD matrix. Slightly negative
// eigenvalues (>= -1e-10 relative) are clamped to zero.
RealMatrix psd_sqrt(const RealMatrix& r);

// (A^T A + lambda I)^{-1} A^T b via Cholesky of the normal matrix.
RealVector solve_regularized(const RealMatrix& a, double lambda, std::span<const double> b);

}  // namespace hmlr
