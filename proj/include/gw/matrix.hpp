#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gw {

using Vector = std::vector<double>;

/// Small dense row-major matrix. Dimensions here are the number of types,
/// so nothing is tuned for size.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Matrix transpose() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix operator+(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix operator*(double s) const;
  Matrix& operator+=(const Matrix& rhs);

  /// this * x (x as a column vector).
  Vector apply(std::span<const double> x) const;
  /// x * this (x as a row vector).
  Vector apply_left(std::span<const double> x) const;

  Matrix pow(unsigned n) const;

  /// Largest absolute entry.
  double max_abs() const;
  double trace() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Determinant by partial-pivot elimination.
double determinant(const Matrix& a);

/// True when the symmetric matrix admits a Cholesky factorisation with
/// strictly positive pivots.
bool cholesky_positive_definite(const Matrix& a);

}  // namespace gw
