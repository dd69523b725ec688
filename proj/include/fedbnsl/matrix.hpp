#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fedbnsl {

// Thrown when operand shapes do not line up.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles. Every value in the pipeline is a
// 64-bit float; the communication accounting assumes 8 bytes per entry.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> entries() { return data_; }
  std::span<const double> entries() const { return data_; }

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  // Exact element-wise comparison; used by the bit-reproducibility checks.
  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double frobenius_dot(const Matrix& a, const Matrix& b);
// Maximum absolute column sum.
double one_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

// (1/n) X^T X for an n-by-d sample matrix.
Matrix scaled_gram(const Matrix& x);

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);
void require_square(const Matrix& a, const char* what);

}  // namespace fedbnsl
