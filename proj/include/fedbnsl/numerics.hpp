#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fedbnsl/matrix.hpp"

namespace fedbnsl {

// Entry range of a matrix exponential exceeded double precision.
struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear system whose pivots fall below the singularity tolerance.
struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sign(x) * max(|x| - t, 0) for a threshold t >= 0.
inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// e^A via scaling-and-squaring: scale until the 1-norm is at most 0.5, sum a
// truncated Taylor series (at least 10 terms), then undo by repeated squaring.
// Throws OverflowError when entries leave double range.
Matrix matrix_exponential(const Matrix& a);

struct Acyclicity {
  double value = 0.0;  // tr(e^{W.W}) - d; zero exactly on DAG supports
  Matrix gradient;     // (e^{W.W})^T . 2W
};
Acyclicity acyclicity_h(const Matrix& w);

// Solves A X = B by LU with partial pivoting on a copy of A. Pivot magnitudes
// at or below 1e-12 (relative to the largest entry of A) raise
// SingularMatrixError.
Matrix solve_linear_system(Matrix a, Matrix b);

// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
// values come back ascending; vectors holds the matching orthonormal
// eigenvectors as columns, so a == vectors * diag(values) * vectors^T.
// Rejects non-square or visibly asymmetric input.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

// Nearest positive-semidefinite matrix in Frobenius distance: same
// eigenvectors, eigenvalues floored at zero. Input must be symmetric.
Matrix psd_project(const Matrix& a);

// Central finite differences of a scalar function of a matrix; the numerical
// oracle for every analytic gradient in the project.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                  double step);

}  // namespace fedbnsl
