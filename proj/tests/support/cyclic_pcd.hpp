#pragma once

// Independent reference solver for the penalized local regression problem.
// Deliberately shares no code path with the production solver: cyclic (not
// greedy) full proximal steps computed from raw samples, with the residual
// R = X B - X maintained explicitly instead of going through the
// second-moment matrix.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fedbnsl/matrix.hpp"
#include "fedbnsl/numerics.hpp"

namespace fedbnsl::testsupport {

// Entrywise l1 mass (one_norm in the library is the operator norm).
inline double entry_l1(const Matrix& m) {
  double s = 0.0;
  for (const double v : m.entries()) s += std::abs(v);
  return s;
}

// (1/2n)||X - X B||_F^2 + tr(beta (B - W)^T) + (rho2/2)||B - W||_F^2
//   + lambda ||B||_1, evaluated straight from the samples.
inline double reference_objective(const Matrix& x, const Matrix& w, const Matrix& beta,
                                  double rho2, double lambda, const Matrix& b) {
  const Matrix r = matmul(x, b) - x;
  const Matrix diff = b - w;
  const double fit = frobenius_dot(r, r) / (2.0 * static_cast<double>(x.rows()));
  return fit + frobenius_dot(beta, diff) + 0.5 * rho2 * frobenius_dot(diff, diff) +
         lambda * entry_l1(b);
}

// Coordinate minimizer of the problem above over zero-diagonal B: sweeps all
// off-diagonal coordinates with full (undamped) prox steps until the largest
// single-coordinate move falls below tol.
inline Matrix cyclic_reference_solver(const Matrix& x, const Matrix& w, const Matrix& beta,
                                      double rho2, double lambda, Matrix b, double tol = 1e-12,
                                      int max_sweeps = 20000) {
  const std::size_t n = x.rows(), d = x.cols();
  Matrix r = matmul(x, b) - x;
  std::vector<double> colsq(d, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < d; ++j) colsq[j] += x(k, j) * x(k, j);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j) continue;
        const double m = colsq[i] / static_cast<double>(n) + rho2;
        double g = 0.0;
        for (std::size_t k = 0; k < n; ++k) g += x(k, i) * r(k, j);
        g = g / static_cast<double>(n) + beta(i, j) + rho2 * (b(i, j) - w(i, j));
        const double target = soft_threshold(b(i, j) - g / m, lambda / m);
        const double move = target - b(i, j);
        if (move != 0.0) {
          b(i, j) = target;
          for (std::size_t k = 0; k < n; ++k) r(k, j) += move * x(k, i);
          max_move = std::max(max_move, std::abs(move));
        }
      }
    }
    if (max_move < tol) break;
  }
  return b;
}

}  // namespace fedbnsl::testsupport
