#pragma once

// Small shared helpers for the unit tests.

#include <cmath>
#include <cstdint>

#include "fedbnsl/matrix.hpp"
#include "fedbnsl/rng.hpp"

namespace fedbnsl::testsupport {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, std::uint64_t seed,
                            std::uint64_t stream = 0) {
  RngStream rng(seed, RngPurpose::kTest, stream);
  Matrix m(rows, cols);
  for (double& v : m.entries()) v = scale * (2.0 * rng.uniform01() - 1.0);
  return m;
}

// Random strictly-lower-triangular matrix under a permutation: a weighted DAG
// support with entries of magnitude in [lo, hi].
inline Matrix random_dag_matrix(std::size_t d, double lo, double hi, std::uint64_t seed) {
  RngStream rng(seed, RngPurpose::kTest, 1);
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (rng.uniform01() < 0.4) {
        const double mag = lo + (hi - lo) * rng.uniform01();
        m(i, j) = rng.uniform01() < 0.5 ? mag : -mag;
      }
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

}  // namespace fedbnsl::testsupport
