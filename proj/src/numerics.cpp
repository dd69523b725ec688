#include "fedbnsl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace fedbnsl {

Matrix matrix_exponential(const Matrix& a) {
  require_square(a, "matrix_exponential");
  if (!all_finite(a)) throw std::invalid_argument("matrix_exponential: input has non-finite entries");
  const std::size_t d = a.rows();

  const double nrm = one_norm(a);
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));

  Matrix scaled = a * std::ldexp(1.0, -squarings);

  // At norm <= 0.5 the Taylor tail after k terms decays faster than 2^-k/k!,
  // so the adaptive stop reaches full double precision well before the cap.
  Matrix result = Matrix::identity(d);
  Matrix term = Matrix::identity(d);
  constexpr int kMinTerms = 10, kMaxTerms = 40;
  for (int k = 1; k <= kMaxTerms; ++k) {
    term = matmul(term, scaled);
    term *= 1.0 / k;
    result += term;
    if (k >= kMinTerms && one_norm(term) <= 1e-16 * one_norm(result)) break;
  }

  for (int s = 0; s < squarings; ++s) {
    result = matmul(result, result);
    if (!all_finite(result)) {
      throw OverflowError("matrix_exponential: entries exceeded double range while squaring (input 1-norm " +
                          std::to_string(nrm) + ")");
    }
  }
  return result;
}

Acyclicity acyclicity_h(const Matrix& w) {
  require_square(w, "acyclicity_h");
  const std::size_t d = w.rows();
  const Matrix e = matrix_exponential(hadamard(w, w));
  Acyclicity out;
  out.value = trace(e) - static_cast<double>(d);
  out.gradient = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out.gradient(i, j) = e(j, i) * 2.0 * w(i, j);
  return out;
}

Matrix solve_linear_system(Matrix a, Matrix b) {
  require_square(a, "solve_linear_system");
  if (a.rows() != b.rows()) {
    throw DimensionError("solve_linear_system: A is " + std::to_string(a.rows()) +
                         "-dimensional but B has " + std::to_string(b.rows()) + " rows");
  }
  const std::size_t n = a.rows(), m = b.cols();
  const double tol = 1e-12 * std::max(1.0, max_abs(a));

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(a(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      const double v = std::abs(a(r, k));
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (best <= tol) {
      throw SingularMatrixError("solve_linear_system: pivot " + std::to_string(best) +
                                " at column " + std::to_string(k) + " is below tolerance " +
                                std::to_string(tol));
    }
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(p, c));
      for (std::size_t c = 0; c < m; ++c) std::swap(b(k, c), b(p, c));
    }
    const double inv = 1.0 / a(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) * inv;
      if (f == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) a(r, c) -= f * a(k, c);
      for (std::size_t c = 0; c < m; ++c) b(r, c) -= f * b(k, c);
    }
  }

  for (std::size_t ri = n; ri-- > 0;) {
    const double inv = 1.0 / a(ri, ri);
    for (std::size_t c = 0; c < m; ++c) {
      double s = b(ri, c);
      for (std::size_t k2 = ri + 1; k2 < n; ++k2) s -= a(ri, k2) * b(k2, c);
      b(ri, c) = s * inv;
    }
  }
  return b;
}

SymmetricEigen symmetric_eigen(const Matrix& input) {
  require_square(input, "symmetric_eigen");
  if (!all_finite(input)) throw std::invalid_argument("symmetric_eigen: input has non-finite entries");
  const std::size_t d = input.rows();
  const double scale = std::max(1.0, max_abs(input));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (std::abs(input(i, j) - input(j, i)) > 1e-8 * scale)
        throw std::invalid_argument("symmetric_eigen: input is not symmetric at (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");

  // Work on the exactly-symmetrized copy so rounding asymmetry cannot drift.
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));
  Matrix v = Matrix::identity(d);

  const double fro = frobenius_norm(a);
  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= 1e-14 * std::max(fro, 1e-300)) break;

    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&a](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  SymmetricEigen out;
  out.values.resize(d);
  out.vectors = Matrix(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < d; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

Matrix psd_project(const Matrix& a) {
  const SymmetricEigen eig = symmetric_eigen(a);
  const std::size_t d = a.rows();
  Matrix out(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    const double lam = eig.values[k];
    if (lam <= 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) {
      const double vik = eig.vectors(i, k) * lam;
      for (std::size_t j = 0; j <= i; ++j) {
        const double add = vik * eig.vectors(j, k);
        out(i, j) += add;
        if (j != i) out(j, i) += add;
      }
    }
  }
  return out;
}

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                  double step) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + step;
      const double fp = f(probe);
      probe(i, j) = orig - step;
      const double fm = f(probe);
      probe(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

}  // namespace fedbnsl
