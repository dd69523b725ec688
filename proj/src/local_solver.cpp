#include "fedbnsl/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fedbnsl/numerics.hpp"

namespace fedbnsl {

Matrix smoothness_constants(const ParticipantData& data, double rho2) {
  if (!(rho2 > 0.0)) throw std::invalid_argument("smoothness_constants: rho2 must be > 0");
  const std::size_t d = data.dim();
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const double mi = data.column_sq_norms[i] / static_cast<double>(data.n()) + rho2;
    for (std::size_t j = 0; j < d; ++j) m(i, j) = mi;
  }
  return m;
}

LocalProblem make_local_problem(const ParticipantData& data, Matrix consensus, Matrix dual,
                                double rho2, double lambda, double gamma) {
  if (!(rho2 > 0.0)) throw std::invalid_argument("make_local_problem: rho2 must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("make_local_problem: lambda must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("make_local_problem: gamma must be in (0, 1]");
  LocalProblem prob;
  prob.sigma = scaled_gram(data.samples);
  prob.n = data.n();
  prob.smoothness = smoothness_constants(data, rho2);
  require_same_shape(prob.sigma, consensus, "make_local_problem: consensus");
  require_same_shape(prob.sigma, dual, "make_local_problem: dual");
  prob.consensus = std::move(consensus);
  prob.dual = std::move(dual);
  prob.rho2 = rho2;
  prob.lambda = lambda;
  prob.gamma = gamma;
  return prob;
}

Matrix smooth_gradient(const LocalProblem& prob, const Matrix& b) {
  require_same_shape(prob.sigma, b, "smooth_gradient");
  Matrix g = matmul(prob.sigma, b);
  g -= prob.sigma;  // Sigma (B - I)
  const std::size_t d = b.rows();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      g(i, j) += prob.dual(i, j) + prob.rho2 * (b(i, j) - prob.consensus(i, j));
  return g;
}

double local_objective(const LocalProblem& prob, const Matrix& b) {
  require_same_shape(prob.sigma, b, "local_objective");
  const std::size_t d = b.rows();
  // (1/2n)||X - XB||^2 = (1/2) tr((I-B)^T Sigma (I-B))
  Matrix imb = Matrix::identity(d);
  imb -= b;
  const double quad = 0.5 * frobenius_dot(imb, matmul(prob.sigma, imb));
  double val = quad;
  double l1 = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = b(i, j) - prob.consensus(i, j);
      val += prob.dual(i, j) * diff + 0.5 * prob.rho2 * diff * diff;
      if (i != j) l1 += std::abs(b(i, j));
    }
  return val + prob.lambda * l1;
}

namespace {

// Score of a full prox step at one coordinate given its gradient.
inline double score_from_gradient(double m, double lambda, double b, double g) {
  const double z = soft_threshold(b - g / m, lambda / m);
  return std::sqrt(m) * std::abs(z - b);
}

}  // namespace

double coordinate_score(const LocalProblem& prob, const Matrix& b, std::size_t i, std::size_t j) {
  if (i >= b.rows() || j >= b.cols())
    throw std::out_of_range("coordinate_score: coordinate out of range");
  if (i == j) return -std::numeric_limits<double>::infinity();
  // Single-coordinate gradient, same formula as the full smooth_gradient.
  double g = -prob.sigma(i, j);
  for (std::size_t k = 0; k < b.rows(); ++k) g += prob.sigma(i, k) * b(k, j);
  g += prob.dual(i, j) + prob.rho2 * (b(i, j) - prob.consensus(i, j));
  return score_from_gradient(prob.smoothness(i, j), prob.lambda, b(i, j), g);
}

double clip_gradient_coordinate(double g, double m_ij, double sum_m, double c) {
  if (!(m_ij > 0.0) || !(sum_m > 0.0))
    throw std::invalid_argument("clip_gradient_coordinate: smoothness values must be > 0");
  if (!(c > 0.0)) throw std::invalid_argument("clip_gradient_coordinate: clip level must be > 0");
  const double c_ij = std::sqrt(m_ij / sum_m) * c;
  return std::clamp(g, -c_ij, c_ij);
}

namespace {

struct DpHooks {
  const NoiseScales* scales = nullptr;
  const Matrix* clip = nullptr;  // per-coordinate thresholds; +inf entries disable
  RngStream* rng = nullptr;
  ZcdpAccount* account = nullptr;
};

// Shared greedy kernel. The private path differs only by the hook effects;
// zeroed-out hooks perform the identical floating-point operations as the
// non-private path (clamping to +/-inf and adding no noise), which is what
// makes the zero-noise equality exact.
void pgcd_iterate(const LocalProblem& prob, Matrix& b, const DpHooks* dp, std::size_t* out_row,
                  std::size_t* out_col) {
  const std::size_t d = b.rows();
  Matrix g = smooth_gradient(prob, b);
  if (dp) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c_ij = (*dp->clip)(i, j);
        g(i, j) = std::clamp(g(i, j), -c_ij, c_ij);
      }
  }

  double best = -std::numeric_limits<double>::infinity();
  std::size_t bi = 0, bj = 1;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) continue;  // self-loops are never candidates
      double s = score_from_gradient(prob.smoothness(i, j), prob.lambda, b(i, j), g(i, j));
      if (dp) {
        const double scale = dp->scales->gumbel_scale(i, j);
        if (scale > 0.0) s += sample_gumbel(scale, *dp->rng);
      }
      // Strict comparison: ties go to the lowest row-major coordinate.
      if (s > best) {
        best = s;
        bi = i;
        bj = j;
      }
    }

  double gsel = g(bi, bj);
  if (dp) {
    if (dp->scales->sigma > 0.0) gsel += sample_gaussian(dp->scales->sigma, *dp->rng);
    if (dp->account && dp->scales->sigma > 0.0) {
      const double rho = zcdp_of_gaussian(dp->scales->delta_sensitivity, dp->scales->sigma);
      dp->account->log(QueryKind::kSelection, rho);
      dp->account->log(QueryKind::kUpdate, rho);
    }
  }

  const double m = prob.smoothness(bi, bj);
  const double step = prob.gamma / m;
  b(bi, bj) = soft_threshold(b(bi, bj) - step * gsel, prob.lambda * step);
  if (out_row) *out_row = bi;
  if (out_col) *out_col = bj;
}

void check_pgcd_inputs(const LocalProblem& prob, const Matrix& b0, int k) {
  require_same_shape(prob.sigma, b0, "run_pgcd: starting point");
  if (b0.rows() < 2) throw std::invalid_argument("run_pgcd: need at least 2 variables");
  if (k < 1) throw std::invalid_argument("run_pgcd: K must be >= 1");
}

}  // namespace

PgcdStep pgcd_step(const LocalProblem& prob, const Matrix& b) {
  require_same_shape(prob.sigma, b, "pgcd_step");
  if (b.rows() < 2) throw std::invalid_argument("pgcd_step: need at least 2 variables");
  PgcdStep out;
  out.b = b;
  pgcd_iterate(prob, out.b, nullptr, &out.row, &out.col);
  return out;
}

Matrix run_pgcd(const LocalProblem& prob, Matrix b0, int k) {
  check_pgcd_inputs(prob, b0, k);
  for (int it = 0; it < k; ++it) pgcd_iterate(prob, b0, nullptr, nullptr, nullptr);
  return b0;
}

Matrix run_dp_pgcd(const LocalProblem& prob, Matrix b0, int k, const NoiseScales& scales,
                   const Matrix& clip_thresholds, RngStream& rng, ZcdpAccount* account) {
  check_pgcd_inputs(prob, b0, k);
  require_same_shape(prob.sigma, clip_thresholds, "run_dp_pgcd: clip thresholds");
  require_same_shape(prob.sigma, scales.gumbel_scale, "run_dp_pgcd: gumbel scales");
  DpHooks dp{&scales, &clip_thresholds, &rng, account};
  for (int it = 0; it < k; ++it) pgcd_iterate(prob, b0, &dp, nullptr, nullptr);
  return b0;
}

}  // namespace fedbnsl
