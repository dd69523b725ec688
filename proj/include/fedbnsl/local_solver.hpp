#pragma once

#include <cstdint>

#include "fedbnsl/matrix.hpp"
#include "fedbnsl/model.hpp"
#include "fedbnsl/privacy.hpp"
#include "fedbnsl/rng.hpp"

namespace fedbnsl {

// One participant's view of the consensus subproblem:
//   minimize (1/2n)||X - XB||_F^2 + tr(beta (B - W)^T)
//            + (rho2/2)||B - W||_F^2 + lambda ||B||_1
// over matrices B with zero diagonal. The quadratic loss enters only through
// the second-moment matrix, so that is what gets stored.
struct LocalProblem {
  Matrix sigma;       // (1/n) X^T X of the participant's samples
  std::size_t n = 0;  // sample count (drives DP sensitivity)
  Matrix smoothness;  // M_{i,j}; equal across j for fixed predictor row i
  Matrix consensus;   // W
  Matrix dual;        // beta_p
  double rho2 = 1.0;
  double lambda = 0.0;
  double gamma = 1.0;  // step damping in (0, 1]
};

LocalProblem make_local_problem(const ParticipantData& data, Matrix consensus, Matrix dual,
                                double rho2, double lambda, double gamma);

// M_{i,j} = column_sq_norms[i] / n + rho2: the exact curvature of the
// smooth part along coordinate (i,j) (predictor column i), so the full prox
// step 1/M_{i,j} never overshoots.
Matrix smoothness_constants(const ParticipantData& data, double rho2);

// Gradient of the smooth part: Sigma (B - I) + beta + rho2 (B - W).
Matrix smooth_gradient(const LocalProblem& prob, const Matrix& b);

// Value of the full local objective (smooth part plus lambda ||B||_1);
// diagnostic and test oracle hook.
double local_objective(const LocalProblem& prob, const Matrix& b);

// Greedy selection score sqrt(M) |prox_{lambda/M}(B - grad/M) - B| at one
// coordinate. Diagonal coordinates return -infinity (never selected).
double coordinate_score(const LocalProblem& prob, const Matrix& b, std::size_t i, std::size_t j);

// Clip threshold sqrt(M_{i,j} / sum_M) * c applied symmetrically to one
// gradient coordinate; c = +infinity disables clipping exactly.
double clip_gradient_coordinate(double g, double m_ij, double sum_m, double c);

struct PgcdStep {
  Matrix b;
  std::size_t row = 0, col = 0;  // coordinate updated
};

// One greedy step: pick the off-diagonal coordinate with the largest score
// (ties resolved to the lowest row-major coordinate), then apply the damped
// prox update prox_{lambda*gamma/M}(B - (gamma/M) grad).
PgcdStep pgcd_step(const LocalProblem& prob, const Matrix& b);

// k greedy steps from b0. Requires k >= 1.
Matrix run_pgcd(const LocalProblem& prob, Matrix b0, int k);

// Private variant: gradients are clipped coordinate-wise, selection scores get
// Gumbel(0, beta_{i,j}) noise, and the applied gradient gets N(0, sigma^2).
// With sigma = 0, all Gumbel scales 0 and infinite clip thresholds, the
// output is bit-identical to run_pgcd (same code path, no draws consumed).
Matrix run_dp_pgcd(const LocalProblem& prob, Matrix b0, int k, const NoiseScales& scales,
                   const Matrix& clip_thresholds, RngStream& rng, ZcdpAccount* account = nullptr);

}  // namespace fedbnsl
