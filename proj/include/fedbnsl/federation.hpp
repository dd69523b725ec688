#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fedbnsl/matrix.hpp"
#include "fedbnsl/model.hpp"

namespace fedbnsl {

// The consensus optimizer left double range; the message names the round.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Covariance reconstruction hit a singular B - I.
struct AttackFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- sparse message codec ----

// Nonzero entries of a d x d matrix as (flat row-major index, value) pairs
// with strictly increasing indices.
struct SparseUpdate {
  std::size_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;
};

// Bytes to address one flat index in [0, d^2): ceil(log2(d^2) / 8).
std::size_t index_bytes(std::size_t d);

// |entries| * (8 + index_bytes(dim)); the zero matrix costs 0 bytes.
std::uint64_t sparse_message_bytes(const SparseUpdate& u);

// One dense d x d float matrix: d^2 * 8. No index overhead.
std::uint64_t dense_message_bytes(std::size_t d);

// Zeroes entries with |x| <= tol. Run on a matrix before encoding it, and the
// sender keeps the stripped copy, so both ends hold bit-identical state.
Matrix strip_small(Matrix m, double tol);

// decode(encode(M)) == M exactly for any finite matrix with no stored zeros.
SparseUpdate encode_sparse(const Matrix& m);
// Throws std::invalid_argument on out-of-range or non-increasing indices.
Matrix decode_sparse(const SparseUpdate& u);

// ---- server side ----

struct ServerState {
  Matrix w;
  double alpha = 0.0;        // dual on the acyclicity constraint h(W) = 0
  std::vector<Matrix> beta;  // one consensus dual per participant
  int round = 0;
};

// sum_p [tr(beta_p (B_p - W)^T) + (rho2/2)||B_p - W||_F^2]
//   + alpha h(W) + (rho1/2) h(W)^2.
// Returns +infinity when the matrix exponential overflows, so a line search
// treats such points as a wall instead of crashing.
double server_objective(const Matrix& w, const std::vector<Matrix>& locals,
                        const std::vector<Matrix>& beta, double alpha, double rho1, double rho2);

// sum_p [rho2 (W - B_p) - beta_p] + (alpha + rho1 h(W)) grad_h(W).
Matrix server_objective_gradient(const Matrix& w, const std::vector<Matrix>& locals,
                                 const std::vector<Matrix>& beta, double alpha, double rho1,
                                 double rho2);

struct WUpdateResult {
  Matrix w;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Quasi-Newton minimization of server_objective in W, started from whichever
// of {state.w, mean of locals} scores lower, so the result never does worse
// than the consensus mean.
WUpdateResult server_w_update(const ServerState& state, const std::vector<Matrix>& locals,
                              double rho1, double rho2);

// alpha += rho1 h(w_new); beta_p += rho2 (B_p - w_new); stores w_new and
// advances the round counter. Returns h(w_new).
double dual_updates(ServerState& state, const Matrix& w_new, const std::vector<Matrix>& locals,
                    double rho1, double rho2);

// ---- orchestration ----

// T rounds of: local sparse solves (private when privacy.enabled), sparse
// uplink of each B_p, server W-update, dual updates, sparse downlink of W.
// Bytes are counted on the encoded messages; every matrix crossing the wire
// passes through strip_small(., 1e-12) and the codec.
RunRecord run_fed_sparse_bnsl(const std::vector<ParticipantData>& participants,
                              const AdmmHyperparams& hp, const PrivacyBudget& privacy,
                              std::uint64_t seed);

// One Gaussian-mechanism release of each participant's second-moment matrix:
// i.i.d. noise on the upper triangle (mirrored below) with std calibrated for
// (epsilon, delta) at Frobenius sensitivity bound_b. The noised matrix is
// projected onto the PSD cone afterwards (post-processing) so the baseline's
// SPD local solve stays well-posed.
struct CovarianceDpParams {
  double epsilon = 1.0;
  double delta = 0.0;  // 0 means "use 1/n_p^2 at run time"
  double bound_b = 7.0;
};

// Dense consensus baseline: the local step is the closed form
// B_p = (Sigma_p + rho2 I)^{-1} (rho2 W - beta_p + Sigma_p), messages are
// dense d x d matrices both directions (2 P d^2 8 bytes per round), and the
// l1 strength is ignored. With privacy set, each Sigma_p is noised once up
// front and the rest of the run touches no raw data.
RunRecord run_fed_bnsl_baseline(const std::vector<ParticipantData>& participants,
                                const AdmmHyperparams& hp,
                                const std::optional<CovarianceDpParams>& privacy,
                                std::uint64_t seed);

// What a curious server can do with one observed local estimate:
// (B - I)^{-1} (rho (W - B) - beta), which equals the sender's second-moment
// matrix exactly when B solves the dense local step. Throws
// AttackFailureError when B - I is singular to tolerance.
Matrix reconstruct_covariance(const Matrix& b, const Matrix& w, const Matrix& beta, double rho);

}  // namespace fedbnsl
