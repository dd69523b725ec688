#include "fedbnsl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedbnsl/lbfgs.hpp"
#include "fedbnsl/local_solver.hpp"
#include "fedbnsl/numerics.hpp"
#include "fedbnsl/privacy.hpp"
#include "fedbnsl/rng.hpp"

namespace fedbnsl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Entries at or below this magnitude are dropped before a matrix is encoded.
constexpr double kStripTol = 1e-12;

}  // namespace

std::size_t index_bytes(std::size_t d) {
  const std::size_t cells = d * d;
  std::size_t bits = 0;
  while (cells > (std::size_t{1} << bits)) ++bits;  // smallest b with 2^b >= d^2
  return (bits + 7) / 8;
}

std::uint64_t sparse_message_bytes(const SparseUpdate& u) {
  return static_cast<std::uint64_t>(u.entries.size()) * (8 + index_bytes(u.dim));
}

std::uint64_t dense_message_bytes(std::size_t d) {
  return static_cast<std::uint64_t>(d) * d * 8;
}

Matrix strip_small(Matrix m, double tol) {
  for (double& v : m.entries())
    if (std::abs(v) <= tol) v = 0.0;
  return m;
}

SparseUpdate encode_sparse(const Matrix& m) {
  require_square(m, "encode_sparse");
  SparseUpdate u;
  u.dim = m.rows();
  std::uint32_t idx = 0;
  for (const double v : m.entries()) {
    if (v != 0.0) u.entries.emplace_back(idx, v);
    ++idx;
  }
  return u;
}

Matrix decode_sparse(const SparseUpdate& u) {
  const std::size_t cells = u.dim * u.dim;
  Matrix m(u.dim, u.dim);
  std::int64_t prev = -1;
  for (const auto& [idx, value] : u.entries) {
    if (idx >= cells) throw std::invalid_argument("decode_sparse: index out of range");
    if (static_cast<std::int64_t>(idx) <= prev)
      throw std::invalid_argument("decode_sparse: indices must be strictly increasing");
    prev = idx;
    m.entries()[idx] = value;
  }
  return m;
}

namespace {

struct ServerEval {
  double f = 0.0;
  Matrix grad;
};

// Shared evaluation of the consensus objective and its gradient; false when
// the matrix exponential overflows.
bool server_eval(const Matrix& w, const std::vector<Matrix>& locals,
                 const std::vector<Matrix>& beta, double alpha, double rho1, double rho2,
                 ServerEval* out) {
  Acyclicity acy;
  try {
    acy = acyclicity_h(w);
  } catch (const OverflowError&) {
    return false;
  }

  double f = alpha * acy.value + 0.5 * rho1 * acy.value * acy.value;
  Matrix grad = acy.gradient * (alpha + rho1 * acy.value);
  for (std::size_t p = 0; p < locals.size(); ++p) {
    for (std::size_t k = 0; k < w.entries().size(); ++k) {
      const double diff = locals[p].entries()[k] - w.entries()[k];
      f += beta[p].entries()[k] * diff + 0.5 * rho2 * diff * diff;
      grad.entries()[k] += -beta[p].entries()[k] - rho2 * diff;
    }
  }
  out->f = f;
  out->grad = std::move(grad);
  return true;
}

void check_server_args(const Matrix& w, const std::vector<Matrix>& locals,
                       const std::vector<Matrix>& beta) {
  require_square(w, "server objective");
  if (locals.empty()) throw std::invalid_argument("server objective: no local matrices");
  if (beta.size() != locals.size())
    throw std::invalid_argument("server objective: one dual per local matrix required");
  for (const Matrix& m : locals) require_same_shape(w, m, "server objective local");
  for (const Matrix& m : beta) require_same_shape(w, m, "server objective dual");
}

}  // namespace

double server_objective(const Matrix& w, const std::vector<Matrix>& locals,
                        const std::vector<Matrix>& beta, double alpha, double rho1, double rho2) {
  check_server_args(w, locals, beta);
  ServerEval ev;
  if (!server_eval(w, locals, beta, alpha, rho1, rho2, &ev)) return kInf;
  return ev.f;
}

Matrix server_objective_gradient(const Matrix& w, const std::vector<Matrix>& locals,
                                 const std::vector<Matrix>& beta, double alpha, double rho1,
                                 double rho2) {
  check_server_args(w, locals, beta);
  ServerEval ev;
  if (!server_eval(w, locals, beta, alpha, rho1, rho2, &ev))
    throw OverflowError("server objective gradient: matrix exponential overflow");
  return ev.grad;
}

WUpdateResult server_w_update(const ServerState& state, const std::vector<Matrix>& locals,
                              double rho1, double rho2) {
  check_server_args(state.w, locals, state.beta);
  const std::size_t d = state.w.rows();

  // Start from whichever of {previous W, mean of locals} scores lower. The
  // mean is the exact minimizer of the quadratic part when duals vanish, so
  // the returned point can never do worse than it.
  Matrix mean = locals[0];
  for (std::size_t p = 1; p < locals.size(); ++p) mean += locals[p];
  mean *= 1.0 / static_cast<double>(locals.size());
  const double f_prev = server_objective(state.w, locals, state.beta, state.alpha, rho1, rho2);
  const double f_mean = server_objective(mean, locals, state.beta, state.alpha, rho1, rho2);
  const Matrix& start = (f_mean < f_prev) ? mean : state.w;

  const LbfgsObjective fn = [&](const std::vector<double>& x, std::vector<double>& g) -> double {
    Matrix w(d, d);
    std::copy(x.begin(), x.end(), w.entries().begin());
    ServerEval ev;
    if (!server_eval(w, locals, state.beta, state.alpha, rho1, rho2, &ev)) return kInf;
    g.assign(ev.grad.entries().begin(), ev.grad.entries().end());
    return ev.f;
  };

  const LbfgsResult res =
      lbfgs_minimize(fn, {start.entries().begin(), start.entries().end()}, LbfgsOptions{});

  WUpdateResult out;
  out.w = Matrix(d, d);
  std::copy(res.x.begin(), res.x.end(), out.w.entries().begin());
  out.objective = res.f;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

double dual_updates(ServerState& state, const Matrix& w_new, const std::vector<Matrix>& locals,
                    double rho1, double rho2) {
  check_server_args(w_new, locals, state.beta);
  const double h = acyclicity_h(w_new).value;
  state.alpha += rho1 * h;
  for (std::size_t p = 0; p < locals.size(); ++p) {
    Matrix step = locals[p] - w_new;
    step *= rho2;
    state.beta[p] += step;
  }
  state.w = w_new;
  state.round += 1;
  return h;
}

namespace {

std::size_t checked_dimension(const std::vector<ParticipantData>& participants) {
  if (participants.empty()) throw std::invalid_argument("run: at least one participant required");
  const std::size_t d = participants[0].dim();
  for (const auto& p : participants)
    if (p.dim() != d) throw std::invalid_argument("run: participants disagree on dimension");
  return d;
}

void check_finite_local(const Matrix& b, int round, std::size_t p) {
  if (!all_finite(b))
    throw DivergenceError("local estimate of participant " + std::to_string(p) +
                          " diverged at round " + std::to_string(round));
}

void check_finite_w(const WUpdateResult& wu, int round) {
  if (!std::isfinite(wu.objective) || !all_finite(wu.w))
    throw DivergenceError("consensus update diverged at round " + std::to_string(round));
}

// Per-participant private-solver setup: clip thresholds, calibrated noise
// scales, the effective delta, and the per-query zCDP cost.
struct DpSetup {
  Matrix clip;
  NoiseScales scales;
  double delta_eff = 0.0;
};

DpSetup make_dp_setup(const PrivacyBudget& privacy, const LocalProblem& prob,
                      const AdmmHyperparams& hp) {
  const std::size_t d = prob.smoothness.rows();
  DpSetup setup;
  if (privacy.zero_noise) {
    setup.clip = Matrix(d, d, kInf);
    setup.scales = make_noise_scales(0.0, 0.0, prob.smoothness);
    return setup;
  }
  if (!(privacy.epsilon > 0.0)) throw std::invalid_argument("privacy: epsilon must be > 0");
  if (!(privacy.delta >= 0.0 && privacy.delta < 1.0))
    throw std::invalid_argument("privacy: delta must be in [0, 1)");
  if (!(privacy.clip_c > 0.0)) throw std::invalid_argument("privacy: clip threshold must be > 0");

  const double n = static_cast<double>(prob.n);
  setup.delta_eff = privacy.delta == 0.0 ? 1.0 / (n * n) : privacy.delta;

  double sum_m = 0.0;
  for (const double m : prob.smoothness.entries()) sum_m += m;
  setup.clip = Matrix(d, d);
  for (std::size_t k = 0; k < setup.clip.entries().size(); ++k)
    setup.clip.entries()[k] = std::sqrt(prob.smoothness.entries()[k] / sum_m) * privacy.clip_c;

  // A clipped gradient coordinate moves by at most 2 max C_{i,j} / n when one
  // sample changes; that uniform bound calibrates a single update scale.
  const double sensitivity = 2.0 * max_abs(setup.clip) / n;
  const double sigma = calibrate_sigma(privacy.epsilon, setup.delta_eff, hp.local_iterations,
                                       hp.rounds, sensitivity);
  setup.scales = make_noise_scales(sigma, sensitivity, prob.smoothness);
  return setup;
}

}  // namespace

RunRecord run_fed_sparse_bnsl(const std::vector<ParticipantData>& participants,
                              const AdmmHyperparams& hp, const PrivacyBudget& privacy,
                              std::uint64_t seed) {
  hp.validate();
  const std::size_t d = checked_dimension(participants);
  const std::size_t cohort = participants.size();

  std::vector<LocalProblem> probs;
  probs.reserve(cohort);
  for (const auto& part : participants)
    probs.push_back(
        make_local_problem(part, Matrix(d, d), Matrix(d, d), hp.rho2, hp.lambda, hp.gamma));

  const bool dp = privacy.enabled;
  std::vector<DpSetup> setups(dp ? cohort : 0);
  std::vector<RngStream> rngs;
  std::vector<ZcdpAccount> accounts(dp ? cohort : 0);
  if (dp) {
    rngs.reserve(cohort);
    for (std::size_t p = 0; p < cohort; ++p) {
      setups[p] = make_dp_setup(privacy, probs[p], hp);
      rngs.emplace_back(seed, RngPurpose::kDpSolver, p);
    }
  }

  ServerState state{Matrix(d, d), 0.0, std::vector<Matrix>(cohort, Matrix(d, d)), 0};
  std::vector<Matrix> b_state(cohort, Matrix(d, d));
  std::vector<Matrix> server_locals(cohort);

  RunRecord rec;
  rec.dim = static_cast<int>(d);
  rec.participant_count = static_cast<int>(cohort);
  rec.rounds.reserve(hp.rounds);

  for (int t = 1; t <= hp.rounds; ++t) {
    std::uint64_t bytes_up = 0;
    for (std::size_t p = 0; p < cohort; ++p) {
      probs[p].consensus = state.w;
      probs[p].dual = state.beta[p];
      Matrix b = dp ? run_dp_pgcd(probs[p], b_state[p], hp.local_iterations, setups[p].scales,
                                  setups[p].clip, rngs[p], &accounts[p])
                    : run_pgcd(probs[p], b_state[p], hp.local_iterations);
      check_finite_local(b, t, p);
      b = strip_small(std::move(b), kStripTol);
      const SparseUpdate msg = encode_sparse(b);
      bytes_up += sparse_message_bytes(msg);
      server_locals[p] = decode_sparse(msg);
      b_state[p] = std::move(b);
    }
    if (t == 1) rec.first_round_locals = server_locals;

    const WUpdateResult wu = server_w_update(state, server_locals, hp.rho1, hp.rho2);
    check_finite_w(wu, t);
    const Matrix w_new = strip_small(wu.w, kStripTol);
    const SparseUpdate wmsg = encode_sparse(w_new);
    const std::uint64_t bytes_down = cohort * sparse_message_bytes(wmsg);
    const double h = dual_updates(state, decode_sparse(wmsg), server_locals, hp.rho1, hp.rho2);

    RoundTrace tr;
    tr.round = t;
    tr.w = state.w;
    tr.h_value = h;
    tr.bytes_up = bytes_up;
    tr.bytes_down = bytes_down;
    for (std::size_t p = 0; p < cohort; ++p)
      tr.dual_residual += frobenius_norm(server_locals[p] - state.w);
    tr.w_iterations = wu.iterations;
    tr.w_converged = wu.converged;
    rec.rounds.push_back(std::move(tr));
  }

  const PruneResult pruned = prune(state.w, hp.prune_threshold);
  rec.final_w = state.w;
  rec.final_dag = pruned.dag;
  rec.prune_removed_edges = pruned.removed_edges;

  if (dp) {
    rec.privacy.reserve(cohort);
    for (std::size_t p = 0; p < cohort; ++p) {
      ParticipantPrivacyReport rep;
      rep.sensitivity = setups[p].scales.delta_sensitivity;
      rep.sigma = setups[p].scales.sigma;
      rep.rho_total = accounts[p].rho_total();
      rep.epsilon_achieved =
          rep.rho_total > 0.0 ? zcdp_to_dp(rep.rho_total, setups[p].delta_eff) : 0.0;
      rec.privacy.push_back(rep);
    }
  }
  return rec;
}

RunRecord run_fed_bnsl_baseline(const std::vector<ParticipantData>& participants,
                                const AdmmHyperparams& hp,
                                const std::optional<CovarianceDpParams>& privacy,
                                std::uint64_t seed) {
  hp.validate();
  const std::size_t d = checked_dimension(participants);
  const std::size_t cohort = participants.size();

  RunRecord rec;
  rec.dim = static_cast<int>(d);
  rec.participant_count = static_cast<int>(cohort);
  rec.rounds.reserve(hp.rounds);

  std::vector<Matrix> sigmas(cohort);
  std::vector<Matrix> systems(cohort);  // Sigma_p + rho2 I, constant all run
  for (std::size_t p = 0; p < cohort; ++p) sigmas[p] = scaled_gram(participants[p].samples);

  if (privacy.has_value()) {
    if (!(privacy->epsilon > 0.0)) throw std::invalid_argument("privacy: epsilon must be > 0");
    if (!(privacy->bound_b >= 0.0))
      throw std::invalid_argument("privacy: sensitivity bound must be >= 0");
    rec.privacy.reserve(cohort);
    for (std::size_t p = 0; p < cohort; ++p) {
      const double n = static_cast<double>(participants[p].n());
      const double delta_eff = privacy->delta == 0.0 ? 1.0 / (n * n) : privacy->delta;
      const double sensitivity = privacy->bound_b;
      const double std = gaussian_std_for_dp(privacy->epsilon, delta_eff, sensitivity);
      RngStream rng(seed, RngPurpose::kCovarianceNoise, p);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
          const double z = sample_gaussian(std, rng);
          sigmas[p](i, j) += z;
          if (i != j) sigmas[p](j, i) += z;
        }
      // Post-processing: the noised release can be indefinite, which would
      // break the SPD precondition of the closed-form solve; project back
      // onto the PSD cone (privacy-free, nearest in Frobenius distance).
      if (std > 0.0) sigmas[p] = psd_project(sigmas[p]);
      ParticipantPrivacyReport rep;
      rep.sensitivity = sensitivity;
      rep.sigma = std;
      rep.rho_total = std > 0.0 ? zcdp_of_gaussian(sensitivity, std) : 0.0;
      rep.epsilon_achieved = rep.rho_total > 0.0 ? zcdp_to_dp(rep.rho_total, delta_eff) : 0.0;
      rec.privacy.push_back(rep);
    }
  }

  for (std::size_t p = 0; p < cohort; ++p) {
    systems[p] = sigmas[p];
    for (std::size_t i = 0; i < d; ++i) systems[p](i, i) += hp.rho2;
  }

  ServerState state{Matrix(d, d), 0.0, std::vector<Matrix>(cohort, Matrix(d, d)), 0};
  std::vector<Matrix> locals(cohort);
  const std::uint64_t round_bytes = cohort * dense_message_bytes(d);

  for (int t = 1; t <= hp.rounds; ++t) {
    for (std::size_t p = 0; p < cohort; ++p) {
      Matrix rhs = state.w * hp.rho2 - state.beta[p] + sigmas[p];
      locals[p] = solve_linear_system(systems[p], rhs);
      check_finite_local(locals[p], t, p);
    }
    if (t == 1) rec.first_round_locals = locals;

    const WUpdateResult wu = server_w_update(state, locals, hp.rho1, hp.rho2);
    check_finite_w(wu, t);
    const double h = dual_updates(state, wu.w, locals, hp.rho1, hp.rho2);

    RoundTrace tr;
    tr.round = t;
    tr.w = state.w;
    tr.h_value = h;
    tr.bytes_up = round_bytes;
    tr.bytes_down = round_bytes;
    for (std::size_t p = 0; p < cohort; ++p)
      tr.dual_residual += frobenius_norm(locals[p] - state.w);
    tr.w_iterations = wu.iterations;
    tr.w_converged = wu.converged;
    rec.rounds.push_back(std::move(tr));
  }

  const PruneResult pruned = prune(state.w, hp.prune_threshold);
  rec.final_w = state.w;
  rec.final_dag = pruned.dag;
  rec.prune_removed_edges = pruned.removed_edges;
  return rec;
}

Matrix reconstruct_covariance(const Matrix& b, const Matrix& w, const Matrix& beta, double rho) {
  require_square(b, "reconstruct_covariance");
  require_same_shape(b, w, "reconstruct_covariance");
  require_same_shape(b, beta, "reconstruct_covariance");
  if (!(rho > 0.0)) throw std::invalid_argument("reconstruct_covariance: rho must be > 0");

  Matrix lhs = b;
  for (std::size_t i = 0; i < b.rows(); ++i) lhs(i, i) -= 1.0;
  Matrix rhs = (w - b) * rho - beta;
  try {
    return solve_linear_system(std::move(lhs), std::move(rhs));
  } catch (const SingularMatrixError& e) {
    throw AttackFailureError(std::string("covariance reconstruction failed: ") + e.what());
  }
}

}  // namespace fedbnsl
