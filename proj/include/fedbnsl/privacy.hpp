#pragma once

#include <span>
#include <vector>

#include "fedbnsl/matrix.hpp"
#include "fedbnsl/model.hpp"
#include "fedbnsl/rng.hpp"

namespace fedbnsl {

// Gaussian draw with given standard deviation; std 0 returns exactly 0.0 and
// consumes no randomness, so disabling noise leaves streams untouched.
double sample_gaussian(double stddev, RngStream& rng);

// Gumbel(location 0, scale): -scale * log(-log(U)), U uniform on (0, 1).
// Requires scale > 0.
double sample_gumbel(double scale, RngStream& rng);

// zCDP cost of one Gaussian mechanism query: Delta^2 / (2 sigma^2).
double zcdp_of_gaussian(double sensitivity, double stddev);

// (eps, delta) implied by a zCDP total: eps = rho + 2 sqrt(rho log(1/delta)).
double zcdp_to_dp(double rho, double delta);

// Inverse of zcdp_to_dp in rho: the exact zCDP budget whose conversion at
// delta equals epsilon.
double zcdp_for_dp(double epsilon, double delta);

// Gaussian scale for the two-sided noisy coordinate descent release schedule:
// 2*K*T queries of sensitivity Delta meeting (epsilon, delta) overall.
// sigma = Delta * sqrt(K*T) * (sqrt(log(1/delta)+eps) + sqrt(log(1/delta))) / eps.
double calibrate_sigma(double epsilon, double delta, int local_iterations, int rounds,
                       double sensitivity);

// Gaussian scale for a single release of the given L2 sensitivity meeting
// (epsilon, delta): sensitivity * (sqrt(log(1/delta)+eps) + sqrt(log(1/delta))) / (sqrt(2) eps).
double gaussian_std_for_dp(double epsilon, double delta, double sensitivity);

struct NoiseScales {
  double sigma = 0.0;              // Gaussian scale for gradient updates
  double delta_sensitivity = 0.0;  // per-query gradient sensitivity bound
  Matrix gumbel_scale;             // beta_{i,j} = sigma / sqrt(M_{i,j}); zeros when sigma == 0
};
// Fills per-coordinate Gumbel scales from the smoothness matrix.
NoiseScales make_noise_scales(double sigma, double delta_sensitivity, const Matrix& smoothness);

enum class QueryKind { kSelection, kUpdate, kGaussianRelease };

struct ZcdpAccount {
  std::vector<std::pair<QueryKind, double>> queries;
  void log(QueryKind kind, double rho) { queries.emplace_back(kind, rho); }
  double rho_total() const;
};

// The ledger of a full solver run: K selections and K updates per round, each
// costing per_query_rho.
ZcdpAccount account_run(int local_iterations, int rounds, double per_query_rho);

// Gaussian scale of each clipped-column-norm release inside
// private_smoothness: (bound/n) * sqrt(d) * (sqrt(log(1/delta)+eps) + sqrt(log(1/delta))) / (sqrt(2) eps).
double private_smoothness_std(double bound, std::size_t n, std::size_t d, double epsilon,
                              double delta);

// Differentially private coordinate smoothness estimates: per-column clipped
// second moments plus calibrated Gaussian noise, floored at rho2 so step
// sizes stay valid. bounds has one clip bound per column.
Matrix private_smoothness(const ParticipantData& data, double rho2, std::span<const double> bounds,
                          double epsilon, double delta, RngStream& rng);

}  // namespace fedbnsl
