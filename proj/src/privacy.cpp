#include "fedbnsl/privacy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedbnsl {

double sample_gaussian(double stddev, RngStream& rng) {
  if (!(stddev >= 0.0)) throw std::invalid_argument("sample_gaussian: stddev must be >= 0");
  if (stddev == 0.0) return 0.0;
  return stddev * rng.standard_normal();
}

double sample_gumbel(double scale, RngStream& rng) {
  if (!(scale > 0.0)) throw std::invalid_argument("sample_gumbel: scale must be > 0");
  return -scale * std::log(-std::log(rng.uniform01()));
}

double zcdp_of_gaussian(double sensitivity, double stddev) {
  if (!(sensitivity >= 0.0)) throw std::invalid_argument("zcdp_of_gaussian: sensitivity must be >= 0");
  if (sensitivity == 0.0) return 0.0;
  if (!(stddev > 0.0))
    throw std::invalid_argument("zcdp_of_gaussian: stddev must be > 0 for nonzero sensitivity");
  const double r = sensitivity / stddev;
  return 0.5 * r * r;
}

double zcdp_to_dp(double rho, double delta) {
  if (!(rho >= 0.0)) throw std::invalid_argument("zcdp_to_dp: rho must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("zcdp_to_dp: delta must be in (0, 1)");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

double zcdp_for_dp(double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("zcdp_for_dp: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("zcdp_for_dp: delta must be in (0, 1)");
  const double l = std::log(1.0 / delta);
  const double root = std::sqrt(l + epsilon) - std::sqrt(l);
  return root * root;
}

double calibrate_sigma(double epsilon, double delta, int local_iterations, int rounds,
                       double sensitivity) {
  if (!(sensitivity >= 0.0)) throw std::invalid_argument("calibrate_sigma: sensitivity must be >= 0");
  if (sensitivity == 0.0) return 0.0;
  if (!(epsilon > 0.0)) throw std::invalid_argument("calibrate_sigma: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("calibrate_sigma: delta must be in (0, 1)");
  if (local_iterations < 1 || rounds < 1)
    throw std::invalid_argument("calibrate_sigma: K and T must be >= 1");
  const double l = std::log(1.0 / delta);
  const double kt = static_cast<double>(local_iterations) * static_cast<double>(rounds);
  return sensitivity * std::sqrt(kt) * (std::sqrt(l + epsilon) + std::sqrt(l)) / epsilon;
}

double gaussian_std_for_dp(double epsilon, double delta, double sensitivity) {
  if (!(sensitivity >= 0.0))
    throw std::invalid_argument("gaussian_std_for_dp: sensitivity must be >= 0");
  if (sensitivity == 0.0) return 0.0;
  // Exact single-query inversion: sigma = Delta / sqrt(2 rho*(eps, delta)).
  return sensitivity / std::sqrt(2.0 * zcdp_for_dp(epsilon, delta));
}

NoiseScales make_noise_scales(double sigma, double delta_sensitivity, const Matrix& smoothness) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("make_noise_scales: sigma must be >= 0");
  NoiseScales out;
  out.sigma = sigma;
  out.delta_sensitivity = delta_sensitivity;
  out.gumbel_scale = Matrix(smoothness.rows(), smoothness.cols());
  if (sigma == 0.0) return out;
  for (std::size_t i = 0; i < smoothness.rows(); ++i)
    for (std::size_t j = 0; j < smoothness.cols(); ++j) {
      const double m = smoothness(i, j);
      if (!(m > 0.0))
        throw std::invalid_argument("make_noise_scales: smoothness entries must be > 0");
      out.gumbel_scale(i, j) = sigma / std::sqrt(m);
    }
  return out;
}

double ZcdpAccount::rho_total() const {
  double s = 0.0;
  for (const auto& [kind, rho] : queries) s += rho;
  return s;
}

ZcdpAccount account_run(int local_iterations, int rounds, double per_query_rho) {
  if (local_iterations < 0 || rounds < 0)
    throw std::invalid_argument("account_run: K and T must be >= 0");
  if (!(per_query_rho >= 0.0)) throw std::invalid_argument("account_run: rho must be >= 0");
  ZcdpAccount acc;
  for (int t = 0; t < rounds; ++t)
    for (int k = 0; k < local_iterations; ++k) {
      acc.log(QueryKind::kSelection, per_query_rho);
      acc.log(QueryKind::kUpdate, per_query_rho);
    }
  return acc;
}

double private_smoothness_std(double bound, std::size_t n, std::size_t d, double epsilon,
                              double delta) {
  if (!(bound > 0.0)) throw std::invalid_argument("private_smoothness_std: bound must be > 0");
  if (n < 1 || d < 1) throw std::invalid_argument("private_smoothness_std: n and d must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("private_smoothness_std: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("private_smoothness_std: delta must be in (0, 1)");
  const double l = std::log(1.0 / delta);
  return (bound / static_cast<double>(n)) * std::sqrt(static_cast<double>(d)) *
         (std::sqrt(l + epsilon) + std::sqrt(l)) / (std::sqrt(2.0) * epsilon);
}

Matrix private_smoothness(const ParticipantData& data, double rho2, std::span<const double> bounds,
                          double epsilon, double delta, RngStream& rng) {
  const std::size_t d = data.dim();
  const std::size_t n = data.n();
  if (bounds.size() != d)
    throw std::invalid_argument("private_smoothness: expected one bound per column, got " +
                                std::to_string(bounds.size()));
  if (!(rho2 > 0.0)) throw std::invalid_argument("private_smoothness: rho2 must be > 0");

  // One noisy release per column; d-fold composition is already inside the
  // per-release scale.
  std::vector<double> noisy(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double b = bounds[c];
    if (!(b > 0.0)) throw std::invalid_argument("private_smoothness: bounds must be > 0");
    double clipped = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double sq = data.samples(k, c) * data.samples(k, c);
      clipped += std::min(sq, b);
    }
    clipped /= static_cast<double>(n);
    const double std_c = private_smoothness_std(b, n, d, epsilon, delta);
    double est = clipped + rho2 + sample_gaussian(std_c, rng);
    if (est < rho2) est = rho2;  // keep coordinate steps well defined
    noisy[c] = est;
  }

  // Coordinate (i,j) moves the coefficient multiplying column i, so its
  // smoothness is governed by predictor column i.
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = noisy[i];
  return m;
}

}  // namespace fedbnsl
