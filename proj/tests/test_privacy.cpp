#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fedbnsl/privacy.hpp"
#include "support/test_support.hpp"

using namespace fedbnsl;

TEST_CASE("zero-scale gaussian draws nothing from the stream") {
  RngStream a(1, RngPurpose::kTest, 0);
  RngStream b(1, RngPurpose::kTest, 0);
  CHECK(sample_gaussian(0.0, a) == 0.0);
  CHECK(sample_gaussian(0.0, a) == 0.0);
  // Stream a must still be aligned with the untouched stream b.
  CHECK(a.standard_normal() == b.standard_normal());
  CHECK_THROWS_AS(sample_gaussian(-1.0, a), std::invalid_argument);
}

TEST_CASE("gaussian sample moments") {
  RngStream rng(3, RngPurpose::kTest, 1);
  const double sigma = 2.5;
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_gaussian(sigma, rng);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.02));
}

TEST_CASE("gumbel sample moments") {
  // Gumbel(0, b): mean = b * euler_gamma, variance = pi^2 b^2 / 6.
  RngStream rng(4, RngPurpose::kTest, 2);
  const double scale = 1.7;
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_gumbel(scale, rng);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double euler_gamma = 0.57721566490153286;
  CHECK(mean == doctest::Approx(scale * euler_gamma).epsilon(0.02));
  CHECK(var == doctest::Approx(M_PI * M_PI * scale * scale / 6.0).epsilon(0.03));

  CHECK_THROWS_AS(sample_gumbel(0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_gumbel(-1.0, rng), std::invalid_argument);
}

TEST_CASE("zcdp of a gaussian query") {
  CHECK(zcdp_of_gaussian(2.0, 4.0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(zcdp_of_gaussian(0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(zcdp_of_gaussian(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("zcdp to dp conversion and its inverse round-trip") {
  CHECK(zcdp_to_dp(0.0, 0.1) == 0.0);
  // Hand value: rho=0.5, delta=e^{-1}: eps = 0.5 + 2 sqrt(0.5).
  CHECK(zcdp_to_dp(0.5, std::exp(-1.0)) ==
        doctest::Approx(0.5 + 2.0 * std::sqrt(0.5)).epsilon(1e-14));

  for (const double eps : {0.1, 0.5, 1.0, 5.0, 25.0, 80.0}) {
    for (const double delta : {1e-10, 1e-6, 1e-3, 0.4}) {
      const double rho = zcdp_for_dp(eps, delta);
      CHECK(zcdp_to_dp(rho, delta) == doctest::Approx(eps).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(zcdp_to_dp(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(zcdp_for_dp(0.0, 0.5), std::invalid_argument);
}

TEST_CASE("calibrated sigma makes the full run meet its budget exactly") {
  const double eps = 10.0, delta = 1e-6, sensitivity = 0.004;
  const int k = 30, t = 100;
  const double sigma = calibrate_sigma(eps, delta, k, t, sensitivity);

  // Formula spelled out by hand.
  const double l = std::log(1.0 / delta);
  const double expected =
      sensitivity * std::sqrt(static_cast<double>(k * t)) *
      (std::sqrt(l + eps) + std::sqrt(l)) / eps;
  CHECK(sigma == doctest::Approx(expected).epsilon(1e-15));

  // 2 K T queries at Delta^2/(2 sigma^2) compose to exactly eps at delta.
  const double rho_total = 2.0 * k * t * zcdp_of_gaussian(sensitivity, sigma);
  CHECK(zcdp_to_dp(rho_total, delta) == doctest::Approx(eps).epsilon(1e-9));

  CHECK(calibrate_sigma(eps, delta, k, t, 0.0) == 0.0);
}

TEST_CASE("single-release gaussian scale meets its budget exactly") {
  for (const double eps : {0.5, 1.0, 10.0}) {
    const double delta = 1e-5, sens = 0.37;
    const double sigma = gaussian_std_for_dp(eps, delta, sens);
    const double rho = zcdp_of_gaussian(sens, sigma);
    CHECK(zcdp_to_dp(rho, delta) == doctest::Approx(eps).epsilon(1e-9));
  }
  CHECK(gaussian_std_for_dp(1.0, 1e-5, 0.0) == 0.0);
}

TEST_CASE("noise scales follow sigma over root smoothness") {
  Matrix m(2, 2, 4.0);
  m(0, 1) = 16.0;
  const NoiseScales s = make_noise_scales(3.0, 0.1, m);
  CHECK(s.sigma == 3.0);
  CHECK(s.delta_sensitivity == 0.1);
  CHECK(s.gumbel_scale(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(s.gumbel_scale(0, 1) == doctest::Approx(0.75).epsilon(1e-15));

  const NoiseScales off = make_noise_scales(0.0, 0.0, m);
  CHECK(off.gumbel_scale == Matrix(2, 2));

  Matrix bad(1, 1);  // zero smoothness with nonzero sigma is rejected
  CHECK_THROWS_AS(make_noise_scales(1.0, 0.1, bad), std::invalid_argument);
}

TEST_CASE("the account books two queries per coordinate step") {
  const ZcdpAccount acc = account_run(5, 7, 0.01);
  CHECK(acc.queries.size() == 2 * 5 * 7);
  CHECK(acc.rho_total() == doctest::Approx(0.7).epsilon(1e-12));
  int selections = 0, updates = 0;
  for (const auto& [kind, rho] : acc.queries) {
    if (kind == QueryKind::kSelection) ++selections;
    if (kind == QueryKind::kUpdate) ++updates;
  }
  CHECK(selections == 35);
  CHECK(updates == 35);
}

TEST_CASE("private smoothness estimate approaches the exact one as noise vanishes") {
  // 3 columns of known scale.
  Matrix x(4, 3);
  const double vals[4][3] = {{1, 2, 0.5}, {-1, 1, 0.25}, {2, -2, 0}, {0, 1, -0.5}};
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 3; ++j) x(k, j) = vals[k][j];
  const ParticipantData data = make_participant_data(x);
  const double rho2 = 1.0;

  // Exact column second moments: 6/4, 10/4, 0.5625/4.
  const std::vector<double> bounds(3, 5.0);  // above every squared entry: no clipping
  RngStream rng(5, RngPurpose::kSmoothness, 0);
  const Matrix m = private_smoothness(data, rho2, bounds, 1e12, 1e-3, rng);
  CHECK(m(0, 0) == doctest::Approx(1.5 + rho2).epsilon(1e-4));
  CHECK(m(1, 2) == doctest::Approx(2.5 + rho2).epsilon(1e-4));
  CHECK(m(2, 1) == doctest::Approx(0.140625 + rho2).epsilon(1e-3));
  // Row-constant layout: the (i, j) entry depends only on predictor i.
  CHECK(m(0, 0) == m(0, 1));
  CHECK(m(0, 1) == m(0, 2));

  // Clipping caps each squared entry: bound 1 clips column 0 to
  // (1 + 1 + 1 + 0)/4.
  const std::vector<double> tight(3, 1.0);
  RngStream rng2(5, RngPurpose::kSmoothness, 1);
  const Matrix mc = private_smoothness(data, rho2, tight, 1e12, 1e-3, rng2);
  CHECK(mc(0, 0) == doctest::Approx(0.75 + rho2).epsilon(1e-4));

  // The estimate never falls below rho2 no matter the noise sign.
  RngStream rng3(6, RngPurpose::kSmoothness, 2);
  const Matrix noisy = private_smoothness(data, rho2, tight, 0.01, 1e-3, rng3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(noisy(i, j) >= rho2);
}

TEST_CASE("private smoothness release scale spelled out by hand") {
  const double l = std::log(1.0 / 1e-4);
  const double expected =
      (2.0 / 100.0) * std::sqrt(5.0) * (std::sqrt(l + 3.0) + std::sqrt(l)) / (std::sqrt(2.0) * 3.0);
  CHECK(private_smoothness_std(2.0, 100, 5, 3.0, 1e-4) == doctest::Approx(expected).epsilon(1e-15));
}
