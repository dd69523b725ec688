#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <tuple>

#include "fedbnsl/datasets.hpp"
#include "fedbnsl/metrics.hpp"
#include "fedbnsl/numerics.hpp"
#include "support/test_support.hpp"

using namespace fedbnsl;
using testsupport::max_abs_diff;

TEST_CASE("structural hamming distance on hand-checked pairs") {
  const BinaryDag chain(3, {{0, 1}, {1, 2}});
  CHECK(shd(chain, chain) == 0);

  // One reversal costs one, not two.
  CHECK(shd(BinaryDag(2, {{0, 1}}), BinaryDag(2, {{1, 0}})) == 1);

  // {0->1, 2->3} vs {1->0}: pair (0,1) reversed (1) + pair (2,3) extra (1).
  CHECK(shd(BinaryDag(4, {{0, 1}, {2, 3}}), BinaryDag(4, {{1, 0}})) == 2);

  // Missing edge costs one.
  CHECK(shd(BinaryDag(3, {{0, 1}}), chain) == 1);
  CHECK(shd(BinaryDag(3), chain) == 2);
}

TEST_CASE("structural hamming distance is a metric on random DAGs") {
  std::vector<BinaryDag> dags;
  for (std::uint64_t s = 0; s < 6; ++s) dags.push_back(generate_er_dag(6, 7, s));
  for (const auto& a : dags)
    for (const auto& b : dags) {
      CHECK(shd(a, b) == shd(b, a));                      // symmetry
      if (a.edges() == b.edges()) CHECK(shd(a, b) == 0);  // identity
      for (const auto& c : dags)
        CHECK(shd(a, c) <= shd(a, b) + shd(b, c));  // triangle inequality
    }
}

TEST_CASE("tpr and fdr conventions") {
  const BinaryDag truth(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});

  // Estimate: 2 correct, 1 reversed, 1 false positive.
  const BinaryDag est(5, {{0, 1}, {1, 2}, {3, 2}, {0, 4}});
  const TprFdr r = tpr_fdr(est, truth);
  CHECK(r.tpr == doctest::Approx(0.5).epsilon(1e-15));   // 2 of 4
  CHECK(r.fdr == doctest::Approx(0.5).epsilon(1e-15));   // (1 reversed + 1 fp) of 4
  CHECK_FALSE(r.no_true_edges);
  CHECK_FALSE(r.no_predicted_edges);

  // 16-of-18 with two reversals: tpr 16/18, fdr 2/18.
  std::vector<Edge> t18, e18;
  for (int i = 0; i < 18; ++i) t18.push_back({i, i + 19});
  for (int i = 0; i < 16; ++i) e18.push_back({i, i + 19});
  e18.push_back({16 + 19, 16});
  e18.push_back({17 + 19, 17});
  const TprFdr big = tpr_fdr(BinaryDag(40, e18), BinaryDag(40, t18));
  CHECK(big.tpr == doctest::Approx(16.0 / 18.0).epsilon(1e-15));
  CHECK(big.fdr == doctest::Approx(2.0 / 18.0).epsilon(1e-15));

  // Degenerate cases carry flags.
  const TprFdr empty_truth = tpr_fdr(BinaryDag(3, {{0, 1}}), BinaryDag(3));
  CHECK(empty_truth.tpr == 1.0);
  CHECK(empty_truth.no_true_edges);
  const TprFdr empty_est = tpr_fdr(BinaryDag(3), BinaryDag(3, {{0, 1}}));
  CHECK(empty_est.fdr == 0.0);
  CHECK(empty_est.no_predicted_edges);
  CHECK(empty_est.tpr == 0.0);
}

TEST_CASE("skeletons and v-structures") {
  // Chain: no collider.
  const SkeletonReport chain = skeleton_and_vstructures(BinaryDag(3, {{0, 1}, {1, 2}}));
  CHECK(chain.skeleton == std::set<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(chain.vstructures.empty());

  // Collider 0 -> 2 <- 1 with 0 and 1 non-adjacent.
  const SkeletonReport collider = skeleton_and_vstructures(BinaryDag(3, {{0, 2}, {1, 2}}));
  CHECK(collider.skeleton == std::set<std::pair<int, int>>{{0, 2}, {1, 2}});
  CHECK(collider.vstructures == std::set<std::tuple<int, int, int>>{{0, 2, 1}});

  // Covered collider: adding 0 -> 1 removes the v-structure.
  const SkeletonReport covered =
      skeleton_and_vstructures(BinaryDag(3, {{0, 2}, {1, 2}, {0, 1}}));
  CHECK(covered.vstructures.empty());
  CHECK(covered.skeleton.size() == 3);

  // Three parents: all C(3,2) = 3 non-adjacent pairs are v-structures.
  const SkeletonReport triple =
      skeleton_and_vstructures(BinaryDag(4, {{0, 3}, {1, 3}, {2, 3}}));
  CHECK(triple.vstructures ==
        std::set<std::tuple<int, int, int>>{{0, 3, 1}, {0, 3, 2}, {1, 3, 2}});
}

TEST_CASE("refit recovers exact linear weights") {
  // Every variable is an exact linear function of its parents (zero
  // residual), so least squares on the true structure must reproduce the
  // weights to numerical precision. Two independent roots keep each parent
  // design full rank.
  Matrix w(4, 4);
  w(0, 2) = 1.2;
  w(1, 2) = -0.7;
  w(0, 3) = 0.4;
  w(2, 3) = 1.1;

  RngStream rng(5, RngPurpose::kTest, 3);
  Matrix x(200, 4);
  for (std::size_t k = 0; k < 200; ++k) {
    x(k, 0) = rng.standard_normal();
    x(k, 1) = rng.standard_normal();
    x(k, 2) = w(0, 2) * x(k, 0) + w(1, 2) * x(k, 1);
    x(k, 3) = w(0, 3) * x(k, 0) + w(2, 3) * x(k, 2);
  }

  const BinaryDag structure(4, {{0, 2}, {1, 2}, {0, 3}, {2, 3}});
  const Matrix refit = personalization_refit(structure, make_participant_data(x));
  CHECK(max_abs_diff(refit, w) < 1e-10);

  // Non-edges stay exactly zero.
  CHECK(refit(3, 0) == 0.0);
  CHECK(refit(0, 1) == 0.0);
  CHECK(refit(1, 3) == 0.0);
}

TEST_CASE("refit on noisy data beats the wrong weights") {
  Matrix w(3, 3);
  w(0, 1) = 1.0;
  w(1, 2) = -1.5;
  const ParticipantData data = sample_sem(w, 5000, 1.0, std::uint64_t{9});
  const BinaryDag structure(3, {{0, 1}, {1, 2}});
  const Matrix refit = personalization_refit(structure, data);
  CHECK(max_abs_diff(refit, w) < 0.1);
  CHECK(normalized_mse(refit, w) < 0.01);
}

TEST_CASE("refit failure modes name the node") {
  // More parents than samples.
  const BinaryDag wide(3, {{0, 2}, {1, 2}});
  Matrix one_row(1, 3);
  one_row(0, 0) = 1.0;
  one_row(0, 1) = 2.0;
  one_row(0, 2) = 3.0;
  CHECK_THROWS_WITH_AS(personalization_refit(wide, make_participant_data(one_row)),
                       doctest::Contains("node 2"), std::invalid_argument);

  // Rank-deficient parents: two identical columns.
  Matrix dup(50, 3);
  RngStream rng(6, RngPurpose::kTest, 4);
  for (std::size_t k = 0; k < 50; ++k) {
    dup(k, 0) = rng.standard_normal();
    dup(k, 1) = dup(k, 0);  // exact copy
    dup(k, 2) = dup(k, 0) * 2.0;
  }
  CHECK_THROWS_WITH_AS(personalization_refit(wide, make_participant_data(dup)),
                       doctest::Contains("node 2"), SingularMatrixError);
}

TEST_CASE("normalized mse reference points") {
  Matrix truth(2, 2);
  truth(0, 1) = 2.0;
  CHECK(normalized_mse(truth, truth) == 0.0);
  CHECK(normalized_mse(Matrix(2, 2), truth) == 1.0);  // all-zero estimate
  Matrix doubled = truth;
  doubled *= 2.0;
  CHECK(normalized_mse(doubled, truth) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(normalized_mse(truth, Matrix(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(normalized_mse(Matrix(3, 3), truth), DimensionError);
}

TEST_CASE("metrics agree under a relabeling of the nodes") {
  // Permuting node labels consistently leaves shd, tpr, and fdr unchanged.
  const BinaryDag est(4, {{0, 1}, {2, 1}, {3, 0}});
  const BinaryDag truth(4, {{0, 1}, {1, 2}, {3, 0}});
  const int perm[4] = {2, 0, 3, 1};

  const auto relabel = [&](const BinaryDag& g) {
    std::vector<Edge> edges;
    for (const auto& [i, j] : g.edges()) edges.push_back({perm[i], perm[j]});
    return BinaryDag(4, edges);
  };
  CHECK(shd(relabel(est), relabel(truth)) == shd(est, truth));
  const TprFdr before = tpr_fdr(est, truth);
  const TprFdr after = tpr_fdr(relabel(est), relabel(truth));
  CHECK(before.tpr == after.tpr);
  CHECK(before.fdr == after.fdr);
}
