#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "fedbnsl/model.hpp"
#include "support/test_support.hpp"

using namespace fedbnsl;

TEST_CASE("dag construction and queries") {
  const BinaryDag g(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {0, 1}});  // duplicate collapses
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 4);
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.has_edge(1, 0));
  auto parents = g.parents_of(3);
  std::sort(parents.begin(), parents.end());
  CHECK(parents == std::vector<int>{1, 2});
  CHECK(g.parents_of(0).empty());

  const auto order = g.topological_order();
  REQUIRE(order.size() == 4);
  std::vector<int> pos(4);
  for (int i = 0; i < 4; ++i) pos[order[i]] = i;
  for (const auto& [u, v] : g.edges()) CHECK(pos[u] < pos[v]);
}

TEST_CASE("dag construction rejects bad input") {
  CHECK_THROWS_AS(BinaryDag(3, {{0, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(BinaryDag(3, {{-1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(BinaryDag(3, {{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(BinaryDag(3, {{0, 1}, {1, 2}, {2, 0}}), CyclicGraphError);
  CHECK_THROWS_AS(BinaryDag(2, {{0, 1}, {1, 0}}), CyclicGraphError);
  CHECK_NOTHROW(BinaryDag(0, {}));
}

TEST_CASE("support topological order distinguishes DAGs from cycles") {
  Matrix w(3, 3);
  w(0, 1) = 1.5;
  w(1, 2) = -0.2;
  const auto order = support_topological_order(w);
  REQUIRE(order.has_value());
  CHECK(*order == std::vector<int>{0, 1, 2});

  w(2, 0) = 0.1;  // closes the cycle
  CHECK_FALSE(support_topological_order(w).has_value());
}

TEST_CASE("participant data caches column square norms") {
  Matrix x(2, 3);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  x(0, 2) = -1.0;
  x(1, 0) = 3.0;
  x(1, 1) = 0.0;
  x(1, 2) = 0.5;
  const ParticipantData d = make_participant_data(x);
  CHECK(d.n() == 2);
  CHECK(d.dim() == 3);
  CHECK(d.column_sq_norms[0] == 10.0);
  CHECK(d.column_sq_norms[1] == 4.0);
  CHECK(d.column_sq_norms[2] == 1.25);

  CHECK_THROWS_AS(make_participant_data(Matrix()), std::invalid_argument);
  Matrix bad(1, 1);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_participant_data(bad), std::invalid_argument);
}

TEST_CASE("hyperparameter validation names the offending field") {
  AdmmHyperparams hp;
  CHECK_NOTHROW(hp.validate());

  const auto message_of = [](AdmmHyperparams h) {
    try {
      h.validate();
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  AdmmHyperparams bad = hp;
  bad.rho1 = -1.0;
  CHECK(message_of(bad).find("rho1") != std::string::npos);
  bad = hp;
  bad.rho2 = 0.0;
  CHECK(message_of(bad).find("rho2") != std::string::npos);
  bad = hp;
  bad.gamma = 1.5;
  CHECK(message_of(bad).find("gamma") != std::string::npos);
  bad = hp;
  bad.gamma = 0.0;
  CHECK(message_of(bad).find("gamma") != std::string::npos);
  bad = hp;
  bad.lambda = -0.1;
  CHECK(message_of(bad).find("lambda") != std::string::npos);
  bad = hp;
  bad.rounds = 0;
  CHECK_FALSE(message_of(bad).empty());
  bad = hp;
  bad.local_iterations = 0;
  CHECK_FALSE(message_of(bad).empty());
  bad = hp;
  bad.prune_threshold = -1.0;
  CHECK(message_of(bad).find("prune_threshold") != std::string::npos);
}

TEST_CASE("prune keeps strictly-above-threshold entries and skips the diagonal") {
  Matrix w(3, 3);
  w(0, 0) = 99.0;  // diagonal never becomes an edge
  w(0, 1) = 0.3;   // exactly at the threshold: dropped
  w(0, 2) = 0.31;
  w(1, 2) = -0.5;
  const PruneResult r = prune(w, 0.3);
  CHECK(r.removed_edges == 0);
  CHECK(r.dag.edges() == std::set<Edge>{{0, 2}, {1, 2}});
}

TEST_CASE("prune breaks cycles at the weakest edge") {
  Matrix two(2, 2);
  two(0, 1) = 1.0;
  two(1, 0) = -0.5;
  const PruneResult r2 = prune(two, 0.1);
  CHECK(r2.removed_edges == 1);
  CHECK(r2.dag.edges() == std::set<Edge>{{0, 1}});

  Matrix three(3, 3);
  three(0, 1) = 0.9;
  three(1, 2) = 0.8;
  three(2, 0) = -0.7;
  const PruneResult r3 = prune(three, 0.1);
  CHECK(r3.removed_edges == 1);
  CHECK(r3.dag.edges() == std::set<Edge>{{0, 1}, {1, 2}});
}

TEST_CASE("prune invariants on random matrices") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix w = testsupport::random_matrix(5, 5, 1.0, seed);
    const double threshold = 0.2;
    const PruneResult r = prune(w, threshold);

    // Result is a DAG by construction (BinaryDag validates); edges only where
    // the matrix exceeded the threshold off the diagonal.
    int above = 0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        if (i != j && std::abs(w(i, j)) > threshold) ++above;
    for (const auto& [i, j] : r.dag.edges()) {
      CHECK(i != j);
      CHECK(std::abs(w(i, j)) > threshold);
    }
    CHECK(static_cast<int>(r.dag.edge_count()) + r.removed_edges == above);
  }
}

TEST_CASE("run record byte totals sum over rounds") {
  RunRecord rec;
  for (int t = 1; t <= 3; ++t) {
    RoundTrace tr;
    tr.round = t;
    tr.bytes_up = 100 * static_cast<std::uint64_t>(t);
    tr.bytes_down = 10 * static_cast<std::uint64_t>(t);
    rec.rounds.push_back(tr);
  }
  CHECK(rec.total_bytes_up() == 600);
  CHECK(rec.total_bytes_down() == 60);
  CHECK(rec.total_bytes() == 660);
}
