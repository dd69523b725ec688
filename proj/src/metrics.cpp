#include "fedbnsl/metrics.hpp"

#include <string>

#include "fedbnsl/numerics.hpp"

namespace fedbnsl {

namespace {

void require_same_nodes(const BinaryDag& a, const BinaryDag& b, const char* what) {
  if (a.node_count() != b.node_count())
    throw DimensionError(std::string(what) + ": graphs disagree on node count");
}

// 0 = no edge, 1 = i->j, 2 = j->i, for a pair given with i < j.
int pair_state(const BinaryDag& g, int i, int j) {
  if (g.has_edge(i, j)) return 1;
  if (g.has_edge(j, i)) return 2;
  return 0;
}

}  // namespace

int shd(const BinaryDag& estimate, const BinaryDag& truth) {
  require_same_nodes(estimate, truth, "shd");
  const int d = estimate.node_count();
  int dist = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (pair_state(estimate, i, j) != pair_state(truth, i, j)) ++dist;
  return dist;
}

TprFdr tpr_fdr(const BinaryDag& estimate, const BinaryDag& truth) {
  require_same_nodes(estimate, truth, "tpr_fdr");
  std::size_t correct = 0, wrong = 0;  // wrong = reversed + false positive
  for (const Edge& e : estimate.edges()) {
    if (truth.has_edge(e.first, e.second))
      ++correct;
    else
      ++wrong;
  }

  TprFdr out;
  if (truth.edge_count() == 0) {
    out.no_true_edges = true;
    out.tpr = 1.0;
  } else {
    out.tpr = static_cast<double>(correct) / static_cast<double>(truth.edge_count());
  }
  if (estimate.edge_count() == 0) {
    out.no_predicted_edges = true;
    out.fdr = 0.0;
  } else {
    out.fdr = static_cast<double>(wrong) / static_cast<double>(estimate.edge_count());
  }
  return out;
}

SkeletonReport skeleton_and_vstructures(const BinaryDag& g) {
  SkeletonReport out;
  for (const Edge& e : g.edges())
    out.skeleton.insert({std::min(e.first, e.second), std::max(e.first, e.second)});

  const int d = g.node_count();
  for (int c = 0; c < d; ++c) {
    const std::vector<int> parents = g.parents_of(c);
    for (std::size_t x = 0; x < parents.size(); ++x)
      for (std::size_t y = x + 1; y < parents.size(); ++y) {
        const int a = std::min(parents[x], parents[y]);
        const int b = std::max(parents[x], parents[y]);
        if (!out.skeleton.count({a, b})) out.vstructures.insert({a, c, b});
      }
  }
  return out;
}

Matrix personalization_refit(const BinaryDag& structure, const ParticipantData& data) {
  const int d = structure.node_count();
  if (static_cast<std::size_t>(d) != data.dim())
    throw DimensionError("personalization_refit: structure and data disagree on dimension");

  const Matrix& x = data.samples;
  const std::size_t n = data.n();
  Matrix refit(d, d);
  for (int j = 0; j < d; ++j) {
    const std::vector<int> parents = structure.parents_of(j);
    const std::size_t k = parents.size();
    if (k == 0) continue;
    if (k >= n)
      throw std::invalid_argument("personalization_refit: node " + std::to_string(j) + " has " +
                                  std::to_string(k) + " parents but only " + std::to_string(n) +
                                  " samples");

    Matrix gram(k, k);
    Matrix rhs(k, 1);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a; b < k; ++b) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += x(r, parents[a]) * x(r, parents[b]);
        gram(a, b) = s;
        gram(b, a) = s;
      }
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += x(r, parents[a]) * x(r, j);
      rhs(a, 0) = s;
    }

    Matrix coef;
    try {
      coef = solve_linear_system(std::move(gram), std::move(rhs));
    } catch (const SingularMatrixError&) {
      throw SingularMatrixError("personalization_refit: parent design of node " +
                                std::to_string(j) + " is rank deficient");
    }
    for (std::size_t a = 0; a < k; ++a) refit(parents[a], j) = coef(a, 0);
  }
  return refit;
}

double normalized_mse(const Matrix& estimate, const Matrix& truth) {
  require_same_shape(estimate, truth, "normalized_mse");
  const double denom = frobenius_dot(truth, truth);
  if (denom == 0.0) throw std::invalid_argument("normalized_mse: truth matrix is all zero");
  const Matrix diff = estimate - truth;
  return frobenius_dot(diff, diff) / denom;
}

}  // namespace fedbnsl
