#pragma once

#include <set>
#include <tuple>
#include <utility>

#include "fedbnsl/matrix.hpp"
#include "fedbnsl/model.hpp"

namespace fedbnsl {

// Pair-state edit distance between two DAGs on the same nodes: each unordered
// pair is in one of three states (no edge, i->j, j->i) and every differing
// pair costs one, so extras, deletions, and reversals all count once.
int shd(const BinaryDag& estimate, const BinaryDag& truth);

struct TprFdr {
  double tpr = 0.0;
  double fdr = 0.0;
  bool no_true_edges = false;       // TPR is the 0/0 case, reported as 1
  bool no_predicted_edges = false;  // FDR is the 0/0 case, reported as 0
};

// TPR credits only correctly directed edges; the FDR numerator counts
// reversed edges along with outright false positives.
TprFdr tpr_fdr(const BinaryDag& estimate, const BinaryDag& truth);

struct SkeletonReport {
  std::set<std::pair<int, int>> skeleton;              // unordered adjacency, stored i < j
  std::set<std::tuple<int, int, int>> vstructures;     // (a, c, b): a->c<-b, a < b,
                                                       // a and b non-adjacent
};
SkeletonReport skeleton_and_vstructures(const BinaryDag& g);

// Ordinary least squares of every variable on its parents, holding the DAG
// fixed; non-parent entries stay zero. Throws std::invalid_argument when a
// node has at least as many parents as there are samples and
// SingularMatrixError (naming the node) on a rank-deficient parent design.
Matrix personalization_refit(const BinaryDag& structure, const ParticipantData& data);

// ||estimate - truth||_F^2 / ||truth||_F^2; rejects an all-zero truth.
double normalized_mse(const Matrix& estimate, const Matrix& truth);

}  // namespace fedbnsl
