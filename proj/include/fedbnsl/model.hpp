#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "fedbnsl/matrix.hpp"

namespace fedbnsl {

struct CyclicGraphError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using Edge = std::pair<int, int>;  // (parent, child), 0-indexed

// Directed acyclic graph over d nodes. Construction validates: indices in
// range, no self-loops, no directed cycles.
class BinaryDag {
 public:
  BinaryDag() = default;
  explicit BinaryDag(int d) : d_(d) {}
  BinaryDag(int d, const std::vector<Edge>& edges);

  int node_count() const { return d_; }
  const std::set<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_edge(int i, int j) const { return edges_.count({i, j}) > 0; }
  std::vector<int> parents_of(int j) const;
  // Parents always precede children.
  std::vector<int> topological_order() const;

 private:
  int d_ = 0;
  std::set<Edge> edges_;
};

// Topological order of the nonzero support of a weighted adjacency matrix;
// empty when the support contains a directed cycle.
std::optional<std::vector<int>> support_topological_order(const Matrix& w);

struct GroundTruthModel {
  BinaryDag structure;
  Matrix global_weights;  // entry (i,j) is the i -> j edge weight
  // Per-participant weights in heterogeneous mode; absent when shared.
  std::optional<std::vector<Matrix>> participant_weights;
  double noise_std = 1.0;  // identical across variables (identifiability)
};

struct ParticipantData {
  Matrix samples;                       // n_p x d
  std::vector<double> column_sq_norms;  // sum_k X_{k,j}^2 per column j
  std::size_t n() const { return samples.rows(); }
  std::size_t dim() const { return samples.cols(); }
};
// Caches column norms; rejects empty sample sets.
ParticipantData make_participant_data(Matrix samples);

struct AdmmHyperparams {
  double rho1 = 1000.0;       // acyclicity penalty weight
  double rho2 = 1.0;          // consensus penalty weight
  double lambda = 0.1;        // l1 strength on local estimates
  double gamma = 0.5;         // coordinate step damping, in (0, 1]
  int rounds = 100;           // T
  int local_iterations = 30;  // K, coordinate updates per round
  double prune_threshold = 0.3;
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct PrivacyBudget {
  bool enabled = false;
  double epsilon = 10.0;
  double delta = 0.0;  // 0 means "use 1/n_p^2 at run time"
  double clip_c = 10.0;
  // Keeps the private code path but zeroes every noise scale and disables
  // clipping; the run must then match the non-private one bit for bit.
  bool zero_noise = false;
};

struct RoundTrace {
  int round = 0;  // 1-based
  Matrix w;       // consensus after this round
  double h_value = 0.0;
  std::uint64_t bytes_up = 0;    // total over participants this round
  std::uint64_t bytes_down = 0;  // total over participants this round
  double dual_residual = 0.0;    // sum_p ||B_p - W||_F
  int w_iterations = 0;
  bool w_converged = true;
};

struct ParticipantPrivacyReport {
  double sensitivity = 0.0;       // per-query gradient sensitivity bound
  double sigma = 0.0;             // calibrated Gaussian scale
  double rho_total = 0.0;         // accumulated zCDP cost
  double epsilon_achieved = 0.0;  // converted back at the run's delta
};

struct RunRecord {
  int dim = 0;
  int participant_count = 0;
  std::vector<RoundTrace> rounds;
  Matrix final_w;
  BinaryDag final_dag;
  int prune_removed_edges = 0;
  // First-round local estimates, kept for the reconstruction demo.
  std::vector<Matrix> first_round_locals;
  std::vector<ParticipantPrivacyReport> privacy;  // empty for non-private runs

  std::uint64_t total_bytes_up() const;
  std::uint64_t total_bytes_down() const;
  std::uint64_t total_bytes() const { return total_bytes_up() + total_bytes_down(); }
};

struct PruneResult {
  BinaryDag dag;
  int removed_edges = 0;  // edges dropped by cycle breaking (not thresholding)
};

// Keeps entries with |w| > threshold, then repeatedly removes the
// smallest-|weight| edge on a remaining cycle until acyclic.
PruneResult prune(const Matrix& w, double threshold);

}  // namespace fedbnsl
