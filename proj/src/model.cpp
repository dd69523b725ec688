#include "fedbnsl/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace fedbnsl {

namespace {

// Kahn topological sort over an adjacency list; empty result means a cycle.
std::optional<std::vector<int>> kahn_order(int d, const std::vector<std::vector<int>>& children) {
  std::vector<int> indegree(d, 0);
  for (int u = 0; u < d; ++u)
    for (int v : children[u]) ++indegree[v];
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;  // stable output
  for (int v = 0; v < d; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<int> order;
  order.reserve(d);
  while (!ready.empty()) {
    const int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v : children[u])
      if (--indegree[v] == 0) ready.push(v);
  }
  if (static_cast<int>(order.size()) != d) return std::nullopt;
  return order;
}

}  // namespace

BinaryDag::BinaryDag(int d, const std::vector<Edge>& edges) : d_(d) {
  if (d < 0) throw std::invalid_argument("BinaryDag: negative node count");
  std::vector<std::vector<int>> children(d);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= d || j >= d) {
      throw std::invalid_argument("BinaryDag: edge (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") out of range for d=" + std::to_string(d));
    }
    if (i == j) throw std::invalid_argument("BinaryDag: self-loop at node " + std::to_string(i));
    if (edges_.insert({i, j}).second) children[i].push_back(j);
  }
  if (!kahn_order(d, children)) throw CyclicGraphError("BinaryDag: edge set contains a directed cycle");
}

std::vector<int> BinaryDag::parents_of(int j) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges_)
    if (b == j) out.push_back(a);
  return out;
}

std::vector<int> BinaryDag::topological_order() const {
  std::vector<std::vector<int>> children(d_);
  for (const auto& [i, j] : edges_) children[i].push_back(j);
  auto order = kahn_order(d_, children);
  return *order;  // construction guarantees acyclicity
}

std::optional<std::vector<int>> support_topological_order(const Matrix& w) {
  require_square(w, "support_topological_order");
  const int d = static_cast<int>(w.rows());
  std::vector<std::vector<int>> children(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && w(i, j) != 0.0) children[i].push_back(j);
  return kahn_order(d, children);
}

ParticipantData make_participant_data(Matrix samples) {
  if (samples.rows() == 0 || samples.cols() == 0)
    throw std::invalid_argument("make_participant_data: empty sample matrix");
  if (!all_finite(samples))
    throw std::invalid_argument("make_participant_data: samples contain non-finite values");
  ParticipantData out;
  out.column_sq_norms.assign(samples.cols(), 0.0);
  for (std::size_t k = 0; k < samples.rows(); ++k)
    for (std::size_t j = 0; j < samples.cols(); ++j)
      out.column_sq_norms[j] += samples(k, j) * samples(k, j);
  out.samples = std::move(samples);
  return out;
}

void AdmmHyperparams::validate() const {
  if (!(rho1 >= 0.0)) throw std::invalid_argument("rho1 must be >= 0");
  if (!(rho2 > 0.0)) throw std::invalid_argument("rho2 must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (rounds < 1) throw std::invalid_argument("T must be >= 1");
  if (local_iterations < 1) throw std::invalid_argument("K must be >= 1");
  if (!(prune_threshold >= 0.0)) throw std::invalid_argument("prune_threshold must be >= 0");
}

std::uint64_t RunRecord::total_bytes_up() const {
  std::uint64_t s = 0;
  for (const auto& r : rounds) s += r.bytes_up;
  return s;
}

std::uint64_t RunRecord::total_bytes_down() const {
  std::uint64_t s = 0;
  for (const auto& r : rounds) s += r.bytes_down;
  return s;
}

namespace {

// One directed cycle in the graph, as a list of edges, or empty if acyclic.
std::vector<Edge> find_cycle(int d, const std::vector<std::vector<int>>& children) {
  std::vector<int> state(d, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<int> parent(d, -1);
  for (int root = 0; root < d; ++root) {
    if (state[root] != 0) continue;
    // Iterative DFS keeping the active path.
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next < children[u].size()) {
        const int v = children[u][next++];
        if (state[v] == 0) {
          state[v] = 1;
          parent[v] = u;
          stack.emplace_back(v, 0);
        } else if (state[v] == 1) {
          // Back edge u -> v closes a cycle along the current path.
          std::vector<Edge> cycle{{u, v}};
          for (int w = u; w != v; w = parent[w]) cycle.push_back({parent[w], w});
          return cycle;
        }
      } else {
        state[u] = 2;
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace

PruneResult prune(const Matrix& w, double threshold) {
  require_square(w, "prune");
  if (!(threshold >= 0.0)) throw std::invalid_argument("prune: threshold must be >= 0");
  const int d = static_cast<int>(w.rows());

  std::vector<std::vector<int>> children(d);
  std::set<Edge> kept;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && std::abs(w(i, j)) > threshold) {
        kept.insert({i, j});
        children[i].push_back(j);
      }

  int removed = 0;
  for (;;) {
    const auto cycle = find_cycle(d, children);
    if (cycle.empty()) break;
    Edge weakest = cycle.front();
    for (const auto& e : cycle)
      if (std::abs(w(e.first, e.second)) < std::abs(w(weakest.first, weakest.second))) weakest = e;
    kept.erase(weakest);
    auto& ch = children[weakest.first];
    ch.erase(std::find(ch.begin(), ch.end(), weakest.second));
    ++removed;
  }

  PruneResult out;
  out.dag = BinaryDag(d, {kept.begin(), kept.end()});
  out.removed_edges = removed;
  return out;
}

}  // namespace fedbnsl
