#include "fedbnsl/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace fedbnsl {

BinaryDag generate_er_dag(int d, int expected_edges, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("generate_er_dag: d must be >= 1");
  if (expected_edges < 0) throw std::invalid_argument("generate_er_dag: expected_edges must be >= 0");
  RngStream rng(seed, RngPurpose::kGraph);

  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = d - 1; i > 0; --i) {
    const auto j = rng.uniform_index(static_cast<std::size_t>(i) + 1);
    std::swap(perm[i], perm[j]);
  }

  const double pairs = 0.5 * d * (d - 1);
  const double p = pairs > 0.0 ? std::min(1.0, expected_edges / pairs) : 0.0;
  std::vector<Edge> edges;
  for (int u = 0; u < d; ++u)
    for (int v = u + 1; v < d; ++v)
      if (rng.bernoulli(p)) edges.push_back({perm[u], perm[v]});
  return BinaryDag(d, edges);
}

Matrix assign_weights(const BinaryDag& g, std::uint64_t seed) {
  RngStream rng(seed, RngPurpose::kWeights);
  Matrix w(g.node_count(), g.node_count());
  for (const auto& [i, j] : g.edges()) {  // std::set iterates in sorted order
    const double sign = rng.bernoulli(0.5) ? -1.0 : 1.0;
    w(i, j) = sign * rng.uniform(0.5, 2.0);
  }
  return w;
}

ParticipantData sample_sem(const Matrix& weights, std::size_t n, double noise_std, RngStream& rng) {
  require_square(weights, "sample_sem");
  if (n < 1) throw std::invalid_argument("sample_sem: n must be >= 1");
  if (!(noise_std > 0.0)) throw std::invalid_argument("sample_sem: noise_std must be > 0");
  const auto order = support_topological_order(weights);
  if (!order) throw CyclicGraphError("sample_sem: weight support contains a directed cycle");

  const std::size_t d = weights.rows();
  std::vector<std::vector<std::size_t>> parents(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j && weights(i, j) != 0.0) parents[j].push_back(i);

  Matrix x(n, d);
  for (std::size_t k = 0; k < n; ++k) {
    for (int v : *order) {
      double val = noise_std * rng.standard_normal();
      for (std::size_t u : parents[v]) val += weights(u, v) * x(k, u);
      x(k, v) = val;
    }
  }
  return make_participant_data(std::move(x));
}

ParticipantData sample_sem(const Matrix& weights, std::size_t n, double noise_std,
                           std::uint64_t seed) {
  RngStream rng(seed, RngPurpose::kSemNoise);
  return sample_sem(weights, n, noise_std, rng);
}

FederationData generate_federation(int d, int participant_count, std::size_t n_p,
                                   FederationMode mode, std::uint64_t seed, int expected_edges,
                                   double noise_std) {
  if (participant_count < 1)
    throw std::invalid_argument("generate_federation: participant_count must be >= 1");
  if (expected_edges < 0) expected_edges = d;

  FederationData out;
  out.truth.structure = generate_er_dag(d, expected_edges, seed);
  out.truth.global_weights = assign_weights(out.truth.structure, seed);
  out.truth.noise_std = noise_std;

  if (mode == FederationMode::kHeterogeneous) out.truth.participant_weights.emplace();

  for (int p = 0; p < participant_count; ++p) {
    const Matrix* w = &out.truth.global_weights;
    if (mode == FederationMode::kHeterogeneous) {
      RngStream wrng(seed, RngPurpose::kHeteroWeights, static_cast<std::uint64_t>(p));
      Matrix wp = out.truth.global_weights;
      for (const auto& [i, j] : out.truth.structure.edges())
        wp(i, j) += std::sqrt(0.1) * wrng.standard_normal();
      out.truth.participant_weights->push_back(std::move(wp));
      w = &out.truth.participant_weights->back();
    }
    RngStream rng(seed, RngPurpose::kSemNoise, static_cast<std::uint64_t>(p));
    out.participants.push_back(sample_sem(*w, n_p, noise_std, rng));
  }
  return out;
}

namespace {

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    throw CsvError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                   ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

}  // namespace

std::vector<ParticipantData> load_csv(const std::string& path, bool has_header,
                                      int participant_count,
                                      std::optional<std::uint64_t> shuffle_seed) {
  if (participant_count < 1) throw std::invalid_argument("load_csv: participant_count must be >= 1");
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && has_header) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, lineno, ++col));
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw CsvError("row " + std::to_string(lineno) + ": has " + std::to_string(row.size()) +
                     " columns, expected " + std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("'" + path + "' contains no data rows");
  if (rows.size() < static_cast<std::size_t>(participant_count)) {
    throw CsvError("'" + path + "' has " + std::to_string(rows.size()) + " rows, fewer than " +
                   std::to_string(participant_count) + " participants");
  }

  std::vector<std::size_t> index(rows.size());
  std::iota(index.begin(), index.end(), 0);
  if (shuffle_seed) {
    RngStream rng(*shuffle_seed, RngPurpose::kShuffle);
    for (std::size_t i = index.size() - 1; i > 0; --i)
      std::swap(index[i], index[rng.uniform_index(i + 1)]);
  }

  const std::size_t base = rows.size() / participant_count;
  const std::size_t remainder = rows.size() % participant_count;
  std::vector<ParticipantData> out;
  std::size_t at = 0;
  for (int p = 0; p < participant_count; ++p) {
    const std::size_t take = base + (static_cast<std::size_t>(p) < remainder ? 1 : 0);
    Matrix x(take, width);
    for (std::size_t r = 0; r < take; ++r)
      for (std::size_t c = 0; c < width; ++c) x(r, c) = rows[index[at + r]][c];
    at += take;
    out.push_back(make_participant_data(std::move(x)));
  }
  return out;
}

}  // namespace fedbnsl
