#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedbnsl/model.hpp"
#include "fedbnsl/rng.hpp"

namespace fedbnsl {

// CSV parse failure; the message names the 1-based row and column.
struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Random DAG: a uniform random node permutation, then each order-respecting
// pair becomes an edge independently with probability
// min(1, expected_edges / C(d,2)).
BinaryDag generate_er_dag(int d, int expected_edges, std::uint64_t seed);

// Edge weights drawn uniformly from [-2, -0.5] union [0.5, 2].
Matrix assign_weights(const BinaryDag& g, std::uint64_t seed);

// Linear structural equations in topological order: each variable is the
// weighted sum of its parents plus N(0, noise_std^2) noise.
ParticipantData sample_sem(const Matrix& weights, std::size_t n, double noise_std, RngStream& rng);
ParticipantData sample_sem(const Matrix& weights, std::size_t n, double noise_std,
                           std::uint64_t seed);

enum class FederationMode { kHomogeneous, kHeterogeneous };

struct FederationData {
  GroundTruthModel truth;
  std::vector<ParticipantData> participants;
};

// Shared structure across participants; heterogeneous mode perturbs each edge
// weight per participant with N(0, 0.1) around the global value. Every
// participant draws from its own stream, so one participant's data never
// depends on how many others exist.
FederationData generate_federation(int d, int participant_count, std::size_t n_p,
                                   FederationMode mode, std::uint64_t seed,
                                   int expected_edges = -1,  // -1 means d
                                   double noise_std = 1.0);

// Numeric CSV -> P contiguous shards; row remainders go to the first shards
// (7466 rows over 3 participants gives 2489 / 2489 / 2488). Optional seeded
// row shuffle before sharding.
std::vector<ParticipantData> load_csv(const std::string& path, bool has_header,
                                      int participant_count,
                                      std::optional<std::uint64_t> shuffle_seed = std::nullopt);

}  // namespace fedbnsl
