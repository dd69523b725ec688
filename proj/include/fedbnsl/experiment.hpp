#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedbnsl/datasets.hpp"
#include "fedbnsl/model.hpp"

namespace fedbnsl {

// Invalid or inconsistent configuration; the message names the field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure (unreadable config, unwritable output).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;    // bad config / bad input files
inline constexpr int kExitDiverged = 3;  // every seed diverged
inline constexpr int kExitIo = 4;        // could not read/write files

enum class Method { kFedSparse, kFedSparseDp, kFedBnsl, kFedBnslDp };
const char* method_name(Method m);

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  int dim = 20;
  int participants = 8;
  int samples_per_participant = 5000;
  FederationMode mode = FederationMode::kHomogeneous;
  int expected_edges = -1;  // -1 means dim
  double noise_std = 1.0;
  // csv source only:
  std::string csv_path;
  bool csv_has_header = false;
  std::optional<std::uint64_t> csv_shuffle_seed;
  std::string truth_edges_path;  // optional edge list enabling structure metrics
};

struct ExperimentConfig {
  Method method = Method::kFedSparse;
  DataConfig data;
  AdmmHyperparams hyperparams;
  PrivacyBudget privacy;           // used by the *-dp methods
  double covariance_bound_b = 7.0; // dense baseline's release sensitivity bound
  std::vector<std::uint64_t> seeds = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::string out_dir = "out";
};

// Strict JSON config: unknown keys are rejected, every error names its field,
// and absent fields take the defaults above.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// "2" or "2,5,11" -> {2, 5, 11}; rejects anything else.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Every effective parameter, defaults included, as pretty-printed JSON;
// written into each command's metadata so any output can be re-run.
std::string config_echo_json(const ExperimentConfig& cfg);

// Synthetic data generation: per-participant CSV shards, ground-truth edge
// lists ("i j weight" triples, 0-indexed), and metadata JSON, all under
// out_dir. Uses the first configured seed.
int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);

// Full experiment: per (seed, round) trace.csv, summary.json with per-seed
// results and mean/std aggregates, metadata.json. A diverging seed is
// recorded and skipped; the command fails only when every seed diverges.
int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);

// One round of the configured method, then covariance reconstruction from
// each first-round message; writes and prints the per-participant relative
// errors. Reconstruction failures are reported, not fatal.
int cmd_attack_demo(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);

// Compares two graph files (comma-separated weighted matrix, or "i j weight"
// edge list — zero-weight lines mean "no edge") and prints SHD, TPR/FDR,
// skeleton overlap, and v-structure counts as JSON.
int cmd_metrics(const std::string& estimate_path, const std::string& truth_path,
                std::ostream& out);

}  // namespace fedbnsl
