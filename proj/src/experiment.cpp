#include "fedbnsl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "fedbnsl/federation.hpp"
#include "fedbnsl/metrics.hpp"
#include "fedbnsl/numerics.hpp"

namespace fedbnsl {

using nlohmann::json;

const char* method_name(Method m) {
  switch (m) {
    case Method::kFedSparse: return "fed-sparse";
    case Method::kFedSparseDp: return "fed-sparse-dp";
    case Method::kFedBnsl: return "fed-bnsl";
    case Method::kFedBnslDp: return "fed-bnsl-dp";
  }
  return "?";
}

namespace {

// ---- formatting and file plumbing ----

// Shortest exact decimal is not needed; 17 significant digits round-trip any
// double and keep every emitted file byte-deterministic.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << content;
  f.flush();
  if (!f) throw IoError("failed while writing " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// ---- config parsing ----

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError(ctx + ": unknown field \"" + key + "\"");
  }
}

const json& expect_object(const json& parent, const std::string& ctx, const char* field) {
  const json& v = parent.at(field);
  if (!v.is_object()) throw ConfigError(ctx + "." + field + " must be an object");
  return v;
}

double get_number(const json& obj, const std::string& ctx, const char* field) {
  const json& v = obj.at(field);
  if (!v.is_number()) throw ConfigError(ctx + "." + field + " must be a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& ctx, const char* field) {
  const json& v = obj.at(field);
  if (!v.is_number_integer()) throw ConfigError(ctx + "." + field + " must be an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& ctx, const char* field) {
  const json& v = obj.at(field);
  if (!v.is_boolean()) throw ConfigError(ctx + "." + field + " must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& ctx, const char* field) {
  const json& v = obj.at(field);
  if (!v.is_string()) throw ConfigError(ctx + "." + field + " must be a string");
  return v.get<std::string>();
}

void parse_data_block(const json& obj, DataConfig* data) {
  check_keys(obj, "data",
             {"source", "dim", "participants", "samples_per_participant", "mode",
              "expected_edges", "noise_std", "csv_path", "csv_has_header", "csv_shuffle_seed",
              "truth_edges"});
  if (obj.contains("source")) data->source = get_string(obj, "data", "source");
  if (data->source != "synthetic" && data->source != "csv")
    throw ConfigError("data.source must be \"synthetic\" or \"csv\" (got \"" + data->source +
                      "\")");
  if (obj.contains("dim")) data->dim = get_int(obj, "data", "dim");
  if (obj.contains("participants")) data->participants = get_int(obj, "data", "participants");
  if (obj.contains("samples_per_participant"))
    data->samples_per_participant = get_int(obj, "data", "samples_per_participant");
  if (obj.contains("mode")) {
    const std::string mode = get_string(obj, "data", "mode");
    if (mode == "homogeneous")
      data->mode = FederationMode::kHomogeneous;
    else if (mode == "heterogeneous")
      data->mode = FederationMode::kHeterogeneous;
    else
      throw ConfigError("data.mode must be \"homogeneous\" or \"heterogeneous\" (got \"" + mode +
                        "\")");
  }
  if (obj.contains("expected_edges")) data->expected_edges = get_int(obj, "data", "expected_edges");
  if (obj.contains("noise_std")) data->noise_std = get_number(obj, "data", "noise_std");
  if (obj.contains("csv_path")) data->csv_path = get_string(obj, "data", "csv_path");
  if (obj.contains("csv_has_header")) data->csv_has_header = get_bool(obj, "data", "csv_has_header");
  if (obj.contains("csv_shuffle_seed") && !obj.at("csv_shuffle_seed").is_null()) {
    const json& v = obj.at("csv_shuffle_seed");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError("data.csv_shuffle_seed must be a nonnegative integer or null");
    data->csv_shuffle_seed = v.get<std::uint64_t>();
  }
  if (obj.contains("truth_edges")) data->truth_edges_path = get_string(obj, "data", "truth_edges");

  if (data->participants < 1) throw ConfigError("data.participants must be >= 1");
  if (data->source == "synthetic") {
    if (data->dim < 2) throw ConfigError("data.dim must be >= 2");
    if (data->samples_per_participant < 1)
      throw ConfigError("data.samples_per_participant must be >= 1");
    if (data->expected_edges < -1) throw ConfigError("data.expected_edges must be -1 or >= 0");
    if (!(data->noise_std > 0.0)) throw ConfigError("data.noise_std must be > 0");
  } else if (data->csv_path.empty()) {
    throw ConfigError("data.csv_path is required when data.source is \"csv\"");
  }
}

void parse_hyperparams_block(const json& obj, AdmmHyperparams* hp) {
  check_keys(obj, "hyperparams",
             {"rho1", "rho2", "lambda", "gamma", "rounds", "local_iterations", "prune_threshold"});
  if (obj.contains("rho1")) hp->rho1 = get_number(obj, "hyperparams", "rho1");
  if (obj.contains("rho2")) hp->rho2 = get_number(obj, "hyperparams", "rho2");
  if (obj.contains("lambda")) hp->lambda = get_number(obj, "hyperparams", "lambda");
  if (obj.contains("gamma")) hp->gamma = get_number(obj, "hyperparams", "gamma");
  if (obj.contains("rounds")) hp->rounds = get_int(obj, "hyperparams", "rounds");
  if (obj.contains("local_iterations"))
    hp->local_iterations = get_int(obj, "hyperparams", "local_iterations");
  if (obj.contains("prune_threshold"))
    hp->prune_threshold = get_number(obj, "hyperparams", "prune_threshold");
  try {
    hp->validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("hyperparams: ") + e.what());
  }
}

void parse_privacy_block(const json& obj, PrivacyBudget* privacy, double* bound_b) {
  check_keys(obj, "privacy", {"epsilon", "delta", "clip_c", "bound_b", "zero_noise"});
  if (obj.contains("epsilon")) privacy->epsilon = get_number(obj, "privacy", "epsilon");
  if (obj.contains("delta")) privacy->delta = get_number(obj, "privacy", "delta");
  if (obj.contains("clip_c")) privacy->clip_c = get_number(obj, "privacy", "clip_c");
  if (obj.contains("bound_b")) *bound_b = get_number(obj, "privacy", "bound_b");
  if (obj.contains("zero_noise")) privacy->zero_noise = get_bool(obj, "privacy", "zero_noise");
  if (!(privacy->epsilon > 0.0)) throw ConfigError("privacy.epsilon must be > 0");
  if (!(privacy->delta >= 0.0 && privacy->delta < 1.0))
    throw ConfigError("privacy.delta must be in [0, 1); 0 selects 1/n_p^2 at run time");
  if (!(privacy->clip_c > 0.0)) throw ConfigError("privacy.clip_c must be > 0");
  if (!(*bound_b >= 0.0)) throw ConfigError("privacy.bound_b must be >= 0");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
  check_keys(root, "config", {"method", "data", "hyperparams", "privacy", "seeds", "out_dir"});

  ExperimentConfig cfg;
  if (!root.contains("method")) throw ConfigError("config: missing required field \"method\"");
  const std::string m = get_string(root, "config", "method");
  if (m == "fed-sparse")
    cfg.method = Method::kFedSparse;
  else if (m == "fed-sparse-dp")
    cfg.method = Method::kFedSparseDp;
  else if (m == "fed-bnsl")
    cfg.method = Method::kFedBnsl;
  else if (m == "fed-bnsl-dp")
    cfg.method = Method::kFedBnslDp;
  else
    throw ConfigError(
        "config: method must be one of fed-sparse, fed-sparse-dp, fed-bnsl, fed-bnsl-dp (got \"" +
        m + "\")");

  if (root.contains("data")) parse_data_block(expect_object(root, "config", "data"), &cfg.data);
  if (root.contains("hyperparams"))
    parse_hyperparams_block(expect_object(root, "config", "hyperparams"), &cfg.hyperparams);
  if (root.contains("privacy"))
    parse_privacy_block(expect_object(root, "config", "privacy"), &cfg.privacy,
                        &cfg.covariance_bound_b);
  if (root.contains("seeds")) {
    const json& v = root.at("seeds");
    if (!v.is_array() || v.empty())
      throw ConfigError("config.seeds must be a non-empty array of nonnegative integers");
    cfg.seeds.clear();
    for (const json& s : v) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
        throw ConfigError("config.seeds must be a non-empty array of nonnegative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (root.contains("out_dir")) cfg.out_dir = get_string(root, "config", "out_dir");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + comma, value);
    if (ec != std::errc{} || ptr != text.data() + comma)
      throw ConfigError("--seed: expected comma-separated nonnegative integers (got \"" + text +
                        "\")");
    seeds.push_back(value);
    pos = comma + 1;
  }
  return seeds;
}

std::string config_echo_json(const ExperimentConfig& cfg) {
  json data{{"source", cfg.data.source},
            {"dim", cfg.data.dim},
            {"participants", cfg.data.participants},
            {"samples_per_participant", cfg.data.samples_per_participant},
            {"mode", cfg.data.mode == FederationMode::kHomogeneous ? "homogeneous"
                                                                   : "heterogeneous"},
            {"expected_edges", cfg.data.expected_edges},
            {"noise_std", cfg.data.noise_std},
            {"csv_path", cfg.data.csv_path},
            {"csv_has_header", cfg.data.csv_has_header},
            {"truth_edges", cfg.data.truth_edges_path}};
  data["csv_shuffle_seed"] =
      cfg.data.csv_shuffle_seed ? json(*cfg.data.csv_shuffle_seed) : json(nullptr);

  const json hp{{"rho1", cfg.hyperparams.rho1},
                {"rho2", cfg.hyperparams.rho2},
                {"lambda", cfg.hyperparams.lambda},
                {"gamma", cfg.hyperparams.gamma},
                {"rounds", cfg.hyperparams.rounds},
                {"local_iterations", cfg.hyperparams.local_iterations},
                {"prune_threshold", cfg.hyperparams.prune_threshold}};
  const json privacy{{"epsilon", cfg.privacy.epsilon},
                     {"delta", cfg.privacy.delta},
                     {"clip_c", cfg.privacy.clip_c},
                     {"bound_b", cfg.covariance_bound_b},
                     {"zero_noise", cfg.privacy.zero_noise}};
  const json root{{"method", method_name(cfg.method)}, {"data", data},
                  {"hyperparams", hp},                 {"privacy", privacy},
                  {"seeds", cfg.seeds},                {"out_dir", cfg.out_dir}};
  return root.dump(2);
}

namespace {

json metadata_json(const ExperimentConfig& cfg, const char* command) {
  json meta;
  meta["command"] = command;
  meta["config"] = json::parse(config_echo_json(cfg));
  meta["notes"] = {
      {"fdr_convention", "reversed edges count in the FDR numerator and earn no TPR credit"},
      {"nmse_basis", "consensus weights masked to the pruned structure"},
      {"delta_zero", "privacy.delta = 0 selects 1/n_p^2 per participant at run time"}};
  return meta;
}

// ---- data assembly and graph files ----

struct SeedData {
  std::vector<ParticipantData> participants;
  std::optional<GroundTruthModel> truth;
};

struct GraphFile {
  std::vector<std::tuple<int, int, double>> triples;
  int dim = 0;
  bool is_matrix = false;
};

double parse_double_token(const std::string& text, std::size_t begin, std::size_t end,
                          const std::string& where) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data() + begin, text.data() + end, value);
  if (ec != std::errc{} || ptr != text.data() + end)
    throw CsvError(where + ": not a number: \"" + text.substr(begin, end - begin) + "\"");
  return value;
}

// Comma-separated square weighted matrix, or whitespace "i j weight" triples
// (one per line, 0-indexed). Zero weights mean "no edge" in both forms.
GraphFile read_graph_file(const std::string& path) {
  const std::string text = read_text_file(path);
  GraphFile out;
  out.is_matrix = text.find(',') != std::string::npos;

  std::vector<std::vector<double>> rows;
  std::size_t line_begin = 0;
  int line_no = 0;
  while (line_begin <= text.size()) {
    std::size_t line_end = std::min(text.find('\n', line_begin), text.size());
    ++line_no;
    std::size_t end = line_end;
    while (end > line_begin && (text[end - 1] == '\r' || text[end - 1] == ' ')) --end;
    std::size_t begin = line_begin;
    while (begin < end && text[begin] == ' ') ++begin;
    const std::string where = path + " line " + std::to_string(line_no);
    if (begin < end) {
      std::vector<double> row;
      std::size_t pos = begin;
      while (pos < end) {
        std::size_t tok_end;
        if (out.is_matrix) {
          tok_end = std::min(text.find(',', pos), end);
        } else {
          tok_end = pos;
          while (tok_end < end && text[tok_end] != ' ' && text[tok_end] != '\t') ++tok_end;
        }
        if (tok_end > pos) row.push_back(parse_double_token(text, pos, tok_end, where));
        else if (out.is_matrix)
          throw CsvError(where + ": empty field");
        pos = tok_end + 1;
        if (!out.is_matrix)
          while (pos < end && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
      }
      if (!out.is_matrix) {
        if (row.size() != 3)
          throw CsvError(where + ": expected \"i j weight\", got " + std::to_string(row.size()) +
                         " fields");
        const double fi = row[0], fj = row[1];
        if (fi != std::floor(fi) || fj != std::floor(fj) || fi < 0 || fj < 0)
          throw CsvError(where + ": node indices must be nonnegative integers");
        const int i = static_cast<int>(fi), j = static_cast<int>(fj);
        out.triples.emplace_back(i, j, row[2]);
        out.dim = std::max(out.dim, std::max(i, j) + 1);
      } else {
        if (!rows.empty() && rows.front().size() != row.size())
          throw CsvError(where + ": expected " + std::to_string(rows.front().size()) +
                         " fields, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
      }
    }
    line_begin = line_end + 1;
  }

  if (out.is_matrix) {
    if (rows.empty() || rows.size() != rows.front().size())
      throw CsvError(path + ": weighted matrix must be square (got " +
                     std::to_string(rows.size()) + " rows of " +
                     std::to_string(rows.empty() ? 0 : rows.front().size()) + " fields)");
    out.dim = static_cast<int>(rows.size());
    for (int i = 0; i < out.dim; ++i)
      for (int j = 0; j < out.dim; ++j)
        if (rows[i][j] != 0.0) out.triples.emplace_back(i, j, rows[i][j]);
  }
  return out;
}

BinaryDag dag_from_triples(const GraphFile& gf, int d, const std::string& path) {
  std::vector<Edge> edges;
  for (const auto& [i, j, w] : gf.triples) {
    if (i >= d || j >= d)
      throw ConfigError(path + ": node index " + std::to_string(std::max(i, j)) +
                        " out of range for dimension " + std::to_string(d));
    if (w != 0.0) edges.push_back({i, j});
  }
  try {
    return BinaryDag(d, edges);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

GroundTruthModel truth_from_edge_file(const std::string& path, int d) {
  const GraphFile gf = read_graph_file(path);
  if (gf.is_matrix && gf.dim != d)
    throw ConfigError(path + ": matrix is " + std::to_string(gf.dim) + "x" +
                      std::to_string(gf.dim) + " but the data has " + std::to_string(d) +
                      " variables");
  GroundTruthModel truth;
  truth.structure = dag_from_triples(gf, d, path);
  truth.global_weights = Matrix(d, d);
  for (const auto& [i, j, w] : gf.triples)
    if (w != 0.0) truth.global_weights(i, j) = w;
  return truth;
}

SeedData make_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedData out;
  if (cfg.data.source == "synthetic") {
    FederationData fd = generate_federation(cfg.data.dim, cfg.data.participants,
                                            cfg.data.samples_per_participant, cfg.data.mode, seed,
                                            cfg.data.expected_edges, cfg.data.noise_std);
    out.participants = std::move(fd.participants);
    out.truth = std::move(fd.truth);
    return out;
  }
  out.participants = load_csv(cfg.data.csv_path, cfg.data.csv_has_header, cfg.data.participants,
                              cfg.data.csv_shuffle_seed);
  if (!cfg.data.truth_edges_path.empty())
    out.truth = truth_from_edge_file(cfg.data.truth_edges_path,
                                     static_cast<int>(out.participants[0].dim()));
  return out;
}

RunRecord run_method(const ExperimentConfig& cfg, const std::vector<ParticipantData>& parts,
                     std::uint64_t seed) {
  switch (cfg.method) {
    case Method::kFedSparse:
      return run_fed_sparse_bnsl(parts, cfg.hyperparams, PrivacyBudget{}, seed);
    case Method::kFedSparseDp: {
      PrivacyBudget pb = cfg.privacy;
      pb.enabled = true;
      return run_fed_sparse_bnsl(parts, cfg.hyperparams, pb, seed);
    }
    case Method::kFedBnsl:
      return run_fed_bnsl_baseline(parts, cfg.hyperparams, std::nullopt, seed);
    case Method::kFedBnslDp:
      return run_fed_bnsl_baseline(
          parts, cfg.hyperparams,
          CovarianceDpParams{cfg.privacy.epsilon, cfg.privacy.delta, cfg.covariance_bound_b},
          seed);
  }
  throw std::logic_error("run_method: unhandled method");
}

Matrix masked_to_dag(const Matrix& w, const BinaryDag& dag) {
  Matrix masked(w.rows(), w.cols());
  for (const Edge& e : dag.edges()) masked(e.first, e.second) = w(e.first, e.second);
  return masked;
}

json stat_json(const std::vector<double>& xs) {
  if (xs.empty()) return nullptr;
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (const double x : xs) var += (x - mean) * (x - mean);
  const double std_dev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return json{{"mean", mean}, {"std", std_dev}};
}

json privacy_report_json(const RunRecord& rec) {
  json arr = json::array();
  for (std::size_t p = 0; p < rec.privacy.size(); ++p) {
    const ParticipantPrivacyReport& r = rec.privacy[p];
    arr.push_back({{"participant", p},
                   {"sensitivity", r.sensitivity},
                   {"sigma", r.sigma},
                   {"rho_total", r.rho_total},
                   {"epsilon_achieved", r.epsilon_achieved}});
  }
  return arr;
}

}  // namespace

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  if (cfg.data.source != "synthetic")
    throw ConfigError("gen-data: data.source must be \"synthetic\"");
  const std::uint64_t seed = cfg.seeds.front();
  const FederationData fd = generate_federation(cfg.data.dim, cfg.data.participants,
                                                cfg.data.samples_per_participant, cfg.data.mode,
                                                seed, cfg.data.expected_edges, cfg.data.noise_std);
  ensure_dir(out_dir);

  json files = json::array();
  for (std::size_t p = 0; p < fd.participants.size(); ++p) {
    char name[40];
    std::snprintf(name, sizeof name, "participant_%02zu.csv", p);
    std::ostringstream csv;
    const Matrix& x = fd.participants[p].samples;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        if (c) csv << ',';
        csv << fmt(x(r, c));
      }
      csv << '\n';
    }
    write_text_file(join_path(out_dir, name), csv.str());
    files.push_back(name);
  }

  const auto edge_list = [](const BinaryDag& g, const Matrix& w) {
    std::ostringstream txt;
    for (const Edge& e : g.edges())
      txt << e.first << ' ' << e.second << ' ' << fmt(w(e.first, e.second)) << '\n';
    return txt.str();
  };
  write_text_file(join_path(out_dir, "truth_edges.txt"),
                  edge_list(fd.truth.structure, fd.truth.global_weights));
  files.push_back("truth_edges.txt");
  if (fd.truth.participant_weights) {
    for (std::size_t p = 0; p < fd.truth.participant_weights->size(); ++p) {
      char name[40];
      std::snprintf(name, sizeof name, "truth_edges_p%02zu.txt", p);
      write_text_file(join_path(out_dir, name),
                      edge_list(fd.truth.structure, (*fd.truth.participant_weights)[p]));
      files.push_back(name);
    }
  }

  json meta = metadata_json(cfg, "gen-data");
  meta["seed"] = seed;
  meta["true_edge_count"] = fd.truth.structure.edge_count();
  meta["files"] = files;
  write_text_file(join_path(out_dir, "metadata.json"), meta.dump(2) + "\n");

  log << "gen-data: wrote " << fd.participants.size() << " shards and ground truth to " << out_dir
      << "\n";
  return kExitOk;
}

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  write_text_file(join_path(out_dir, "metadata.json"), metadata_json(cfg, "run").dump(2) + "\n");

  std::ostringstream trace;
  trace << "seed,round,shd,tpr,fdr,h_value,bytes_up_cum,bytes_down_cum\n";

  json per_seed = json::array();
  std::vector<double> agg_shd, agg_tpr, agg_fdr, agg_nmse, agg_up, agg_down, agg_total;
  int diverged = 0;

  for (const std::uint64_t seed : cfg.seeds) {
    try {
      const SeedData data = make_data(cfg, seed);
      const RunRecord rec = run_method(cfg, data.participants, seed);

      std::uint64_t up = 0, down = 0;
      for (const RoundTrace& tr : rec.rounds) {
        up += tr.bytes_up;
        down += tr.bytes_down;
        trace << seed << ',' << tr.round << ',';
        if (data.truth) {
          const BinaryDag round_dag = prune(tr.w, cfg.hyperparams.prune_threshold).dag;
          const TprFdr rates = tpr_fdr(round_dag, data.truth->structure);
          trace << shd(round_dag, data.truth->structure) << ',' << fmt(rates.tpr) << ','
                << fmt(rates.fdr);
        } else {
          trace << ",,";
        }
        trace << ',' << fmt(tr.h_value) << ',' << up << ',' << down << '\n';
      }

      json entry{{"seed", seed},
                 {"diverged", false},
                 {"rounds", rec.rounds.size()},
                 {"bytes_up", up},
                 {"bytes_down", down},
                 {"bytes_total", up + down},
                 {"prune_removed_edges", rec.prune_removed_edges},
                 {"edges_estimated", rec.final_dag.edge_count()},
                 {"h_final", rec.rounds.empty() ? 0.0 : rec.rounds.back().h_value}};
      agg_up.push_back(static_cast<double>(up));
      agg_down.push_back(static_cast<double>(down));
      agg_total.push_back(static_cast<double>(up + down));

      std::ostringstream seed_log;
      seed_log << "seed " << seed << ": edges=" << rec.final_dag.edge_count();
      if (data.truth) {
        const int final_shd = shd(rec.final_dag, data.truth->structure);
        const TprFdr rates = tpr_fdr(rec.final_dag, data.truth->structure);
        entry["shd"] = final_shd;
        entry["tpr"] = rates.tpr;
        entry["fdr"] = rates.fdr;
        entry["edges_true"] = data.truth->structure.edge_count();
        agg_shd.push_back(final_shd);
        agg_tpr.push_back(rates.tpr);
        agg_fdr.push_back(rates.fdr);
        seed_log << " shd=" << final_shd << " tpr=" << rates.tpr << " fdr=" << rates.fdr;

        const Matrix masked = masked_to_dag(rec.final_w, rec.final_dag);
        if (frobenius_norm(data.truth->global_weights) > 0.0) {
          const double nmse = normalized_mse(masked, data.truth->global_weights);
          entry["nmse"] = nmse;
          agg_nmse.push_back(nmse);
        } else {
          entry["nmse"] = nullptr;
        }

        if (data.truth->participant_weights) {
          json pers = json::array();
          for (std::size_t p = 0; p < data.participants.size(); ++p) {
            const Matrix& tw = (*data.truth->participant_weights)[p];
            json row{{"participant", p}};
            if (frobenius_norm(tw) > 0.0) {
              try {
                const Matrix refit = personalization_refit(rec.final_dag, data.participants[p]);
                row["consensus_nmse"] = normalized_mse(masked, tw);
                row["refit_nmse"] = normalized_mse(refit, tw);
              } catch (const SingularMatrixError& e) {
                row["error"] = e.what();
              }
            }
            pers.push_back(std::move(row));
          }
          entry["personalization"] = std::move(pers);
        }
      } else {
        entry["shd"] = nullptr;
        entry["tpr"] = nullptr;
        entry["fdr"] = nullptr;
        entry["nmse"] = nullptr;
      }
      if (!rec.privacy.empty()) entry["privacy"] = privacy_report_json(rec);
      per_seed.push_back(std::move(entry));
      seed_log << " bytes=" << (up + down);
      log << seed_log.str() << "\n";
    } catch (const DivergenceError& e) {
      ++diverged;
      per_seed.push_back(json{{"seed", seed}, {"diverged", true}, {"error", e.what()}});
      log << "seed " << seed << ": diverged (" << e.what() << ")\n";
    }
  }

  json summary{{"method", method_name(cfg.method)},
               {"per_seed", std::move(per_seed)},
               {"aggregate",
                {{"seeds_succeeded", cfg.seeds.size() - static_cast<std::size_t>(diverged)},
                 {"seeds_diverged", diverged},
                 {"shd", stat_json(agg_shd)},
                 {"tpr", stat_json(agg_tpr)},
                 {"fdr", stat_json(agg_fdr)},
                 {"nmse", stat_json(agg_nmse)},
                 {"bytes_up", stat_json(agg_up)},
                 {"bytes_down", stat_json(agg_down)},
                 {"bytes_total", stat_json(agg_total)}}}};

  write_text_file(join_path(out_dir, "trace.csv"), trace.str());
  write_text_file(join_path(out_dir, "summary.json"), summary.dump(2) + "\n");
  log << "run: wrote " << join_path(out_dir, "summary.json") << "\n";
  return diverged == static_cast<int>(cfg.seeds.size()) ? kExitDiverged : kExitOk;
}

int cmd_attack_demo(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  ExperimentConfig one_round = cfg;
  one_round.hyperparams.rounds = 1;
  const std::uint64_t seed = cfg.seeds.front();
  const SeedData data = make_data(one_round, seed);
  const RunRecord rec = run_method(one_round, data.participants, seed);

  const std::size_t d = data.participants[0].dim();
  const Matrix zeros(d, d);
  json per_participant = json::array();
  std::vector<double> errors;
  for (std::size_t p = 0; p < data.participants.size(); ++p) {
    const Matrix truth = scaled_gram(data.participants[p].samples);
    json row{{"participant", p}};
    try {
      const Matrix guess =
          reconstruct_covariance(rec.first_round_locals[p], zeros, zeros, cfg.hyperparams.rho2);
      const double err = frobenius_norm(guess - truth) / frobenius_norm(truth);
      row["relative_error"] = err;
      errors.push_back(err);
    } catch (const AttackFailureError& e) {
      row["failed"] = true;
      row["error"] = e.what();
    }
    per_participant.push_back(std::move(row));
  }

  json report{{"method", method_name(cfg.method)},
              {"seed", seed},
              {"rho2", cfg.hyperparams.rho2},
              {"per_participant", std::move(per_participant)}};
  if (!errors.empty()) {
    double mean = 0.0;
    for (const double e : errors) mean += e;
    report["mean_relative_error"] = mean / static_cast<double>(errors.size());
  } else {
    report["mean_relative_error"] = nullptr;
  }

  ensure_dir(out_dir);
  write_text_file(join_path(out_dir, "attack_report.json"), report.dump(2) + "\n");
  log << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& estimate_path, const std::string& truth_path,
                std::ostream& out) {
  const GraphFile ge = read_graph_file(estimate_path);
  const GraphFile gt = read_graph_file(truth_path);
  if (ge.is_matrix && gt.is_matrix && ge.dim != gt.dim)
    throw ConfigError("metrics: matrices disagree on dimension (" + std::to_string(ge.dim) +
                      " vs " + std::to_string(gt.dim) + ")");
  const int d = std::max(ge.dim, gt.dim);
  const BinaryDag est = dag_from_triples(ge, d, estimate_path);
  const BinaryDag truth = dag_from_triples(gt, d, truth_path);

  const TprFdr rates = tpr_fdr(est, truth);
  const SkeletonReport sk_est = skeleton_and_vstructures(est);
  const SkeletonReport sk_truth = skeleton_and_vstructures(truth);

  std::size_t skeleton_common = 0;
  for (const auto& e : sk_est.skeleton) skeleton_common += sk_truth.skeleton.count(e);
  std::size_t vstructures_common = 0;
  for (const auto& v : sk_est.vstructures) vstructures_common += sk_truth.vstructures.count(v);
  std::size_t correctly_directed = 0;
  for (const Edge& e : est.edges()) correctly_directed += truth.has_edge(e.first, e.second);

  const json report{
      {"dimension", d},
      {"shd", shd(est, truth)},
      {"tpr", rates.tpr},
      {"fdr", rates.fdr},
      {"no_true_edges", rates.no_true_edges},
      {"no_predicted_edges", rates.no_predicted_edges},
      {"edges",
       {{"estimate", est.edge_count()},
        {"truth", truth.edge_count()},
        {"correctly_directed", correctly_directed}}},
      {"skeleton",
       {{"estimate", sk_est.skeleton.size()},
        {"truth", sk_truth.skeleton.size()},
        {"common", skeleton_common}}},
      {"v_structures",
       {{"estimate", sk_est.vstructures.size()},
        {"truth", sk_truth.vstructures.size()},
        {"common", vstructures_common}}}};
  out << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace fedbnsl
