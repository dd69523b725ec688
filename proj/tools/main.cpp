#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fedbnsl/experiment.hpp"
#include "fedbnsl/federation.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Federated sparse Bayesian-network structure learning"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_text;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")
        ->envname("FEDBNSL_CONFIG")
        ->required();
    sub->add_option("--out", out_dir, "output directory (overrides config out_dir)")
        ->envname("FEDBNSL_OUT");
    sub->add_option("--seed", seed_text, "seed or comma-separated seed list (overrides config)")
        ->envname("FEDBNSL_SEED");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "Generate synthetic federated data shards");
  add_common(gen);
  CLI::App* run = app.add_subcommand("run", "Run a federated structure-learning experiment");
  add_common(run);
  CLI::App* attack =
      app.add_subcommand("attack-demo", "Reconstruct local covariances from round-1 uploads");
  add_common(attack);

  std::string estimate_path, truth_path;
  CLI::App* metrics = app.add_subcommand("metrics", "Compare an estimated graph to a reference");
  metrics->add_option("estimate", estimate_path, "estimated graph (weighted matrix or edge list)")
      ->required();
  metrics->add_option("truth", truth_path, "reference graph")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (metrics->parsed()) return fedbnsl::cmd_metrics(estimate_path, truth_path, std::cout);
    fedbnsl::ExperimentConfig cfg = fedbnsl::load_config(config_path);
    if (!seed_text.empty()) cfg.seeds = fedbnsl::parse_seed_list(seed_text);
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    if (gen->parsed()) return fedbnsl::cmd_gen_data(cfg, dir, std::cout);
    if (run->parsed()) return fedbnsl::cmd_run(cfg, dir, std::cout);
    return fedbnsl::cmd_attack_demo(cfg, dir, std::cout);
  } catch (const fedbnsl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fedbnsl::kExitConfig;
  } catch (const fedbnsl::CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fedbnsl::kExitConfig;
  } catch (const fedbnsl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fedbnsl::kExitIo;
  } catch (const fedbnsl::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fedbnsl::kExitDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fedbnsl::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
