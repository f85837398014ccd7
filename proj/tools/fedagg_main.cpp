// SPDX-License-Identifier: Apache-2.0
// fedagg: run federated-learning aggregation experiments from a JSON config.
//
//   fedagg run <config.json>      single strategy over the configured seeds
//   fedagg compare <config.json>  every listed strategy on identical shards
//
// FEDAGG_LOG_LEVEL (trace|debug|info|warn|error|off) controls stderr verbosity.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fedagg/experiment.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
};

void add_common_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("config", o.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd.add_option("--output-dir", o.output_dir, "Directory for history, summary and curve files");
  cmd.add_option("--seed", o.seed, "Run a single seed instead of the configured list");
  cmd.add_option("--rounds", o.rounds, "Number of federation rounds")->check(CLI::PositiveNumber);
}

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("FEDAGG_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

int execute(const Overrides& o, fedagg::RunMode mode) {
  fedagg::ExperimentConfig config;
  try {
    config = fedagg::parse_config(o.config_path);
  } catch (const std::exception& e) {
    std::cerr << "fedagg: error: " << e.what() << '\n';
    return 2;
  }
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.seed) config.seeds = {*o.seed};
  if (o.rounds) config.federation.rounds = *o.rounds;

  const auto strategies = fedagg::strategies_for(config, mode);
  spdlog::info("{} strategies x {} seeds, {} rounds, {} clients -> {}", strategies.size(),
               config.seeds.size(), config.federation.rounds, config.num_clients,
               config.output_dir.string());

  fedagg::ComparisonOptions options;
  options.on_run_complete = [](const fedagg::StrategyRun& run) {
    spdlog::info("{:<10} seed {:<6} mean aggregated accuracy {:.5f}", fedagg::to_string(run.strategy),
                 run.seed, run.mean_accuracy());
    for (const auto& r : run.reports) {
      spdlog::debug("  round {:>2}: aggregated {:.5f}, global {:.5f}", r.round,
                    r.aggregated_accuracy, r.global_accuracy);
    }
  };
  const int status = fedagg::run_experiment(config, mode, std::cerr, options);
  if (status == 0) {
    spdlog::info("wrote {}", (config.output_dir / "summary.json").string());
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Federated aggregation strategy experiments"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "Run one strategy over the configured seeds");
  add_common_options(*run, run_opts);

  Overrides compare_opts;
  auto* compare = app.add_subcommand("compare", "Compare strategies on identical shards");
  add_common_options(*compare, compare_opts);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return execute(run_opts, fedagg::RunMode::kRun);
  }
  return execute(compare_opts, fedagg::RunMode::kCompare);
}
