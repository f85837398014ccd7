// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedagg/data.hpp"
#include "fedagg/models.hpp"
#include "fedagg/nelder_mead.hpp"
#include "fedagg/params.hpp"
#include "fedagg/strategies.hpp"

namespace fedagg {

struct FederationConfig {
  std::size_t rounds = 10;
  std::size_t min_clients = 4;
  StrategyKind strategy = StrategyKind::kFedAvg;
  StrategyHyperparams strategy_hp = StrategyHyperparams::defaults_for(StrategyKind::kFedAvg);
  SimplexConfig simplex;
  ModelSpec model;
  TrainConfig train;
  std::uint64_t seed = 0;
  /// Train the clients of a round on separate threads.
  bool parallel_clients = true;

  void validate() const;
};

struct ClientRoundMetrics {
  std::string client_id;
  std::size_t num_train_examples = 0;
  std::size_t num_test_examples = 0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct RoundReport {
  std::size_t round = 0;  // 1-based
  /// Locally trained models on their own test sets, before aggregation.
  std::vector<ClientRoundMetrics> per_client;
  double aggregated_accuracy = 0.0;
  std::optional<AlphaSolution> alpha;
  /// The freshly aggregated model, evaluated on every client's test set and
  /// weighted the same way.
  double global_accuracy = 0.0;
  double global_loss = 0.0;
};

/// Raised when a round fails; carries the 1-based round index.
class FederationError : public std::runtime_error {
 public:
  FederationError(std::size_t round, const std::string& what)
      : std::runtime_error(what), round_(round) {}
  std::size_t round() const noexcept { return round_; }

 private:
  std::size_t round_;
};

/// sum(count * accuracy) / sum(count).
double weighted_accuracy(std::span<const std::pair<std::size_t, double>> entries);
/// Test-count weighted accuracy of the per-client entries.
double weighted_accuracy(std::span<const ClientRoundMetrics> clients);

struct FederationTrace {
  std::vector<RoundReport> reports;
  ParamVector initial_global;
  /// Global parameters after each round; globals[r - 1] is the output of round r.
  std::vector<ParamVector> globals;
};

FederationTrace trace_federation(const FederationConfig& config,
                                 std::span<const ClientShard> shards);

/// Runs `config.rounds` rounds from init_params(config.model, config.seed).
/// Client i trains with seed config.seed + i.
std::vector<RoundReport> run_federation(const FederationConfig& config,
                                        std::span<const ClientShard> shards);

struct StrategyRun {
  StrategyKind strategy;
  std::uint64_t seed;
  std::vector<RoundReport> reports;

  double mean_accuracy() const;
};

struct ComparisonTable {
  std::vector<StrategyKind> strategies;
  std::vector<std::uint64_t> seeds;
  /// Strategy-major: runs[s * seeds.size() + k].
  std::vector<StrategyRun> runs;

  const StrategyRun& run(StrategyKind strategy, std::uint64_t seed) const;
  /// Per-round aggregated accuracy averaged over seeds.
  std::vector<double> mean_curve(StrategyKind strategy) const;
  /// Mean over rounds, averaged over seeds.
  double mean_accuracy(StrategyKind strategy) const;
};

using ShardFactory = std::function<std::vector<ClientShard>(std::uint64_t seed)>;

struct ComparisonOptions {
  /// Hyperparameters per strategy; missing entries use defaults_for().
  std::map<StrategyKind, StrategyHyperparams> hyperparams;
  /// Concurrent (strategy, seed) runs; 0 picks the hardware concurrency.
  std::size_t workers = 0;
  /// Called once per finished run, possibly from a worker thread.
  std::function<void(const StrategyRun&)> on_run_complete;
};

/// Every strategy sees the same shards and starting weights for a given seed.
ComparisonTable compare_strategies(const FederationConfig& base,
                                   std::span<const StrategyKind> strategies,
                                   std::span<const std::uint64_t> seeds,
                                   const ShardFactory& make_shards,
                                   const ComparisonOptions& options = {});

}  // namespace fedagg
