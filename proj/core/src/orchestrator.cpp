// SPDX-License-Identifier: Apache-2.0
#include "fedagg/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <future>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "fedagg/error.hpp"

namespace fedagg {

void FederationConfig::validate() const {
  if (rounds == 0) {
    throw ConfigError("federation rounds must be >= 1");
  }
  if (min_clients == 0) {
    throw ConfigError("federation min_clients must be >= 1");
  }
  try {
    simplex.validate();
    model.validate();
    train.validate();
    if (strategy != StrategyKind::kFedMedian) {
      strategy_hp.validate();
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

double weighted_accuracy(std::span<const std::pair<std::size_t, double>> entries) {
  if (entries.empty()) {
    throw ArgumentError("weighted_accuracy: no entries");
  }
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& [count, accuracy] : entries) {
    if (count == 0) {
      throw ArgumentError("weighted_accuracy: zero count");
    }
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
      throw ArgumentError(fmt::format("weighted_accuracy: accuracy {} outside [0, 1]", accuracy));
    }
    weighted += static_cast<double>(count) * accuracy;
    total += static_cast<double>(count);
  }
  return weighted / total;
}

double weighted_accuracy(std::span<const ClientRoundMetrics> clients) {
  std::vector<std::pair<std::size_t, double>> entries;
  entries.reserve(clients.size());
  for (const auto& c : clients) {
    entries.emplace_back(c.num_test_examples, c.accuracy);
  }
  return weighted_accuracy(entries);
}

namespace {

void check_shards(const FederationConfig& config, std::span<const ClientShard> shards) {
  if (shards.size() < config.min_clients) {
    throw ConfigError(fmt::format("federation needs at least {} clients, got {}",
                                  config.min_clients, shards.size()));
  }
  for (const auto& shard : shards) {
    if (shard.train.empty() || shard.test.empty()) {
      throw ConfigError(fmt::format("client '{}' has an empty train or test set", shard.client_id));
    }
    if (shard.train.features.cols() != config.model.input_dim ||
        shard.test.features.cols() != config.model.input_dim) {
      throw ConfigError(fmt::format("client '{}' features have width {}, model expects {}",
                                    shard.client_id, shard.train.features.cols(),
                                    config.model.input_dim));
    }
  }
}

struct LocalResult {
  ParamVector params;
  EvalMetrics metrics;
};

LocalResult train_client(const FederationConfig& config, const ClientShard& shard,
                         const ParamVector& global, std::size_t client_index) {
  TrainConfig train = config.train;
  train.seed = config.seed + client_index;
  if (config.strategy_hp.client_lr) {
    train.learning_rate = *config.strategy_hp.client_lr;
  }
  ParamVector local = sgd_train(global, config.model, shard.train, train);
  EvalMetrics metrics = evaluate(local, config.model, shard.test);
  return {std::move(local), metrics};
}

}  // namespace

FederationTrace trace_federation(const FederationConfig& config,
                                 std::span<const ClientShard> shards) {
  config.validate();
  check_shards(config, shards);

  FederationTrace trace{{}, init_params(config.model, config.seed), {}};
  auto strategy = make_strategy(config.strategy, config.strategy_hp, config.simplex);
  ParamVector global = trace.initial_global;

  for (std::size_t round = 1; round <= config.rounds; ++round) {
    try {
      std::vector<std::optional<LocalResult>> results(shards.size());
      if (config.parallel_clients && shards.size() > 1) {
        std::vector<std::future<LocalResult>> pending;
        pending.reserve(shards.size());
        for (std::size_t i = 0; i < shards.size(); ++i) {
          pending.push_back(std::async(std::launch::async, train_client, std::cref(config),
                                       std::cref(shards[i]), std::cref(global), i));
        }
        // Wait for every worker before surfacing the first failure.
        std::exception_ptr failure;
        for (std::size_t i = 0; i < pending.size(); ++i) {
          try {
            results[i] = pending[i].get();
          } catch (...) {
            if (!failure) failure = std::current_exception();
          }
        }
        if (failure) std::rethrow_exception(failure);
      } else {
        for (std::size_t i = 0; i < shards.size(); ++i) {
          results[i] = train_client(config, shards[i], global, i);
        }
      }

      RoundReport report;
      report.round = round;
      std::vector<ClientUpdate> updates;
      updates.reserve(shards.size());
      for (std::size_t i = 0; i < shards.size(); ++i) {
        const auto& shard = shards[i];
        auto& local = *results[i];
        report.per_client.push_back({shard.client_id, shard.train.size(), shard.test.size(),
                                     local.metrics.accuracy, local.metrics.loss});
        updates.push_back({shard.client_id,
                           shard.train.size(),
                           std::move(local.params),
                           {{"accuracy", local.metrics.accuracy}, {"loss", local.metrics.loss}}});
      }
      report.aggregated_accuracy = weighted_accuracy(report.per_client);

      AggregationResult aggregated = strategy->aggregate(updates, global);
      report.alpha = std::move(aggregated.alpha);
      global = std::move(aggregated.params);

      double global_loss = 0.0;
      double total = 0.0;
      std::vector<std::pair<std::size_t, double>> global_entries;
      for (const auto& shard : shards) {
        const EvalMetrics m = evaluate(global, config.model, shard.test);
        global_entries.emplace_back(shard.test.size(), m.accuracy);
        global_loss += static_cast<double>(shard.test.size()) * m.loss;
        total += static_cast<double>(shard.test.size());
      }
      report.global_accuracy = weighted_accuracy(global_entries);
      report.global_loss = global_loss / total;

      trace.reports.push_back(std::move(report));
      trace.globals.push_back(global);
    } catch (const FederationError&) {
      throw;
    } catch (const std::exception& e) {
      throw FederationError(round, fmt::format("{} failed in round {}: {}",
                                               to_string(config.strategy), round, e.what()));
    }
  }
  return trace;
}

std::vector<RoundReport> run_federation(const FederationConfig& config,
                                        std::span<const ClientShard> shards) {
  return trace_federation(config, shards).reports;
}

double StrategyRun::mean_accuracy() const {
  if (reports.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& r : reports) {
    sum += r.aggregated_accuracy;
  }
  return sum / static_cast<double>(reports.size());
}

const StrategyRun& ComparisonTable::run(StrategyKind strategy, std::uint64_t seed) const {
  for (const auto& r : runs) {
    if (r.strategy == strategy && r.seed == seed) {
      return r;
    }
  }
  throw ArgumentError(fmt::format("no run for strategy {} and seed {}", to_string(strategy), seed));
}

std::vector<double> ComparisonTable::mean_curve(StrategyKind strategy) const {
  std::vector<double> curve;
  std::size_t count = 0;
  for (const auto& r : runs) {
    if (r.strategy != strategy) {
      continue;
    }
    if (curve.empty()) {
      curve.assign(r.reports.size(), 0.0);
    }
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      curve[i] += r.reports[i].aggregated_accuracy;
    }
    ++count;
  }
  if (count == 0) {
    throw ArgumentError(fmt::format("no runs for strategy {}", to_string(strategy)));
  }
  for (auto& v : curve) {
    v /= static_cast<double>(count);
  }
  return curve;
}

double ComparisonTable::mean_accuracy(StrategyKind strategy) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : runs) {
    if (r.strategy == strategy) {
      sum += r.mean_accuracy();
      ++count;
    }
  }
  if (count == 0) {
    throw ArgumentError(fmt::format("no runs for strategy {}", to_string(strategy)));
  }
  return sum / static_cast<double>(count);
}

ComparisonTable compare_strategies(const FederationConfig& base,
                                   std::span<const StrategyKind> strategies,
                                   std::span<const std::uint64_t> seeds,
                                   const ShardFactory& make_shards,
                                   const ComparisonOptions& options) {
  if (strategies.empty()) {
    throw ArgumentError("compare_strategies: no strategies");
  }
  if (seeds.empty()) {
    throw ArgumentError("compare_strategies: no seeds");
  }

  ComparisonTable table;
  table.strategies.assign(strategies.begin(), strategies.end());
  table.seeds.assign(seeds.begin(), seeds.end());

  std::vector<std::vector<ClientShard>> shards_by_seed;
  shards_by_seed.reserve(seeds.size());
  for (auto seed : seeds) {
    shards_by_seed.push_back(make_shards(seed));
  }

  const std::size_t jobs = strategies.size() * seeds.size();
  table.runs.resize(jobs, StrategyRun{StrategyKind::kFedAvg, 0, {}});
  std::vector<std::exception_ptr> failures(jobs);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t s = job / seeds.size();
      const std::size_t k = job % seeds.size();
      FederationConfig config = base;
      config.strategy = strategies[s];
      config.seed = seeds[k];
      const auto it = options.hyperparams.find(strategies[s]);
      config.strategy_hp = it != options.hyperparams.end()
                               ? it->second
                               : StrategyHyperparams::defaults_for(strategies[s]);
      try {
        table.runs[job] = {strategies[s], seeds[k], run_federation(config, shards_by_seed[k])};
        if (options.on_run_complete) {
          options.on_run_complete(table.runs[job]);
        }
      } catch (...) {
        failures[job] = std::current_exception();
      }
    }
  };

  std::size_t workers = options.workers != 0 ? options.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, jobs);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  for (const auto& failure : failures) {
    if (failure) {
      std::rethrow_exception(failure);
    }
  }
  return table;
}

}  // namespace fedagg
