// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedagg/nelder_mead.hpp"
#include "fedagg/params.hpp"

namespace fedagg {

struct ClientUpdate {
  std::string client_id;
  std::size_t num_examples = 0;
  ParamVector params;
  std::map<std::string, double> local_metrics;
};

enum class StrategyKind { kFedAvg, kFedAvgM, kFedMedian, kFedOpt, kFedYogi, kFedAvgOpt };
enum class ServerOptimizer { kSgd, kAdagrad, kAdam, kYogi };

std::string_view to_string(StrategyKind kind);
std::string_view to_string(ServerOptimizer optimizer);
std::optional<StrategyKind> parse_strategy_kind(std::string_view name);
std::optional<ServerOptimizer> parse_server_optimizer(std::string_view name);
/// All strategy kinds in canonical comparison order.
std::span<const StrategyKind> all_strategy_kinds();

struct StrategyHyperparams {
  double server_lr = 1.0;
  double momentum_beta = 0.0;
  double tau = 1e-9;
  double beta1 = 0.0;
  double beta2 = 0.0;
  ServerOptimizer server_optimizer = ServerOptimizer::kSgd;
  /// Replaces the client learning rate when set (FedOpt-family pairing).
  std::optional<double> client_lr;

  void validate() const;

  /// FedAvgM: lr 1, momentum 0.5. FedOpt: adagrad, lr 0.1, tau 1e-9, betas 0,
  /// client lr 0.1. FedYogi: lr 0.01, tau 1e-3, beta1 0.9, beta2 0.99, client
  /// lr 0.0316. FedMedian: lr 1. Others carry no hyperparameters.
  static StrategyHyperparams defaults_for(StrategyKind kind);
};

struct StrategyState {
  std::optional<ParamVector> momentum;
  std::optional<ParamVector> first_moment;
  std::optional<ParamVector> second_moment;
  std::size_t round = 0;
};

/// Zero momentum for FedAvgM, (m = 0, v = tau^2) for the FedOpt family.
StrategyState initial_state(StrategyKind kind, const StrategyHyperparams& hp,
                            const ManifestPtr& manifest);

struct AlphaSolution {
  std::vector<double> alpha;
  double objective_at_alpha = 0.0;
  double objective_at_ones = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

ParamVector aggregate_fedavg(std::span<const ClientUpdate> updates);

/// FedAvg with every client's contribution scaled by alpha[i]; the
/// normaliser stays sum(n_i), so the weights need not sum to one.
ParamVector aggregate_scaled(std::span<const ClientUpdate> updates, std::span<const double> alpha);

std::pair<ParamVector, StrategyState> aggregate_fedavgm(std::span<const ClientUpdate> updates,
                                                        const ParamVector& previous_global,
                                                        const StrategyState& state,
                                                        const StrategyHyperparams& hp);

ParamVector aggregate_fedmedian(std::span<const ClientUpdate> updates,
                                const ParamVector& previous_global, const StrategyHyperparams& hp);

std::pair<ParamVector, StrategyState> aggregate_fedopt(std::span<const ClientUpdate> updates,
                                                       const ParamVector& previous_global,
                                                       const StrategyState& state,
                                                       const StrategyHyperparams& hp);

/// Denominator floor in objective_f.
inline constexpr double kObjectiveEpsilon = 1e-12;

/// f(x) = sum_j ||w(x) - w_j|| / max(||w(x) + w_j||, eps), with
/// w(x) = sum_i n_i x_i w_i / sum_i n_i.
double objective_f(std::span<const double> x, std::span<const ParamVector> client_params,
                   std::span<const std::size_t> counts);

std::pair<ParamVector, AlphaSolution> aggregate_fedavgopt(std::span<const ClientUpdate> updates,
                                                          const SimplexConfig& config = {});

struct AggregationResult {
  ParamVector params;
  std::optional<AlphaSolution> alpha;
};

/// Uniform front end over the six aggregation rules. Holds the cross-round
/// server state; calls must be serialised.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual StrategyKind kind() const = 0;
  virtual AggregationResult aggregate(std::span<const ClientUpdate> updates,
                                      const ParamVector& previous_global) = 0;
  virtual const StrategyState& state() const = 0;

  std::string_view name() const { return to_string(kind()); }
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const StrategyHyperparams& hp,
                                        const SimplexConfig& simplex = {});

}  // namespace fedagg
