// SPDX-License-Identifier: Apache-2.0
#include "fedagg/strategies.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fedagg/error.hpp"

namespace fedagg {

namespace {

constexpr std::array<StrategyKind, 6> kAllKinds = {
    StrategyKind::kFedAvg, StrategyKind::kFedAvgM, StrategyKind::kFedMedian,
    StrategyKind::kFedOpt, StrategyKind::kFedYogi, StrategyKind::kFedAvgOpt,
};

void require_updates(std::span<const ClientUpdate> updates, const char* context) {
  if (updates.empty()) {
    throw ArgumentError(fmt::format("{}: no client updates", context));
  }
  for (const auto& u : updates) {
    if (u.num_examples == 0) {
      throw ArgumentError(fmt::format("{}: client '{}' reports zero examples", context, u.client_id));
    }
    require_same_layout(updates[0].params, u.params, context);
  }
}

std::vector<ParamVector> collect_params(std::span<const ClientUpdate> updates) {
  std::vector<ParamVector> params;
  params.reserve(updates.size());
  for (const auto& u : updates) {
    params.push_back(u.params);
  }
  return params;
}

double total_examples(std::span<const ClientUpdate> updates) {
  double total = 0.0;
  for (const auto& u : updates) {
    total += static_cast<double>(u.num_examples);
  }
  return total;
}

void require_range(bool ok, const char* what, double value) {
  if (!ok) {
    throw ArgumentError(fmt::format("hyperparameter {} out of range: {}", what, value));
  }
}

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kFedAvg: return "fedavg";
    case StrategyKind::kFedAvgM: return "fedavgm";
    case StrategyKind::kFedMedian: return "fedmedian";
    case StrategyKind::kFedOpt: return "fedopt";
    case StrategyKind::kFedYogi: return "fedyogi";
    case StrategyKind::kFedAvgOpt: return "fedavgopt";
  }
  return "unknown";
}

std::string_view to_string(ServerOptimizer optimizer) {
  switch (optimizer) {
    case ServerOptimizer::kSgd: return "sgd";
    case ServerOptimizer::kAdagrad: return "adagrad";
    case ServerOptimizer::kAdam: return "adam";
    case ServerOptimizer::kYogi: return "yogi";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view name) {
  for (auto kind : kAllKinds) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

std::optional<ServerOptimizer> parse_server_optimizer(std::string_view name) {
  for (auto opt : {ServerOptimizer::kSgd, ServerOptimizer::kAdagrad, ServerOptimizer::kAdam,
                   ServerOptimizer::kYogi}) {
    if (to_string(opt) == name) {
      return opt;
    }
  }
  return std::nullopt;
}

std::span<const StrategyKind> all_strategy_kinds() { return kAllKinds; }

void StrategyHyperparams::validate() const {
  require_range(server_lr > 0.0 && std::isfinite(server_lr), "server_lr", server_lr);
  require_range(momentum_beta >= 0.0 && momentum_beta < 1.0, "momentum", momentum_beta);
  require_range(tau > 0.0 && std::isfinite(tau), "tau", tau);
  require_range(beta1 >= 0.0 && beta1 < 1.0, "beta1", beta1);
  require_range(beta2 >= 0.0 && beta2 < 1.0, "beta2", beta2);
  if (client_lr) {
    require_range(*client_lr > 0.0 && std::isfinite(*client_lr), "client_lr", *client_lr);
  }
}

StrategyHyperparams StrategyHyperparams::defaults_for(StrategyKind kind) {
  StrategyHyperparams hp;
  switch (kind) {
    case StrategyKind::kFedAvgM:
      hp.server_lr = 1.0;
      hp.momentum_beta = 0.5;
      break;
    case StrategyKind::kFedOpt:
      hp.server_optimizer = ServerOptimizer::kAdagrad;
      hp.server_lr = 0.1;
      hp.client_lr = 0.1;
      hp.tau = 1e-9;
      hp.beta1 = 0.0;
      hp.beta2 = 0.0;
      break;
    case StrategyKind::kFedYogi:
      hp.server_optimizer = ServerOptimizer::kYogi;
      hp.server_lr = 0.01;
      hp.client_lr = 0.0316;
      hp.tau = 1e-3;
      hp.beta1 = 0.9;
      hp.beta2 = 0.99;
      break;
    case StrategyKind::kFedAvg:
    case StrategyKind::kFedMedian:
    case StrategyKind::kFedAvgOpt:
      break;
  }
  return hp;
}

StrategyState initial_state(StrategyKind kind, const StrategyHyperparams& hp,
                            const ManifestPtr& manifest) {
  StrategyState state;
  if (kind == StrategyKind::kFedAvgM) {
    state.momentum = ParamVector::zeros(manifest);
  } else if (kind == StrategyKind::kFedOpt || kind == StrategyKind::kFedYogi) {
    state.first_moment = ParamVector::zeros(manifest);
    state.second_moment =
        ParamVector(manifest, std::vector<double>(manifest->total_size(), hp.tau * hp.tau));
  }
  return state;
}

ParamVector aggregate_fedavg(std::span<const ClientUpdate> updates) {
  require_updates(updates, "fedavg");
  const double total = total_examples(updates);
  std::vector<double> coefficients;
  coefficients.reserve(updates.size());
  for (const auto& u : updates) {
    coefficients.push_back(static_cast<double>(u.num_examples) / total);
  }
  return linear_combination(collect_params(updates), coefficients);
}

ParamVector aggregate_scaled(std::span<const ClientUpdate> updates, std::span<const double> alpha) {
  require_updates(updates, "fedavgopt");
  if (alpha.size() != updates.size()) {
    throw ArgumentError(fmt::format("fedavgopt: {} scaling factors for {} clients", alpha.size(),
                                    updates.size()));
  }
  const double total = total_examples(updates);
  std::vector<double> coefficients;
  coefficients.reserve(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    coefficients.push_back(static_cast<double>(updates[i].num_examples) * alpha[i] / total);
  }
  return linear_combination(collect_params(updates), coefficients);
}

std::pair<ParamVector, StrategyState> aggregate_fedavgm(std::span<const ClientUpdate> updates,
                                                        const ParamVector& previous_global,
                                                        const StrategyState& state,
                                                        const StrategyHyperparams& hp) {
  require_range(hp.server_lr > 0.0, "server_lr", hp.server_lr);
  require_range(hp.momentum_beta >= 0.0 && hp.momentum_beta < 1.0, "momentum", hp.momentum_beta);
  if (!state.momentum) {
    throw ArgumentError("fedavgm: state carries no momentum vector");
  }
  const ParamVector averaged = aggregate_fedavg(updates);
  require_same_layout(previous_global, averaged, "fedavgm");
  require_same_layout(previous_global, *state.momentum, "fedavgm");

  const auto prev = previous_global.values();
  const auto avg = averaged.values();
  const auto v_old = state.momentum->values();
  std::vector<double> v(prev.size());
  std::vector<double> out(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double pseudo_gradient = prev[i] - avg[i];
    v[i] = hp.momentum_beta * v_old[i] + pseudo_gradient;
    out[i] = prev[i] - hp.server_lr * v[i];
  }

  StrategyState next = state;
  next.momentum = ParamVector(previous_global.manifest_ptr(), std::move(v));
  next.round = state.round + 1;
  return {ParamVector(previous_global.manifest_ptr(), std::move(out)), std::move(next)};
}

ParamVector aggregate_fedmedian(std::span<const ClientUpdate> updates,
                                const ParamVector& previous_global, const StrategyHyperparams& hp) {
  require_updates(updates, "fedmedian");
  require_same_layout(previous_global, updates[0].params, "fedmedian");
  require_range(hp.server_lr >= 0.0 && std::isfinite(hp.server_lr), "server_lr", hp.server_lr);

  // At unit step the update collapses to the parameter-space median.
  if (hp.server_lr == 1.0) {
    return coordinate_median(collect_params(updates));
  }

  const auto prev = previous_global.values();
  std::vector<ParamVector> gradients;
  gradients.reserve(updates.size());
  for (const auto& u : updates) {
    const auto w = u.params.values();
    std::vector<double> g(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
      g[i] = prev[i] - w[i];
    }
    gradients.emplace_back(previous_global.manifest_ptr(), std::move(g));
  }
  const ParamVector median = coordinate_median(gradients);
  std::vector<double> out(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    out[i] = prev[i] - hp.server_lr * median[i];
  }
  return ParamVector(previous_global.manifest_ptr(), std::move(out));
}

std::pair<ParamVector, StrategyState> aggregate_fedopt(std::span<const ClientUpdate> updates,
                                                       const ParamVector& previous_global,
                                                       const StrategyState& state,
                                                       const StrategyHyperparams& hp) {
  require_range(hp.server_lr > 0.0, "server_lr", hp.server_lr);
  require_range(hp.tau > 0.0, "tau", hp.tau);
  require_range(hp.beta1 >= 0.0 && hp.beta1 < 1.0, "beta1", hp.beta1);
  require_range(hp.beta2 >= 0.0 && hp.beta2 < 1.0, "beta2", hp.beta2);
  if (!state.first_moment || !state.second_moment) {
    throw ArgumentError("fedopt: state carries no moment vectors");
  }
  const ParamVector averaged = aggregate_fedavg(updates);
  require_same_layout(previous_global, averaged, "fedopt");
  require_same_layout(previous_global, *state.first_moment, "fedopt");
  require_same_layout(previous_global, *state.second_moment, "fedopt");

  const auto prev = previous_global.values();
  const auto avg = averaged.values();
  const auto m_old = state.first_moment->values();
  const auto v_old = state.second_moment->values();
  const std::size_t dim = prev.size();

  std::vector<double> m(dim);
  std::vector<double> v(v_old.begin(), v_old.end());
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double delta = avg[i] - prev[i];
    if (!std::isfinite(delta)) {
      throw NumericError(fmt::format("fedopt: non-finite pseudo-gradient at index {}", i));
    }
    m[i] = hp.beta1 * m_old[i] + (1.0 - hp.beta1) * delta;
    const double delta_sq = delta * delta;
    switch (hp.server_optimizer) {
      case ServerOptimizer::kSgd:
        out[i] = prev[i] + hp.server_lr * m[i];
        continue;
      case ServerOptimizer::kAdagrad:
        v[i] = v_old[i] + delta_sq;
        break;
      case ServerOptimizer::kAdam:
        v[i] = hp.beta2 * v_old[i] + (1.0 - hp.beta2) * delta_sq;
        break;
      case ServerOptimizer::kYogi:
        v[i] = v_old[i] - (1.0 - hp.beta2) * delta_sq * sign(v_old[i] - delta_sq);
        break;
    }
    out[i] = prev[i] + hp.server_lr * m[i] / (std::sqrt(v[i]) + hp.tau);
  }

  StrategyState next = state;
  next.first_moment = ParamVector(previous_global.manifest_ptr(), std::move(m));
  next.second_moment = ParamVector(previous_global.manifest_ptr(), std::move(v));
  next.round = state.round + 1;
  return {ParamVector(previous_global.manifest_ptr(), std::move(out)), std::move(next)};
}

double objective_f(std::span<const double> x, std::span<const ParamVector> client_params,
                   std::span<const std::size_t> counts) {
  if (client_params.empty()) {
    throw ArgumentError("objective_f: no client parameters");
  }
  if (x.size() != client_params.size() || counts.size() != client_params.size()) {
    throw ArgumentError(fmt::format("objective_f: length mismatch (x {}, params {}, counts {})",
                                    x.size(), client_params.size(), counts.size()));
  }
  double total = 0.0;
  for (auto n : counts) {
    if (n == 0) {
      throw ArgumentError("objective_f: zero example count");
    }
    total += static_cast<double>(n);
  }
  std::vector<double> coefficients(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    coefficients[i] = static_cast<double>(counts[i]) * x[i] / total;
  }
  const ParamVector candidate = linear_combination(client_params, coefficients);
  double f = 0.0;
  for (const auto& w : client_params) {
    f += l2_distance(candidate, w) / std::max(l2_norm_sum(candidate, w), kObjectiveEpsilon);
  }
  return f;
}

std::pair<ParamVector, AlphaSolution> aggregate_fedavgopt(std::span<const ClientUpdate> updates,
                                                          const SimplexConfig& config) {
  require_updates(updates, "fedavgopt");
  const std::vector<ParamVector> params = collect_params(updates);
  std::vector<std::size_t> counts;
  counts.reserve(updates.size());
  for (const auto& u : updates) {
    counts.push_back(u.num_examples);
  }

  const std::vector<double> ones(updates.size(), 1.0);
  const double f_ones = objective_f(ones, params, counts);

  const Objective objective = [&](std::span<const double> x) {
    try {
      return objective_f(x, params, counts);
    } catch (const NumericError&) {
      // Overflowing candidates are rejected by the solver.
      return std::numeric_limits<double>::infinity();
    }
  };
  MinimizeResult solved = minimize(objective, ones, config);

  AlphaSolution solution;
  solution.alpha = std::move(solved.x_star);
  solution.objective_at_alpha = solved.f_star;
  solution.objective_at_ones = f_ones;
  solution.converged = solved.converged;
  solution.iterations = solved.iterations;
  ParamVector aggregate = aggregate_scaled(updates, solution.alpha);
  return {std::move(aggregate), std::move(solution)};
}

namespace {

class ServerStrategy final : public Strategy {
 public:
  ServerStrategy(StrategyKind kind, StrategyHyperparams hp, SimplexConfig simplex)
      : kind_(kind), hp_(std::move(hp)), simplex_(simplex) {}

  StrategyKind kind() const override { return kind_; }
  const StrategyState& state() const override { return state_; }

  AggregationResult aggregate(std::span<const ClientUpdate> updates,
                              const ParamVector& previous_global) override {
    if (!initialised_) {
      state_ = initial_state(kind_, hp_, previous_global.manifest_ptr());
      initialised_ = true;
    }
    switch (kind_) {
      case StrategyKind::kFedAvg:
        return finish(aggregate_fedavg(updates));
      case StrategyKind::kFedAvgM: {
        auto [params, next] = aggregate_fedavgm(updates, previous_global, state_, hp_);
        state_ = std::move(next);
        return {std::move(params), std::nullopt};
      }
      case StrategyKind::kFedMedian:
        return finish(aggregate_fedmedian(updates, previous_global, hp_));
      case StrategyKind::kFedOpt:
      case StrategyKind::kFedYogi: {
        auto [params, next] = aggregate_fedopt(updates, previous_global, state_, hp_);
        state_ = std::move(next);
        return {std::move(params), std::nullopt};
      }
      case StrategyKind::kFedAvgOpt: {
        auto [params, alpha] = aggregate_fedavgopt(updates, simplex_);
        ++state_.round;
        return {std::move(params), std::move(alpha)};
      }
    }
    throw ArgumentError("unknown strategy kind");
  }

 private:
  AggregationResult finish(ParamVector params) {
    ++state_.round;
    return {std::move(params), std::nullopt};
  }

  StrategyKind kind_;
  StrategyHyperparams hp_;
  SimplexConfig simplex_;
  StrategyState state_;
  bool initialised_ = false;
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const StrategyHyperparams& hp,
                                        const SimplexConfig& simplex) {
  simplex.validate();
  if (kind != StrategyKind::kFedMedian) {
    hp.validate();
  }
  return std::make_unique<ServerStrategy>(kind, hp, simplex);
}

}  // namespace fedagg
