// SPDX-License-Identifier: Apache-2.0
#include "fedagg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "fedagg/error.hpp"

namespace fedagg {

namespace {

using nlohmann::json;

std::vector<std::string> strategy_names() {
  std::vector<std::string> names;
  for (auto kind : all_strategy_kinds()) {
    names.emplace_back(to_string(kind));
  }
  return names;
}

// Typed, range-checked access to one JSON object; rejects unknown keys.
class Section {
 public:
  Section(const json& node, std::string path, std::vector<std::string> accepted)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) {
      throw ConfigError(fmt::format("'{}' must be an object", label()));
    }
    for (const auto& [key, value] : node_.items()) {
      if (std::find(accepted.begin(), accepted.end(), key) == accepted.end()) {
        throw ConfigError(fmt::format("unknown key '{}' in '{}'; accepted keys: {}", key, label(),
                                      fmt::join(accepted, ", ")));
      }
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  const json& raw(const std::string& key) const { return node_.at(key); }
  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 1) const {
    if (!has(key)) {
      return fallback;
    }
    const json& v = node_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(fmt::format("'{}' must be an integer", key_path(key)));
    }
    const auto value = v.get<std::int64_t>();
    if (value < static_cast<std::int64_t>(min)) {
      throw ConfigError(fmt::format("'{}' = {} is out of range; must be >= {}", key_path(key),
                                    value, min));
    }
    return static_cast<std::size_t>(value);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) {
      return fallback;
    }
    return to_seed(node_.at(key), key_path(key));
  }

  /// `range` describes the accepted values in the error message.
  template <typename Pred>
  double real(const std::string& key, double fallback, Pred valid, const char* range) const {
    if (!has(key)) {
      return fallback;
    }
    const json& v = node_.at(key);
    if (!v.is_number()) {
      throw ConfigError(fmt::format("'{}' must be a number", key_path(key)));
    }
    const double value = v.get<double>();
    if (!std::isfinite(value) || !valid(value)) {
      throw ConfigError(fmt::format("'{}' = {} is out of range; must be {}", key_path(key), value,
                                    range));
    }
    return value;
  }

  std::string text(const std::string& key) const {
    const json& v = node_.at(key);
    if (!v.is_string()) {
      throw ConfigError(fmt::format("'{}' must be a string", key_path(key)));
    }
    return v.get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) {
      return fallback;
    }
    const json& v = node_.at(key);
    if (!v.is_boolean()) {
      throw ConfigError(fmt::format("'{}' must be true or false", key_path(key)));
    }
    return v.get<bool>();
  }

  static std::uint64_t to_seed(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(fmt::format("'{}' must be a non-negative integer", where));
    }
    return v.get<std::uint64_t>();
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& node_;
  std::string path_;
};

StrategyKind strategy_from(const json& v, const std::string& where) {
  const std::string accepted = fmt::format("{}", fmt::join(strategy_names(), ", "));
  if (!v.is_string()) {
    throw ConfigError(fmt::format("'{}' must be a strategy name; accepted values: {}", where,
                                  accepted));
  }
  const auto name = v.get<std::string>();
  if (auto kind = parse_strategy_kind(name)) {
    return *kind;
  }
  throw ConfigError(fmt::format("invalid value '{}' for '{}'; accepted values: {}", name, where,
                                accepted));
}

bool in_unit_interval_open_right(double x) { return x >= 0.0 && x < 1.0; }
bool positive(double x) { return x > 0.0; }

void parse_hyperparams(const json& node, const std::string& path, StrategyKind kind,
                       StrategyHyperparams& hp) {
  const Section s(node, path,
                  {"server_lr", "momentum", "tau", "beta1", "beta2", "server_optimizer", "client_lr"});
  if (kind == StrategyKind::kFedMedian) {
    hp.server_lr = s.real("server_lr", hp.server_lr, [](double x) { return x >= 0.0; }, ">= 0");
  } else {
    hp.server_lr = s.real("server_lr", hp.server_lr, positive, "> 0");
  }
  hp.momentum_beta = s.real("momentum", hp.momentum_beta, in_unit_interval_open_right, "in [0, 1)");
  hp.tau = s.real("tau", hp.tau, positive, "> 0");
  hp.beta1 = s.real("beta1", hp.beta1, in_unit_interval_open_right, "in [0, 1)");
  hp.beta2 = s.real("beta2", hp.beta2, in_unit_interval_open_right, "in [0, 1)");
  if (s.has("client_lr")) {
    if (s.raw("client_lr").is_null()) {
      hp.client_lr.reset();
    } else {
      hp.client_lr = s.real("client_lr", 0.0, positive, "> 0");
    }
  }
  if (s.has("server_optimizer")) {
    const auto name = s.text("server_optimizer");
    const auto opt = parse_server_optimizer(name);
    if (!opt) {
      throw ConfigError(fmt::format(
          "invalid value '{}' for '{}'; accepted values: sgd, adagrad, adam, yogi", name,
          s.key_path("server_optimizer")));
    }
    hp.server_optimizer = *opt;
  }
}

DatasetSource parse_dataset(const json& node, const std::filesystem::path& base_dir) {
  const Section s(node, "dataset", {"blobs", "csv"});
  if (s.has("blobs") == s.has("csv")) {
    throw ConfigError("'dataset' must contain exactly one of 'blobs' or 'csv'");
  }
  if (s.has("blobs")) {
    const Section b(s.raw("blobs"), "dataset.blobs",
                    {"samples_per_class", "num_classes", "dim", "spread", "seed"});
    BlobsSource blobs;
    blobs.samples_per_class = b.count("samples_per_class", blobs.samples_per_class);
    blobs.num_classes = b.count("num_classes", blobs.num_classes, 2);
    blobs.dim = b.count("dim", blobs.dim);
    blobs.spread = b.real("spread", blobs.spread, [](double x) { return x >= 0.0; }, ">= 0");
    blobs.seed = b.seed("seed", blobs.seed);
    return blobs;
  }
  const Section c(s.raw("csv"), "dataset.csv", {"path", "label_column"});
  if (!c.has("path")) {
    throw ConfigError("'dataset.csv.path' is required");
  }
  CsvSource csv;
  csv.path = c.text("path");
  if (csv.path.is_relative()) {
    csv.path = base_dir / csv.path;
  }
  if (c.has("label_column")) {
    csv.label_column = c.text("label_column");
  }
  return csv;
}

std::string number(double v) { return fmt::format("{}", v); }

std::string alpha_json(const std::optional<AlphaSolution>& alpha) {
  if (!alpha) {
    return "";
  }
  std::string out = "\"[";
  for (std::size_t i = 0; i < alpha->alpha.size(); ++i) {
    if (i) out += ',';
    out += number(alpha->alpha[i]);
  }
  out += "]\"";
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  }
  return out;
}

std::string seed_tag(std::uint64_t seed) { return fmt::format("seed{}", seed); }

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  const Section s(root, "",
                  {"dataset", "strategy", "strategies", "seeds", "output_dir", "partition",
                   "federation", "model", "train", "simplex", "hyperparams", "workers"});

  ExperimentConfig config;
  for (auto kind : all_strategy_kinds()) {
    config.hyperparams[kind] = StrategyHyperparams::defaults_for(kind);
  }

  if (!s.has("dataset")) {
    throw ConfigError("'dataset' is required");
  }
  config.dataset = parse_dataset(s.raw("dataset"), base_dir);

  if (s.has("strategy")) {
    config.strategy = strategy_from(s.raw("strategy"), "strategy");
  }
  if (s.has("strategies")) {
    const json& list = s.raw("strategies");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("'strategies' must be a non-empty list of strategy names");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto kind = strategy_from(list[i], fmt::format("strategies[{}]", i));
      if (std::find(config.strategies.begin(), config.strategies.end(), kind) !=
          config.strategies.end()) {
        throw ConfigError(fmt::format("strategy '{}' listed twice", to_string(kind)));
      }
      config.strategies.push_back(kind);
    }
  }
  if (s.has("seeds")) {
    const json& list = s.raw("seeds");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("'seeds' must be a non-empty list of non-negative integers");
    }
    config.seeds.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      config.seeds.push_back(Section::to_seed(list[i], fmt::format("seeds[{}]", i)));
    }
  }
  if (s.has("output_dir")) {
    config.output_dir = s.text("output_dir");
  }
  config.workers = s.count("workers", 0, 0);

  if (s.has("partition")) {
    const Section p(s.raw("partition"), "partition", {"clients", "train_fraction"});
    config.num_clients = p.count("clients", config.num_clients);
    config.train_fraction = p.real("train_fraction", config.train_fraction,
                                   [](double x) { return x > 0.0 && x < 1.0; }, "in (0, 1)");
  }

  FederationConfig& fed = config.federation;
  if (s.has("federation")) {
    const Section f(s.raw("federation"), "federation", {"rounds", "min_clients", "parallel_clients"});
    fed.rounds = f.count("rounds", fed.rounds);
    fed.min_clients = f.count("min_clients", fed.min_clients);
    fed.parallel_clients = f.flag("parallel_clients", fed.parallel_clients);
  }
  if (config.num_clients < fed.min_clients) {
    throw ConfigError(fmt::format("'partition.clients' = {} is below 'federation.min_clients' = {}",
                                  config.num_clients, fed.min_clients));
  }

  if (s.has("model")) {
    const Section m(s.raw("model"), "model", {"hidden_dims", "activation"});
    if (m.has("hidden_dims")) {
      const json& dims = m.raw("hidden_dims");
      if (!dims.is_array()) {
        throw ConfigError("'model.hidden_dims' must be a list of positive integers");
      }
      for (const auto& d : dims) {
        if (!d.is_number_integer() || d.get<std::int64_t>() < 1) {
          throw ConfigError("'model.hidden_dims' must be a list of positive integers");
        }
        fed.model.hidden_dims.push_back(d.get<std::size_t>());
      }
    }
    if (m.has("activation")) {
      const auto name = m.text("activation");
      const auto act = parse_activation(name);
      if (!act) {
        throw ConfigError(fmt::format(
            "invalid value '{}' for 'model.activation'; accepted values: relu, tanh", name));
      }
      fed.model.activation = *act;
    }
  }

  if (s.has("train")) {
    const Section t(s.raw("train"), "train", {"learning_rate", "batch_size", "local_epochs"});
    fed.train.learning_rate =
        t.real("learning_rate", fed.train.learning_rate, positive, "> 0");
    fed.train.batch_size = t.count("batch_size", fed.train.batch_size);
    fed.train.local_epochs = t.count("local_epochs", fed.train.local_epochs);
  }

  if (s.has("simplex")) {
    const Section x(s.raw("simplex"), "simplex",
                    {"reflection", "expansion", "contraction", "shrink", "initial_step",
                     "x_tolerance", "f_tolerance", "max_iterations"});
    SimplexConfig& sc = fed.simplex;
    sc.reflection = x.real("reflection", sc.reflection, positive, "> 0");
    sc.expansion = x.real("expansion", sc.expansion, positive, "> max(reflection, 1)");
    sc.contraction = x.real("contraction", sc.contraction,
                            [](double v) { return v > 0.0 && v < 1.0; }, "in (0, 1)");
    sc.shrink = x.real("shrink", sc.shrink, [](double v) { return v > 0.0 && v < 1.0; }, "in (0, 1)");
    sc.initial_step = x.real("initial_step", sc.initial_step, positive, "> 0");
    sc.x_tolerance = x.real("x_tolerance", sc.x_tolerance, positive, "> 0");
    sc.f_tolerance = x.real("f_tolerance", sc.f_tolerance, positive, "> 0");
    sc.max_iterations = x.count("max_iterations", sc.max_iterations, 0);
    try {
      sc.validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  }

  if (s.has("hyperparams")) {
    const Section h(s.raw("hyperparams"), "hyperparams", strategy_names());
    for (auto kind : all_strategy_kinds()) {
      const std::string name(to_string(kind));
      if (h.has(name)) {
        parse_hyperparams(h.raw(name), "hyperparams." + name, kind, config.hyperparams[kind]);
      }
    }
  }
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::vector<StrategyKind> strategies_for(const ExperimentConfig& config, RunMode mode) {
  if (mode == RunMode::kRun) {
    if (config.strategy) {
      return {*config.strategy};
    }
    if (!config.strategies.empty()) {
      return {config.strategies.front()};
    }
    throw ConfigError("no strategy configured for 'run'");
  }
  if (!config.strategies.empty()) {
    return config.strategies;
  }
  const auto all = all_strategy_kinds();
  return {all.begin(), all.end()};
}

Dataset load_dataset(const DatasetSource& source) {
  if (const auto* blobs = std::get_if<BlobsSource>(&source)) {
    return generate_blobs(blobs->samples_per_class, blobs->num_classes, blobs->dim, blobs->spread,
                          blobs->seed);
  }
  const auto& csv = std::get<CsvSource>(source);
  return load_csv(csv.path, csv.label_column);
}

double round_significant(double value, int digits) {
  return std::stod(fmt::format("{:.{}g}", value, digits));
}

void write_history_csv(const ComparisonTable& table, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << kHistoryHeader << '\n';
  for (const auto& run : table.runs) {
    for (const auto& report : run.reports) {
      const std::string alpha = alpha_json(report.alpha);
      for (const auto& client : report.per_client) {
        out << to_string(run.strategy) << ',' << run.seed << ',' << report.round << ','
            << number(report.aggregated_accuracy) << ',' << client.client_id << ','
            << client.num_test_examples << ',' << number(client.accuracy) << ','
            << number(client.loss) << ',' << alpha << '\n';
      }
    }
  }
}

void write_rounds_csv(const ComparisonTable& table, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "strategy,seed,round,aggregated_accuracy,global_accuracy,global_loss,"
         "objective_at_alpha,objective_at_ones,alpha_converged\n";
  for (const auto& run : table.runs) {
    for (const auto& r : run.reports) {
      out << to_string(run.strategy) << ',' << run.seed << ',' << r.round << ','
          << number(r.aggregated_accuracy) << ',' << number(r.global_accuracy) << ','
          << number(r.global_loss) << ',';
      if (r.alpha) {
        out << number(r.alpha->objective_at_alpha) << ',' << number(r.alpha->objective_at_ones)
            << ',' << (r.alpha->converged ? "true" : "false");
      } else {
        out << ",,";
      }
      out << '\n';
    }
  }
}

void write_summary(const ComparisonTable& table, const std::filesystem::path& json_path,
                   const std::filesystem::path& text_path) {
  json summary;
  summary["seeds"] = table.seeds;
  summary["rounds"] = table.runs.empty() ? 0 : table.runs.front().reports.size();
  json per_strategy = json::object();
  for (auto kind : table.strategies) {
    json entry;
    json per_seed = json::object();
    for (auto seed : table.seeds) {
      per_seed[std::to_string(seed)] = round_significant(table.run(kind, seed).mean_accuracy());
    }
    entry["mean_accuracy_per_seed"] = std::move(per_seed);
    entry["mean_accuracy"] = round_significant(table.mean_accuracy(kind));
    per_strategy[std::string(to_string(kind))] = std::move(entry);
  }
  summary["strategies"] = std::move(per_strategy);
  {
    auto out = open_output(json_path);
    out << summary.dump(2) << '\n';
  }

  // Rows are seeds (plus their mean), columns are strategies.
  auto out = open_output(text_path);
  out << fmt::format("{:<10}", "seed");
  for (auto kind : table.strategies) {
    out << fmt::format(" {:>10}", to_string(kind));
  }
  out << '\n';
  for (auto seed : table.seeds) {
    out << fmt::format("{:<10}", seed);
    for (auto kind : table.strategies) {
      out << fmt::format(" {:>10.5f}", table.run(kind, seed).mean_accuracy());
    }
    out << '\n';
  }
  out << fmt::format("{:<10}", "mean");
  for (auto kind : table.strategies) {
    out << fmt::format(" {:>10.5f}", table.mean_accuracy(kind));
  }
  out << '\n';
}

std::vector<std::filesystem::path> emit_plot_data(const ComparisonTable& table,
                                                  const std::filesystem::path& dir) {
  if (table.runs.empty()) {
    throw ArgumentError("emit_plot_data: empty history");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& run : table.runs) {
    if (run.reports.empty()) {
      throw ArgumentError("emit_plot_data: run without rounds");
    }
    const auto path = dir / fmt::format("{}_{}.dat", to_string(run.strategy), seed_tag(run.seed));
    auto out = open_output(path);
    out << "# round aggregated_accuracy\n";
    for (const auto& r : run.reports) {
      out << r.round << ' ' << number(r.aggregated_accuracy) << '\n';
    }
    files.push_back(path);
  }
  if (table.seeds.size() > 1) {
    for (auto kind : table.strategies) {
      const auto curve = table.mean_curve(kind);
      const auto path = dir / fmt::format("{}_mean.dat", to_string(kind));
      auto out = open_output(path);
      out << "# round mean_aggregated_accuracy\n";
      for (std::size_t i = 0; i < curve.size(); ++i) {
        out << (i + 1) << ' ' << number(curve[i]) << '\n';
      }
      files.push_back(path);
    }
  }
  return files;
}

ExperimentOutputs execute_experiment(const ExperimentConfig& config, RunMode mode,
                                     const ComparisonOptions& options) {
  const Dataset dataset = load_dataset(config.dataset);

  FederationConfig base = config.federation;
  base.model.input_dim = dataset.features.cols();
  base.model.num_classes = dataset.num_classes();

  ComparisonOptions opts = options;
  opts.hyperparams = config.hyperparams;
  if (opts.workers == 0) {
    opts.workers = config.workers;
  }

  const auto strategies = strategies_for(config, mode);
  const ShardFactory shards = [&](std::uint64_t seed) {
    return make_client_shards(dataset, config.num_clients, config.train_fraction, seed);
  };

  ExperimentOutputs outputs{compare_strategies(base, strategies, config.seeds, shards, opts),
                            config.output_dir / "history.csv",
                            config.output_dir / "rounds.csv",
                            config.output_dir / "summary.json",
                            config.output_dir / "summary.txt",
                            {}};
  std::filesystem::create_directories(config.output_dir);
  write_history_csv(outputs.table, outputs.history_csv);
  write_rounds_csv(outputs.table, outputs.rounds_csv);
  write_summary(outputs.table, outputs.summary_json, outputs.summary_txt);
  outputs.curve_files = emit_plot_data(outputs.table, config.output_dir / "curves");
  return outputs;
}

int run_experiment(const ExperimentConfig& config, RunMode mode, std::ostream& diagnostics,
                   const ComparisonOptions& options) {
  try {
    execute_experiment(config, mode, options);
    return 0;
  } catch (const std::exception& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    diagnostics << "fedagg: error: " << message << '\n';
    return 1;
  }
}

}  // namespace fedagg
