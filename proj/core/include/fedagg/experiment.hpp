// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedagg/orchestrator.hpp"

namespace fedagg {

struct BlobsSource {
  std::size_t samples_per_class = 500;
  std::size_t num_classes = 4;
  std::size_t dim = 20;
  double spread = 1.8;
  std::uint64_t seed = 7;
};

struct CsvSource {
  std::filesystem::path path;
  std::string label_column = "label";
};

using DatasetSource = std::variant<BlobsSource, CsvSource>;

/// Everything one experiment needs. `federation.model.input_dim` and
/// `num_classes` are filled in from the dataset at run time.
struct ExperimentConfig {
  FederationConfig federation;
  DatasetSource dataset;
  std::size_t num_clients = 4;
  double train_fraction = 0.2;
  /// Strategy for `run`.
  std::optional<StrategyKind> strategy;
  /// Strategies for `compare`; empty means all six.
  std::vector<StrategyKind> strategies;
  /// Fully resolved hyperparameters for every strategy kind.
  std::map<StrategyKind, StrategyHyperparams> hyperparams;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "results";
  std::size_t workers = 0;
};

/// JSON config. Relative dataset paths resolve against `base_dir`.
/// Throws ConfigError naming the offending key (and accepted values).
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir = ".");
ExperimentConfig parse_config(const std::filesystem::path& path);

enum class RunMode { kRun, kCompare };

/// Strategies executed in `mode`: the single configured strategy for kRun
/// (falling back to the first listed one), the list (or all six) for kCompare.
std::vector<StrategyKind> strategies_for(const ExperimentConfig& config, RunMode mode);

Dataset load_dataset(const DatasetSource& source);

struct ExperimentOutputs {
  ComparisonTable table;
  std::filesystem::path history_csv;
  std::filesystem::path rounds_csv;
  std::filesystem::path summary_json;
  std::filesystem::path summary_txt;
  std::vector<std::filesystem::path> curve_files;
};

/// Runs the experiment and writes every report into config.output_dir.
ExperimentOutputs execute_experiment(const ExperimentConfig& config, RunMode mode,
                                     const ComparisonOptions& options = {});

/// execute_experiment with errors turned into a one-line diagnostic on
/// `diagnostics` and a nonzero return value.
int run_experiment(const ExperimentConfig& config, RunMode mode, std::ostream& diagnostics,
                   const ComparisonOptions& options = {});

inline constexpr const char* kHistoryHeader =
    "strategy,seed,round,aggregated_accuracy,client_id,client_test_count,client_accuracy,"
    "client_loss,alpha_json";

void write_history_csv(const ComparisonTable& table, const std::filesystem::path& path);
void write_rounds_csv(const ComparisonTable& table, const std::filesystem::path& path);
void write_summary(const ComparisonTable& table, const std::filesystem::path& json_path,
                   const std::filesystem::path& text_path);

/// Two-column (round, aggregated accuracy) files under `dir`: one per
/// (strategy, seed), plus a per-strategy mean curve when several seeds ran.
std::vector<std::filesystem::path> emit_plot_data(const ComparisonTable& table,
                                                  const std::filesystem::path& dir);

/// Rounds to `digits` significant digits.
double round_significant(double value, int digits = 6);

}  // namespace fedagg
