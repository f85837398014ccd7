// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedagg/matrix.hpp"

namespace fedagg {

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  /// Rows `rows`, in that order, sharing this dataset's class names.
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Per-class sample counts, indexed by label.
  std::vector<std::size_t> class_counts() const;
  /// Throws ArgumentError when labels and features disagree or a label is out of range.
  void validate() const;
};

struct ClientShard {
  std::string client_id;
  Dataset train;
  Dataset test;
};

/// Isotropic Gaussian clusters: centres drawn from N(0, 1) per coordinate,
/// samples at centre + spread * N(0, 1). Rows are grouped by class.
Dataset generate_blobs(std::size_t samples_per_class, std::size_t num_classes, std::size_t dim,
                       double spread, std::uint64_t seed);

/// Reads a headed, comma-separated file. Every column except `label_column`
/// must be numeric; labels are mapped to [0, C) in order of first appearance.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Row indices of each shard. Per class, shard counts differ by at most one;
/// the starting shard rotates between classes so totals stay balanced too.
std::vector<std::vector<std::size_t>> stratified_partition_indices(const Dataset& dataset,
                                                                   std::size_t num_clients,
                                                                   std::uint64_t seed);
std::vector<Dataset> stratified_partition(const Dataset& dataset, std::size_t num_clients,
                                          std::uint64_t seed);

/// Number of training rows drawn from a class of `count` samples: round half
/// up, then clamped to [1, count - 1].
std::size_t stratified_train_count(std::size_t count, double train_fraction);

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const Dataset& dataset, double train_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_train_test_split(const Dataset& dataset,
                                                        double train_fraction, std::uint64_t seed);

/// Partition into `num_clients` stratified shards with `seed`, then split
/// shard i with seed + 1 + i. Client ids are "client_0", "client_1", ...
std::vector<ClientShard> make_client_shards(const Dataset& dataset, std::size_t num_clients,
                                            double train_fraction, std::uint64_t seed);

}  // namespace fedagg
