// SPDX-License-Identifier: Apache-2.0
#include "fedagg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <fmt/format.h>

#include "fedagg/error.hpp"

namespace fedagg {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.class_names = class_names;
  out.features = Matrix(rows.size(), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = features.row(rows[k]);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
    out.labels.push_back(labels[rows[k]]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (int label : labels) {
    ++counts.at(static_cast<std::size_t>(label));
  }
  return counts;
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ArgumentError(fmt::format("dataset has {} feature rows but {} labels", features.rows(),
                                    labels.size()));
  }
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= class_names.size()) {
      throw ArgumentError(fmt::format("label {} at row {} outside [0, {})", labels[r], r,
                                      class_names.size()));
    }
  }
}

Dataset generate_blobs(std::size_t samples_per_class, std::size_t num_classes, std::size_t dim,
                       double spread, std::uint64_t seed) {
  if (num_classes < 2) {
    throw ArgumentError("generate_blobs: num_classes must be >= 2");
  }
  if (dim == 0 || samples_per_class == 0) {
    throw ArgumentError("generate_blobs: dim and samples_per_class must be >= 1");
  }
  if (!(spread >= 0.0) || !std::isfinite(spread)) {
    throw ArgumentError(fmt::format("generate_blobs: spread must be >= 0, got {}", spread));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(num_classes, dim);
  for (auto& c : centers.data()) {
    c = normal(rng);
  }

  Dataset out;
  out.features = Matrix(samples_per_class * num_classes, dim);
  out.labels.reserve(samples_per_class * num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    out.class_names.push_back(fmt::format("class_{}", k));
  }
  std::size_t row = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t s = 0; s < samples_per_class; ++s, ++row) {
      auto x = out.features.row(row);
      for (std::size_t d = 0; d < dim; ++d) {
        const double noise = normal(rng);
        x[d] = centers(k, d) + spread * noise;
      }
      out.labels.push_back(static_cast<int>(k));
    }
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Comma split with double-quoted fields ("" escapes a quote).
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.emplace_back(trim(field));
  return fields;
}

void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  std::shuffle(v.begin(), v.end(), rng);
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& dataset) {
  dataset.validate();
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    by_class[static_cast<std::size_t>(dataset.labels[r])].push_back(r);
  }
  return by_class;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(ParseError::Kind::kMissingFile,
                     fmt::format("cannot open CSV file '{}'", path.string()));
  }

  std::string line;
  std::size_t line_number = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_number;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) {
    throw ParseError(ParseError::Kind::kEmpty, fmt::format("CSV file '{}' is empty", path.string()));
  }
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw ParseError(ParseError::Kind::kMissingColumn,
                     fmt::format("CSV file '{}' has no label column '{}'", path.string(),
                                 label_column));
  }
  const auto label_index = static_cast<std::size_t>(label_it - header.begin());

  Dataset out;
  std::map<std::string, int, std::less<>> label_ids;
  std::vector<double> row_values;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) {
      continue;
    }
    ++data_row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(ParseError::Kind::kRaggedRow,
                       fmt::format("{}: row {} (line {}) has {} fields, header has {}",
                                   path.string(), data_row, line_number, fields.size(),
                                   header.size()),
                       data_row);
    }
    row_values.clear();
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_index) {
        continue;
      }
      const std::string& cell = fields[c];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(value)) {
        throw ParseError(ParseError::Kind::kBadCell,
                         fmt::format("{}: non-numeric value '{}' at row {} (line {}), column {} ('{}')",
                                     path.string(), cell, data_row, line_number, c + 1, header[c]),
                         data_row, c + 1);
      }
      row_values.push_back(value);
    }
    const std::string& label = fields[label_index];
    auto [it, inserted] = label_ids.try_emplace(label, static_cast<int>(out.class_names.size()));
    if (inserted) {
      out.class_names.push_back(label);
    }
    out.labels.push_back(it->second);
    out.features.push_row(row_values);
  }
  if (out.empty()) {
    throw ParseError(ParseError::Kind::kEmpty,
                     fmt::format("CSV file '{}' contains a header but no data rows", path.string()));
  }
  return out;
}

std::vector<std::vector<std::size_t>> stratified_partition_indices(const Dataset& dataset,
                                                                   std::size_t num_clients,
                                                                   std::uint64_t seed) {
  if (num_clients == 0) {
    throw ArgumentError("stratified_partition: num_clients must be >= 1");
  }
  auto by_class = indices_by_class(dataset);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].size() < num_clients) {
      throw ArgumentError(fmt::format(
          "stratified_partition: class '{}' has {} samples, fewer than {} clients",
          dataset.class_names[k], by_class[k].size(), num_clients));
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> shards(num_clients);
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    shuffle_indices(members, rng);
    for (auto row : members) {
      shards[dealt % num_clients].push_back(row);
      ++dealt;
    }
  }
  for (auto& shard : shards) {
    shuffle_indices(shard, rng);
  }
  return shards;
}

std::vector<Dataset> stratified_partition(const Dataset& dataset, std::size_t num_clients,
                                          std::uint64_t seed) {
  std::vector<Dataset> out;
  for (const auto& rows : stratified_partition_indices(dataset, num_clients, seed)) {
    out.push_back(dataset.subset(rows));
  }
  return out;
}

std::size_t stratified_train_count(std::size_t count, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError(fmt::format("train_fraction must be in (0, 1), got {}", train_fraction));
  }
  if (count < 2) {
    throw ArgumentError(fmt::format("cannot split a class of {} sample(s)", count));
  }
  const auto rounded =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count) + 0.5));
  return std::clamp<std::size_t>(rounded, 1, count - 1);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError(
        fmt::format("stratified_train_test_split: train_fraction must be in (0, 1), got {}",
                    train_fraction));
  }
  auto by_class = indices_by_class(dataset);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].size() < 2) {
      throw ArgumentError(fmt::format(
          "stratified_train_test_split: class '{}' has {} samples, need at least 2",
          dataset.class_names[k], by_class[k].size()));
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (auto& members : by_class) {
    shuffle_indices(members, rng);
    const std::size_t n_train = stratified_train_count(members.size(), train_fraction);
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  // Keep the source's row order on both sides.
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> stratified_train_test_split(const Dataset& dataset,
                                                        double train_fraction, std::uint64_t seed) {
  const auto [train, test] = stratified_split_indices(dataset, train_fraction, seed);
  return {dataset.subset(train), dataset.subset(test)};
}

std::vector<ClientShard> make_client_shards(const Dataset& dataset, std::size_t num_clients,
                                            double train_fraction, std::uint64_t seed) {
  std::vector<ClientShard> shards;
  auto parts = stratified_partition(dataset, num_clients, seed);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto [train, test] = stratified_train_test_split(parts[i], train_fraction, seed + 1 + i);
    shards.push_back({fmt::format("client_{}", i), std::move(train), std::move(test)});
  }
  return shards;
}

}  // namespace fedagg
