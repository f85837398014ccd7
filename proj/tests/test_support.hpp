// SPDX-License-Identifier: Apache-2.0
// Random generators and small oracles shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fedagg/params.hpp"
#include "fedagg/strategies.hpp"

namespace fedagg::testing {

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline std::size_t random_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline ManifestPtr flat_manifest(std::size_t n) {
  return std::make_shared<const ShapeManifest>(ShapeManifest::flat(n));
}

inline std::vector<ClientUpdate> random_updates(std::mt19937_64& rng, const ManifestPtr& manifest,
                                                std::size_t clients) {
  std::vector<ClientUpdate> updates;
  for (std::size_t i = 0; i < clients; ++i) {
    updates.push_back({"client_" + std::to_string(i), random_size(rng, 1, 500),
                       ParamVector(manifest, random_values(rng, manifest->total_size())),
                       {}});
  }
  return updates;
}

inline ClientUpdate make_update(std::vector<double> values, std::size_t n, std::string id = "c") {
  return {std::move(id), n, ParamVector::from_values(std::move(values)), {}};
}

/// Sort-based per-coordinate median, written from the definition.
inline std::vector<double> median_oracle(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out(rows.front().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<double> col;
    for (const auto& r : rows) col.push_back(r[i]);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    out[i] = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return out;
}

}  // namespace fedagg::testing
