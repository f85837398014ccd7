// SPDX-License-Identifier: Apache-2.0
#include "fedagg/params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fedagg/error.hpp"

namespace fedagg {

std::size_t TensorShape::size() const noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

ShapeManifest::ShapeManifest(std::vector<TensorShape> entries) : entries_(std::move(entries)) {
  offsets_.reserve(entries_.size() + 1);
  offsets_.push_back(0);
  for (const auto& entry : entries_) {
    if (entry.dims.empty()) {
      throw ShapeError(fmt::format("tensor '{}' has no dimensions", entry.name));
    }
    if (std::find(entry.dims.begin(), entry.dims.end(), 0u) != entry.dims.end()) {
      throw ShapeError(fmt::format("tensor '{}' has a zero dimension", entry.name));
    }
    offsets_.push_back(offsets_.back() + entry.size());
  }
}

ShapeManifest ShapeManifest::flat(std::size_t n) {
  if (n == 0) {
    return ShapeManifest{};
  }
  return ShapeManifest({TensorShape{"values", {n}}});
}

ParamVector::ParamVector(ManifestPtr manifest, std::vector<double> values)
    : manifest_(std::move(manifest)), values_(std::move(values)) {
  if (!manifest_) {
    throw ArgumentError("ParamVector requires a manifest");
  }
  if (values_.size() != manifest_->total_size()) {
    throw ShapeError(fmt::format("parameter vector has {} values but manifest describes {}",
                                 values_.size(), manifest_->total_size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError(fmt::format("non-finite parameter at index {}", i));
    }
  }
}

ParamVector ParamVector::zeros(ManifestPtr manifest) {
  const auto n = manifest ? manifest->total_size() : 0;
  return ParamVector(std::move(manifest), std::vector<double>(n, 0.0));
}

ParamVector ParamVector::from_values(std::vector<double> values) {
  auto manifest = std::make_shared<const ShapeManifest>(ShapeManifest::flat(values.size()));
  return ParamVector(std::move(manifest), std::move(values));
}

void require_same_layout(const ParamVector& a, const ParamVector& b, const char* context) {
  if (!a.same_layout(b)) {
    throw ShapeError(fmt::format("{}: parameter manifests differ ({} vs {} values)", context,
                                 a.size(), b.size()));
  }
}

ParamVector flatten(std::span<const NamedTensor> tensors) {
  std::vector<TensorShape> entries;
  std::vector<double> values;
  entries.reserve(tensors.size());
  for (const auto& tensor : tensors) {
    TensorShape shape{tensor.name, tensor.dims};
    if (shape.dims.empty() || shape.size() != tensor.values.size()) {
      throw ShapeError(fmt::format("tensor '{}' holds {} values, inconsistent with its dims",
                                   tensor.name, tensor.values.size()));
    }
    values.insert(values.end(), tensor.values.begin(), tensor.values.end());
    entries.push_back(std::move(shape));
  }
  return ParamVector(std::make_shared<const ShapeManifest>(std::move(entries)), std::move(values));
}

std::vector<NamedTensor> unflatten(const ParamVector& params) {
  const auto& manifest = params.manifest();
  const auto values = params.values();
  std::vector<NamedTensor> out;
  out.reserve(manifest.entries().size());
  for (std::size_t i = 0; i < manifest.entries().size(); ++i) {
    const auto& entry = manifest.entries()[i];
    const auto begin = values.begin() + static_cast<std::ptrdiff_t>(manifest.offset(i));
    out.push_back(NamedTensor{entry.name, entry.dims,
                              std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(entry.size()))});
  }
  return out;
}

ParamVector linear_combination(std::span<const ParamVector> vectors,
                               std::span<const double> coefficients) {
  if (vectors.empty()) {
    throw ArgumentError("linear_combination: empty vector list");
  }
  if (vectors.size() != coefficients.size()) {
    throw ArgumentError(fmt::format("linear_combination: {} vectors but {} coefficients",
                                    vectors.size(), coefficients.size()));
  }
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    require_same_layout(vectors[0], vectors[k], "linear_combination");
    if (!std::isfinite(coefficients[k])) {
      throw NumericError(fmt::format("linear_combination: non-finite coefficient {}", k));
    }
  }
  std::vector<double> out(vectors[0].size(), 0.0);
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    const double c = coefficients[k];
    const auto v = vectors[k].values();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += c * v[i];
    }
  }
  return ParamVector(vectors[0].manifest_ptr(), std::move(out));
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "l2_distance");
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double l2_norm_sum(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "l2_norm_sum");
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = x[i] + y[i];
    sum += s * s;
  }
  return std::sqrt(sum);
}

ParamVector coordinate_median(std::span<const ParamVector> vectors) {
  if (vectors.empty()) {
    throw ArgumentError("coordinate_median: empty vector list");
  }
  for (const auto& v : vectors) {
    require_same_layout(vectors[0], v, "coordinate_median");
  }
  const std::size_t n = vectors.size();
  const std::size_t dim = vectors[0].size();
  std::vector<double> column(n);
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      column[k] = vectors[k][i];
    }
    std::sort(column.begin(), column.end());
    out[i] = (n % 2 == 1) ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return ParamVector(vectors[0].manifest_ptr(), std::move(out));
}

}  // namespace fedagg
