// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fedagg {

struct TensorShape {
  std::string name;
  std::vector<std::size_t> dims;

  std::size_t size() const noexcept;
  bool operator==(const TensorShape&) const = default;
};

/// Ordered list of named tensor shapes describing how a flat parameter vector
/// maps back onto a model's tensors.
class ShapeManifest {
 public:
  ShapeManifest() = default;
  explicit ShapeManifest(std::vector<TensorShape> entries);

  /// Single unnamed 1-D tensor of length `n`.
  static ShapeManifest flat(std::size_t n);

  const std::vector<TensorShape>& entries() const noexcept { return entries_; }
  std::size_t total_size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  /// Start of entry `i` inside the flat vector.
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  bool operator==(const ShapeManifest& other) const { return entries_ == other.entries_; }

 private:
  std::vector<TensorShape> entries_;
  std::vector<std::size_t> offsets_;
};

using ManifestPtr = std::shared_ptr<const ShapeManifest>;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

/// A model's parameters flattened to one vector of doubles. Immutable; every
/// constructed instance holds only finite values and matches its manifest.
class ParamVector {
 public:
  /// Throws ShapeError on a length mismatch and NumericError on NaN/Inf.
  ParamVector(ManifestPtr manifest, std::vector<double> values);

  static ParamVector zeros(ManifestPtr manifest);
  /// Convenience for plain vectors: wraps `values` in a flat manifest.
  static ParamVector from_values(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  const ShapeManifest& manifest() const noexcept { return *manifest_; }
  const ManifestPtr& manifest_ptr() const noexcept { return manifest_; }

  bool same_layout(const ParamVector& other) const noexcept {
    return manifest_ == other.manifest_ || *manifest_ == *other.manifest_;
  }

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.same_layout(b) && a.values_ == b.values_;
  }

 private:
  ManifestPtr manifest_;
  std::vector<double> values_;
};

/// Throws ShapeError naming `context` when the layouts differ.
void require_same_layout(const ParamVector& a, const ParamVector& b, const char* context);

ParamVector flatten(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> unflatten(const ParamVector& params);

/// sum_i coefficients[i] * vectors[i].
ParamVector linear_combination(std::span<const ParamVector> vectors,
                               std::span<const double> coefficients);

double l2_distance(const ParamVector& a, const ParamVector& b);

/// ||a + b||_2
double l2_norm_sum(const ParamVector& a, const ParamVector& b);

/// Per-coordinate median; even counts take the midpoint of the two central
/// order statistics.
ParamVector coordinate_median(std::span<const ParamVector> vectors);

}  // namespace fedagg
