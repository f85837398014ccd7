// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedagg {

/// Vectors or matrices whose layouts disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition on argument values was violated (empty list, bad range, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN or Inf reached a place that requires finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment or federation configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `row` is the 1-based data row (0 when not row-specific);
/// `column` is the 1-based column (0 when not column-specific).
class ParseError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kEmpty, kBadCell, kRaggedRow, kMissingColumn };

  ParseError(Kind kind, const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : std::runtime_error(what), kind_(kind), row_(row), column_(column) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::size_t column_;
};

}  // namespace fedagg
