// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fedagg {

struct SimplexConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Absolute per-coordinate offset used to build the initial simplex around x0.
  double initial_step = 0.05;
  double x_tolerance = 1e-4;
  double f_tolerance = 1e-4;
  /// 0 selects 200 * dimension.
  std::size_t max_iterations = 0;

  /// Throws ArgumentError when a coefficient or tolerance is out of range.
  void validate() const;
  std::size_t iteration_limit(std::size_t dimension) const;
};

struct MinimizeResult {
  std::vector<double> x_star;
  double f_star = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained Nelder-Mead minimisation started from the simplex
/// {x0, x0 + step*e_1, ..., x0 + step*e_n}. Non-finite objective values are
/// treated as +inf, except at x0 itself, which throws NumericError.
MinimizeResult minimize(const Objective& objective, std::span<const double> x0,
                        const SimplexConfig& config = {});

}  // namespace fedagg
