// SPDX-License-Identifier: Apache-2.0
#include "fedagg/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <fmt/format.h>

#include "fedagg/error.hpp"

namespace fedagg {

void SimplexConfig::validate() const {
  if (!(reflection > 0.0)) {
    throw ArgumentError(fmt::format("simplex reflection must be > 0, got {}", reflection));
  }
  if (!(expansion > std::max(reflection, 1.0))) {
    throw ArgumentError(
        fmt::format("simplex expansion must exceed max(reflection, 1), got {}", expansion));
  }
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw ArgumentError(fmt::format("simplex contraction must be in (0, 1), got {}", contraction));
  }
  if (!(shrink > 0.0 && shrink < 1.0)) {
    throw ArgumentError(fmt::format("simplex shrink must be in (0, 1), got {}", shrink));
  }
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
    throw ArgumentError(fmt::format("simplex initial_step must be > 0, got {}", initial_step));
  }
  if (!(x_tolerance > 0.0) || !(f_tolerance > 0.0)) {
    throw ArgumentError("simplex tolerances must be > 0");
  }
}

std::size_t SimplexConfig::iteration_limit(std::size_t dimension) const {
  return max_iterations != 0 ? max_iterations : 200 * dimension;
}

namespace {

struct Vertex {
  std::vector<double> x;
  double f;
  std::uint64_t seq;  // insertion order, breaks ties between equal f
};

bool vertex_less(const Vertex& a, const Vertex& b) {
  if (a.f != b.f) {
    return a.f < b.f;
  }
  return a.seq < b.seq;
}

// x = c + t * (p - c)
void along(std::span<const double> c, std::span<const double> p, double t, std::vector<double>& out) {
  out.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out[i] = c[i] + t * (p[i] - c[i]);
  }
}

}  // namespace

MinimizeResult minimize(const Objective& objective, std::span<const double> x0,
                        const SimplexConfig& config) {
  config.validate();
  const std::size_t n = x0.size();
  if (n == 0) {
    throw ArgumentError("minimize: dimension must be >= 1");
  }

  MinimizeResult result;
  auto eval = [&](std::span<const double> x) {
    ++result.evaluations;
    const double f = objective(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  std::uint64_t next_seq = 0;
  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  {
    std::vector<double> start(x0.begin(), x0.end());
    ++result.evaluations;
    const double f0 = objective(start);
    if (!std::isfinite(f0)) {
      throw NumericError("minimize: objective is not finite at the start point");
    }
    simplex.push_back({std::move(start), f0, next_seq++});
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(x0.begin(), x0.end());
    x[i] += config.initial_step;
    const double f = eval(x);
    simplex.push_back({std::move(x), f, next_seq++});
  }

  const std::size_t limit = config.iteration_limit(n);
  std::vector<double> centroid(n);
  std::vector<double> xr, xe, xc;

  while (true) {
    std::stable_sort(simplex.begin(), simplex.end(), vertex_less);
    const Vertex& best = simplex.front();

    double x_spread = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        x_spread = std::max(x_spread, std::abs(simplex[k].x[i] - best.x[i]));
      }
    }
    const double f_spread = simplex.back().f - best.f;
    if (x_spread < config.x_tolerance && f_spread < config.f_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= limit) {
      break;
    }
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        centroid[i] += simplex[k].x[i];
      }
    }
    for (auto& c : centroid) {
      c /= static_cast<double>(n);
    }

    Vertex& worst = simplex.back();
    const double f_best = best.f;
    const double f_second_worst = simplex[n - 1].f;

    along(centroid, worst.x, -config.reflection, xr);
    const double fr = eval(xr);

    if (fr < f_best) {
      along(centroid, xr, config.expansion / config.reflection, xe);
      const double fe = eval(xe);
      if (fe < fr) {
        worst = {xe, fe, next_seq++};
      } else {
        worst = {xr, fr, next_seq++};
      }
      continue;
    }
    if (fr < f_second_worst) {
      worst = {xr, fr, next_seq++};
      continue;
    }

    if (fr < worst.f) {
      along(centroid, xr, config.contraction, xc);
      const double fc = eval(xc);
      if (fc <= fr) {
        worst = {xc, fc, next_seq++};
        continue;
      }
    } else {
      along(centroid, worst.x, config.contraction, xc);
      const double fc = eval(xc);
      if (fc < worst.f) {
        worst = {xc, fc, next_seq++};
        continue;
      }
    }

    // Shrink every vertex towards the best one.
    for (std::size_t k = 1; k <= n; ++k) {
      along(simplex[0].x, simplex[k].x, config.shrink, xc);
      simplex[k] = {xc, eval(xc), next_seq++};
    }
  }

  result.x_star = simplex.front().x;
  result.f_star = simplex.front().f;
  return result;
}

}  // namespace fedagg
