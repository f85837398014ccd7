// SPDX-License-Identifier: Apache-2.0
#include "fedagg/nelder_mead.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "fedagg/error.hpp"
#include "test_support.hpp"

namespace fedagg {
namespace {

double rosenbrock(std::span<const double> x) {
  return (1 - x[0]) * (1 - x[0]) + 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
}

TEST(NelderMeadTest, OneDimensionalQuadratic) {
  const std::vector<double> x0{1.0};
  const auto r = minimize([](std::span<const double> x) { return (x[0] - 2) * (x[0] - 2); }, x0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x_star[0], 2.0, 1e-3);
}

TEST(NelderMeadTest, ConstantObjectiveConvergesInsideInitialSimplex) {
  const std::vector<double> x0{1.0, 1.0};
  const SimplexConfig config;
  const auto r = minimize([](std::span<const double>) { return 7.0; }, x0, config);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.f_star, 7.0);
  for (double xi : r.x_star) {
    EXPECT_GE(xi, 1.0);
    EXPECT_LE(xi, 1.0 + config.initial_step);
  }
}

TEST(NelderMeadTest, Rosenbrock) {
  const std::vector<double> x0{0.0, 0.0};
  const auto r = minimize(rosenbrock, x0);
  EXPECT_NEAR(r.x_star[0], 1.0, 1e-2);
  EXPECT_NEAR(r.x_star[1], 1.0, 1e-2);
}

TEST(NelderMeadTest, FStarIsStoredObjectiveValue) {
  const std::vector<double> x0{-1.2, 1.0};
  const auto r = minimize(rosenbrock, x0);
  EXPECT_EQ(r.f_star, rosenbrock(r.x_star));
}

TEST(NelderMeadTest, NonFiniteStartThrows) {
  const std::vector<double> x0{1.0};
  EXPECT_THROW(minimize([](std::span<const double>) { return std::nan(""); }, x0), NumericError);
}

TEST(NelderMeadTest, NonFiniteValuesMidRunAreRejected) {
  // Undefined beyond x = 2.5; the minimum at 2 sits next to the hole.
  auto f = [](std::span<const double> x) {
    if (x[0] > 2.5) return std::numeric_limits<double>::quiet_NaN();
    return (x[0] - 2) * (x[0] - 2);
  };
  const std::vector<double> x0{0.0};
  SimplexConfig config;
  config.initial_step = 1.0;
  const auto r = minimize(f, x0, config);
  EXPECT_TRUE(std::isfinite(r.f_star));
  EXPECT_NEAR(r.x_star[0], 2.0, 1e-3);
}

TEST(NelderMeadTest, IterationLimitReportsNotConverged) {
  SimplexConfig config;
  config.max_iterations = 3;
  const std::vector<double> x0{-1.2, 1.0};
  const auto r = minimize(rosenbrock, x0, config);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
  EXPECT_EQ(SimplexConfig{}.iteration_limit(4), 800u);
}

TEST(NelderMeadTest, InvalidConfig) {
  const std::vector<double> x0{0.0};
  auto f = [](std::span<const double> x) { return x[0] * x[0]; };
  SimplexConfig c;
  c.expansion = 1.0;
  EXPECT_THROW(minimize(f, x0, c), ArgumentError);
  c = {};
  c.contraction = 1.0;
  EXPECT_THROW(minimize(f, x0, c), ArgumentError);
  c = {};
  c.shrink = 0.0;
  EXPECT_THROW(minimize(f, x0, c), ArgumentError);
  c = {};
  c.x_tolerance = 0.0;
  EXPECT_THROW(minimize(f, x0, c), ArgumentError);
  c = {};
  c.reflection = -1.0;
  EXPECT_THROW(minimize(f, x0, c), ArgumentError);
  EXPECT_THROW(minimize(f, std::vector<double>{}), ArgumentError);
}

// Random positive-definite quadratic (x - c)^T A (x - c) + offset.
struct Quadratic {
  std::vector<double> a;  // dim x dim, row-major
  std::vector<double> center;
  double offset;

  double operator()(std::span<const double> x) const {
    const std::size_t n = center.size();
    double f = offset;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) f += (x[i] - center[i]) * a[i * n + j] * (x[j] - center[j]);
    return f;
  }
};

Quadratic random_quadratic(std::mt19937_64& rng, std::size_t n) {
  // A = B^T B + I keeps the eigenvalues >= 1.
  const auto b = testing::random_values(rng, n * n, 0.7);
  Quadratic q{std::vector<double>(n * n, 0.0), testing::random_values(rng, n, 1.5),
              testing::random_values(rng, 1)[0]};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b[k * n + i] * b[k * n + j];
      q.a[i * n + j] = s;
    }
  }
  return q;
}

TEST(NelderMeadProperty, ConvexQuadraticConvergesToMinimiser) {
  std::mt19937_64 rng(21);
  const SimplexConfig config;
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = testing::random_size(rng, 1, 4);
    const Quadratic q = random_quadratic(rng, n);
    const std::vector<double> x0(n, 1.0);
    const auto r = minimize(q, x0, config);
    ASSERT_TRUE(r.converged) << "trial " << trial;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(r.x_star[i], q.center[i], 10 * config.x_tolerance) << "trial " << trial;
    }
  }
}

TEST(NelderMeadProperty, DescentFromStartAndDeterminism) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = testing::random_size(rng, 1, 5);
    const Quadratic q = random_quadratic(rng, n);
    // Add a ripple so the landscape is not convex.
    auto f = [&](std::span<const double> x) {
      double s = q(x);
      for (double xi : x) s += 0.3 * std::sin(5 * xi);
      return s;
    };
    const auto x0 = testing::random_values(rng, n);
    const auto a = minimize(f, x0);
    const auto b = minimize(f, x0);
    EXPECT_LE(a.f_star, f(x0) + 1e-12);
    EXPECT_EQ(a.x_star, b.x_star);
    EXPECT_EQ(std::memcmp(&a.f_star, &b.f_star, sizeof(double)), 0);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

TEST(NelderMeadProperty, BestVertexIsMonotone) {
  // Truncating a deterministic run after k iterations exposes the best vertex
  // at iteration k.
  const std::vector<double> x0{-1.2, 1.0};
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 150; ++k) {
    SimplexConfig c;
    c.max_iterations = k;
    const auto r = minimize(rosenbrock, x0, c);
    EXPECT_LE(r.f_star, previous) << "iteration " << k;
    previous = r.f_star;
  }
}

}  // namespace
}  // namespace fedagg
