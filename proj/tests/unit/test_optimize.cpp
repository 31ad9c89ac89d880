#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gpra/error.hpp"
#include "gpra/optimize.hpp"

namespace gpra {
namespace {

TEST(Minimize, QuadraticBowl) {
  const std::vector<double> target{1.0, -2.0, 0.5, 3.0};
  Objective f = [&](std::span<const double> x, std::span<double> g) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += (x[i] - target[i]) * (x[i] - target[i]);
      g[i] = 2.0 * (x[i] - target[i]);
    }
    return s;
  };
  OptimizerConfig cfg;
  cfg.adam_steps = 0;
  cfg.max_iterations = 50;
  cfg.rel_tol = 0.0;
  const auto r = minimize(f, std::vector<double>(4, 0.0), cfg);
  EXPECT_LE(r.iterations, 50);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.x[i], target[i], 1e-8);
}

TEST(Minimize, Rosenbrock) {
  Objective f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  OptimizerConfig cfg;
  cfg.adam_steps = 0;
  cfg.max_iterations = 500;
  cfg.rel_tol = 0.0;
  const auto r = minimize(f, {-1.2, 1.0}, cfg);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(Minimize, AdamWarmupThenLbfgs) {
  Objective f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  OptimizerConfig cfg;
  cfg.adam_steps = 100;
  cfg.adam_lr = 1e-2;
  const auto r = minimize(f, {0.0}, cfg);
  EXPECT_NEAR(r.x[0], 3.0, 1e-6);
  EXPECT_GE(r.iterations, 100);
}

TEST(Minimize, BestSoFarNeverWorseThanStart) {
  int calls = 0;
  Objective f = [&](std::span<const double> x, std::span<double> g) {
    ++calls;
    g[0] = std::cos(x[0]) + 0.2 * x[0];
    return std::sin(x[0]) + 0.1 * x[0] * x[0];
  };
  OptimizerConfig cfg;
  cfg.adam_steps = 20;
  cfg.adam_lr = 0.5;
  cfg.max_iterations = 20;
  const auto r = minimize(f, {2.0}, cfg);
  EXPECT_LE(r.f, std::sin(2.0) + 0.4);
  EXPECT_EQ(r.evaluations, calls);
}

TEST(Minimize, NonFiniteStartThrows) {
  Objective f = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::numeric_limits<double>::quiet_NaN();
  };
  EXPECT_THROW(minimize(f, {0.0}, {}), Error);
}

TEST(Minimize, NonFiniteMidwayReturnsBest) {
  Objective f = [](std::span<const double> x, std::span<double> g) {
    if (x[0] > 1.5) {
      g[0] = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    g[0] = -1.0;
    return -x[0];
  };
  OptimizerConfig cfg;
  cfg.adam_steps = 0;
  cfg.max_iterations = 100;
  const auto r = minimize(f, {0.0}, cfg);
  EXPECT_TRUE(std::isfinite(r.f));
  EXPECT_LE(r.x[0], 1.5);
  EXPECT_LE(r.f, 0.0);
}

}  // namespace
}  // namespace gpra
