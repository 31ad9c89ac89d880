#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gpra/autodiff/jet.hpp"
#include "gpra/autodiff/reverse.hpp"
#include "gpra/error.hpp"

namespace gpra::ad {
namespace {

// Taylor coefficients by repeated central differences of a scalar function.
template <class F>
double fd_derivative(F f, double x, int order, double h) {
  if (order == 0) return f(x);
  return (fd_derivative(f, x + h, order - 1, h) - fd_derivative(f, x - h, order - 1, h)) / (2 * h);
}

TEST(Jet, KnownSeries) {
  const auto e = jet_eval<4>([](auto x) { return exp(x); }, 0.0);
  const double fact[] = {1, 1, 2, 6, 24};
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(e[k], 1.0 / fact[k], 1e-15);
  const auto t = jet_eval<5>([](auto x) { return tanh(x); }, 0.0);
  EXPECT_NEAR(t[1], 1.0, 1e-15);
  EXPECT_NEAR(t[3], -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t[5], 2.0 / 15.0, 1e-15);
  EXPECT_NEAR(t[2], 0.0, 1e-15);
  const auto l = jet_eval<3>([](auto x) { return log(x); }, 1.0);
  EXPECT_NEAR(l[1], 1.0, 1e-15);
  EXPECT_NEAR(l[2], -0.5, 1e-15);
  EXPECT_NEAR(l[3], 1.0 / 3.0, 1e-15);
}

TEST(Jet, CompositeMatchesFiniteDifferences) {
  auto f = [](auto x) {
    using std::sqrt;
    using std::tanh;
    return tanh(x * 0.7 + 0.2) * sqrt(x * x + 1.0) / (x + 3.0);
  };
  for (double x0 : {-0.8, 0.1, 1.3}) {
    const auto j = jet_eval<4>(f, x0);
    double fact = 1;
    for (int k = 1; k <= 3; ++k) {
      fact *= k;
      const double fd = fd_derivative([&](double x) { return f(x); }, x0, k, 1e-3);
      EXPECT_NEAR(j[k] * fact, fd, 1e-4 * std::max(1.0, std::abs(fd))) << "order " << k;
    }
  }
}

TEST(Jet, DifferentiateAndTruncate) {
  const auto j = jet_eval<4>([](auto x) { return x * x * x; }, 2.0);
  const auto d = differentiate(j);
  EXPECT_NEAR(d[0], 12.0, 1e-12);
  EXPECT_NEAR(d[1], 6.0 * 2.0, 1e-12);
  const auto t = truncate<1>(j);
  EXPECT_NEAR(t[1], 12.0, 1e-12);
}

TEST(Jet, SlopeScalesDerivatives) {
  const auto j = exp(Jet<double, 2>::variable(0.0, 3.0));
  EXPECT_NEAR(j[1], 3.0, 1e-15);
  EXPECT_NEAR(j[2], 4.5, 1e-15);
}

TEST(Reverse, GradientMatchesFiniteDifferences) {
  auto loss = [](std::span<const Var> t) {
    return tanh(t[0] * t[1]) + exp(t[2] * 0.3) * t[0] - log(t[1] * t[1] + 1.0) / (t[2] + 4.0);
  };
  const std::vector<double> th{0.3, -1.2, 0.8};
  const auto g = grad(loss, th);
  for (std::size_t i = 0; i < th.size(); ++i) {
    auto p = th, m = th;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    const double fd = (grad(loss, p).value - grad(loss, m).value) / 2e-6;
    EXPECT_NEAR(g.gradient[i], fd, 1e-7);
  }
}

TEST(Reverse, OverJets) {
  // d/dtheta of the second Taylor coefficient of sin-free expression exp(theta x) at x = 0: theta^2 / 2.
  auto loss = [](std::span<const Var> t) {
    const auto j = exp(Jet<Var, 2>::variable(Var(0.0)) * t[0]);
    return j[2];
  };
  const std::vector<double> th{1.7};
  const auto g = grad(loss, th);
  EXPECT_NEAR(g.value, 1.7 * 1.7 / 2, 1e-14);
  EXPECT_NEAR(g.gradient[0], 1.7, 1e-14);
}

TEST(Reverse, NonFiniteLossThrows) {
  auto loss = [](std::span<const Var> t) { return log(t[0]); };
  const std::vector<double> th{-1.0};
  EXPECT_THROW(grad(loss, th), Error);
}

}  // namespace
}  // namespace gpra::ad
