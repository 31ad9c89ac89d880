#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "gpra/error.hpp"
#include "gpra/oracle.hpp"

namespace gpra {
namespace {

// Infinite beam on a Winkler foundation, ground moved by s on [a, b].
double winkler_block(double x, double a, double b, double s, double beta) {
  auto D = [&](double d) { return std::exp(-beta * d) * std::cos(beta * d); };
  if (x >= a && x <= b) return 0.5 * s * (2.0 - D(x - a) - D(b - x));
  const double near = x < a ? a - x : x - b;
  const double far = x < a ? b - x : x - a;
  return 0.5 * s * (D(near) - D(far));
}

double elastic_EI(const PipeProblem& p) { return p.spec().material.E * p.grid().second_moment(); }

TEST(Winkler, ZeroLoadGivesZero) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  const auto f = solve_linear_winkler(p, 1e6, std::vector<double>(901, 0.0));
  for (double w : f.w) EXPECT_EQ(w, 0.0);
}

TEST(Winkler, UniformLoadFarFromEnds) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  const auto f = solve_linear_winkler(p, 1e6, std::vector<double>(901, 0.3));
  EXPECT_NEAR(f.w[450], 0.3, 1e-4);
  EXPECT_EQ(f.w.front(), 0.0);
  EXPECT_EQ(f.w.back(), 0.0);
}

TEST(Winkler, BlockMatchesAnalyticSuperposition) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  const double k = 1e6, s = 0.2, a = 40.0, b = 50.0;
  std::vector<double> wg(901);
  for (int i = 0; i <= 900; ++i) {
    const double x = 0.1 * i;
    // half weight on the edge nodes so the discrete load has the exact resultant
    wg[i] = (x > a + 1e-9 && x < b - 1e-9) ? s : (std::abs(x - a) < 1e-9 || std::abs(x - b) < 1e-9) ? s / 2 : 0.0;
  }
  const auto f = solve_linear_winkler(p, k, wg);
  const double beta = std::pow(k / (4.0 * elastic_EI(p)), 0.25);
  double peak = 0.0;
  for (int i = 0; i <= 900; ++i) peak = std::max(peak, std::abs(winkler_block(f.x[i], a, b, s, beta)));
  for (int i = 100; i <= 800; ++i) {
    const double x = f.x[i];
    if (std::abs(x - a) < 1.0 || std::abs(x - b) < 1.0) continue;
    EXPECT_NEAR(f.w[i], winkler_block(x, a, b, s, beta), 0.01 * peak) << "x = " << x;
  }
}

TEST(Winkler, RejectsBadInput) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  EXPECT_THROW(solve_linear_winkler(p, 0.0, std::vector<double>(901, 0.0)), Error);
  EXPECT_THROW(solve_linear_winkler(p, 1e6, std::vector<double>(10, 0.0)), Error);
}

TEST(Fdm, TrivialSolution) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  ScenarioSample s;
  s.delta = 0.0;
  const auto f = solve_fdm(s, p);
  EXPECT_TRUE(f.converged);
  for (std::size_t i = 0; i < f.w.size(); ++i) {
    EXPECT_EQ(f.u[i], 0.0);
    EXPECT_EQ(f.w[i], 0.0);
  }
}

TEST(Fdm, SmallDeltaLinearSpringsMatchWinkler) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  ScenarioSample s;
  s.delta = 1e-3;
  FdmOptions o;
  o.linear_springs = true;
  o.load_steps = 1;
  const auto f = solve_fdm(s, p, o);
  ASSERT_TRUE(f.converged);

  const auto sp = make_spring_law(s.soil, p.spec().D, p.spec().soil);
  const double k = sp.Pu * sp.k_smooth / sp.delta_p;
  const double beta = std::pow(k / (4.0 * elastic_EI(p)), 0.25);
  double peak_fdm = 0.0, peak_exact = 0.0;
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    peak_fdm = std::max(peak_fdm, std::abs(f.w[i]));
    peak_exact = std::max(peak_exact, std::abs(winkler_block(f.x[i], 40.0, 50.0, s.delta, beta)));
  }
  EXPECT_NEAR(peak_fdm, peak_exact, 0.01 * peak_exact);
}

TEST(Fdm, BoundaryConditionsAndResidual) {
  const PipeProblem p(PipeSpec::biaxial_case());
  ScenarioSample s;
  s.delta = 0.8;
  FdmOptions o;
  const auto f = solve_fdm(s, p, o);
  ASSERT_TRUE(f.converged);
  EXPECT_EQ(f.u.front(), 0.0);
  EXPECT_EQ(f.w.back(), 0.0);
  EXPECT_EQ(f.w_x.front(), 0.0);
  EXPECT_LT(f.residual_norm, o.tolerance);
  EXPECT_EQ(f.residual_history.size(), static_cast<std::size_t>(o.load_steps));
}

TEST(Fdm, SymmetricAboutTheCentre) {
  const PipeProblem p(PipeSpec::biaxial_case());
  ScenarioSample s;
  s.delta = 1.0;
  const auto f = solve_fdm(s, p);
  ASSERT_TRUE(f.converged);
  const std::size_t n = f.x.size() - 1;
  const double wmax = *std::max_element(f.w.begin(), f.w.end());
  double umax = 0.0;
  for (double u : f.u) umax = std::max(umax, std::abs(u));
  for (std::size_t i = 0; i <= n; ++i) {
    EXPECT_NEAR(f.w[i], f.w[n - i], 1e-8 * wmax);
    EXPECT_NEAR(f.u[i], -f.u[n - i], 1e-8 * std::max(umax, 1e-30));
  }
}

TEST(Fdm, JacobianMatchesFiniteDifferences) {
  auto spec = PipeSpec::biaxial_case();
  spec.L = 6.0;
  spec.block_start = 2.0;
  spec.block_len = 2.0;
  const PipeProblem p(spec);
  ScenarioSample s;
  s.delta = 0.3;
  FdmOptions o;
  o.spacing = 0.25;
  const FdmSystem sys(p, s, o);
  const int m = sys.unknowns();
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double x = (i / 2 + 1) * o.spacing;
    v[i] = i % 2 == 0 ? 2e-4 * U(g) : 0.05 * std::sin(M_PI * x / spec.L) + 1e-4 * U(g);
  }

  std::vector<double> band;
  const auto r0 = sys.residual_and_band(v, 0.7, band);
  const int kl = FdmSystem::bandwidth();
  const int ldab = 3 * kl + 1;
  for (int j = 0; j < m; ++j) {
    const double hstep = 1e-7;
    auto shifted = [&](double k) {
      auto vs = v;
      vs[j] += k * hstep;
      return sys.residual(vs, 0.7);
    };
    const auto r2p = shifted(2), r1p = shifted(1), r1m = shifted(-1), r2m = shifted(-2);
    for (int i = 0; i < m; ++i) {
      const double fd = (8 * (r1p[i] - r1m[i]) - (r2p[i] - r2m[i])) / (12 * hstep);
      const double an = std::abs(i - j) <= kl ? band[2 * kl + i - j + j * ldab] : 0.0;
      EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd))) << i << "," << j;
    }
  }
  EXPECT_EQ(r0, sys.residual(v, 0.7));
}

TEST(Fdm, GridConvergenceOfPeakStrain) {
  const PipeProblem p(PipeSpec::biaxial_case());
  ScenarioSample s;
  s.delta = 1.0;
  FdmOptions coarse, fine;
  fine.spacing = 0.05;
  const auto a = solve_fdm(s, p, coarse);
  const auto b = solve_fdm(s, p, fine);
  EXPECT_NEAR(a.eps_max_tensile, b.eps_max_tensile, 0.01 * std::abs(b.eps_max_tensile));
}

TEST(Fdm, PeakStrainGrowsWithDelta) {
  const PipeProblem p(PipeSpec::biaxial_case());
  ScenarioSample s;
  double last = -1.0;
  for (double d : {0.2, 0.6, 1.0, 1.4, 1.8}) {
    s.delta = d;
    const auto f = solve_fdm(s, p);
    EXPECT_GE(f.eps_max_tensile, last) << d;
    last = f.eps_max_tensile;
  }
}

// Local degree-6 interpolants of converged fields fed to the continuous
// residual.  The two operators differ by the O(h^2) truncation error, so the
// residual is checked for second-order decay and for the solver tolerance away
// from the loaded zone.
double continuous_residual(const PipeProblem& p, const ScenarioSample& s, const FdmOptions& o, double x_lo,
                           double x_hi) {
  const auto f = solve_fdm(s, p, o);
  EXPECT_TRUE(f.converged);
  const auto sp = make_spring_law(s.soil, p.spec().D, p.spec().soil);
  const double h = f.x[1] - f.x[0];
  auto taylor = [&](const std::vector<double>& y, std::size_t c) {
    Eigen::Matrix<double, 7, 7> A;
    Eigen::Matrix<double, 7, 1> rhs;
    for (int r = 0; r < 7; ++r) {
      for (int q = 0; q < 7; ++q) A(r, q) = std::pow((r - 3) * h, q);
      rhs(r) = y[c + r - 3];
    }
    const Eigen::Matrix<double, 7, 1> a = A.fullPivLu().solve(rhs);
    ad::Jet<double, 4> j;
    for (int q = 0; q <= 4; ++q) j[q] = a(q);
    return j;
  };
  double worst = 0.0;
  for (std::size_t c = 3; c + 3 < f.x.size(); ++c) {
    if (f.x[c] < x_lo || f.x[c] > x_hi) continue;
    const auto r = residuals(f.x[c], s, taylor(f.u, c), taylor(f.w, c), p, o.ramp_width);
    worst = std::max({worst, std::abs(r.R1) / sp.Tu, std::abs(r.R2) / sp.Pu});
  }
  return worst;
}

TEST(Fdm, FieldsSatisfyTheContinuousResidual) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  ScenarioSample s;
  s.delta = 0.1;
  FdmOptions o;
  o.ramp_width = 2.0;
  const double coarse = continuous_residual(p, s, o, 0.0, 90.0);
  o.spacing = 0.05;
  const double fine = continuous_residual(p, s, o, 0.0, 90.0);
  EXPECT_GT(coarse / fine, 3.0);
  EXPECT_LT(coarse / fine, 5.0);
  EXPECT_LT(continuous_residual(p, s, o, 0.0, 25.0), 10 * o.tolerance);
}

TEST(Fdm, FieldCsvHasHeaderAndOneRowPerNode) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  const auto f = solve_linear_winkler(p, 1e6, std::vector<double>(901, 0.0));
  std::ostringstream os;
  write_field_csv(os, f);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("x,u,w,w_x,w_xx,N,M,eps_top,eps_bottom\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 902);
}

}  // namespace
}  // namespace gpra
