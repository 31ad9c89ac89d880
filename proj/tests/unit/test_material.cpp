#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gpra/error.hpp"
#include "gpra/material.hpp"

namespace gpra {
namespace {

double von_mises(double s_l, double s_h) { return std::sqrt(s_l * s_l - s_l * s_h + s_h * s_h); }

TEST(Material, HoopStressThinWall) {
  // P (D - 2t) / (2t) for the case-study pipe.
  EXPECT_NEAR(hoop_stress(10.26e6, 0.508, 0.00714), 10.26e6 * (0.508 - 0.01428) / 0.01428, 1e-3);
  EXPECT_THROW(hoop_stress(1e6, 0.01, 0.005), Error);
}

TEST(Material, BiaxialYieldRootsLieOnTheVonMisesEllipse) {
  std::mt19937_64 g(11);
  const double sy = 448e6;
  std::uniform_real_distribution<double> U(-0.99 * 2.0 * sy / std::sqrt(3.0), 0.99 * 2.0 * sy / std::sqrt(3.0));
  for (int i = 0; i < 1000; ++i) {
    const double sh = U(g);
    const auto y = biaxial_yield(sy, sh);
    EXPECT_NEAR(von_mises(y.tensile, sh) / sy, 1.0, 1e-9);
    EXPECT_NEAR(von_mises(y.compressive, sh) / sy, 1.0, 1e-9);
    EXPECT_GT(y.tensile, y.compressive);
  }
}

TEST(Material, BiaxialYieldCaseStudyValues) {
  const double sh = hoop_stress(10.26e6, 0.508, 0.00714);
  const auto y = biaxial_yield(448e6, sh);
  // Roots of s^2 - s sh + sh^2 - sy^2 = 0.
  const double disc = std::sqrt(sh * sh - 4.0 * (sh * sh - 448e6 * 448e6));
  EXPECT_NEAR(y.tensile, 0.5 * (sh + disc), 1.0);
  EXPECT_NEAR(y.compressive, 0.5 * (sh - disc), 1.0);
  EXPECT_NEAR(y.tensile / 1e6, 503.4, 0.1);
  EXPECT_NEAR(y.compressive / 1e6, -148.7, 0.1);
}

TEST(Material, BiaxialYieldRejectsExcessiveHoopStress) {
  EXPECT_THROW(biaxial_yield(448e6, 2.0 * 448e6 / std::sqrt(3.0) * 1.001), Error);
}

TEST(Material, HardeningParameter) {
  const SteelMaterial m;
  const double ep = m.uniaxial_plastic_modulus();
  EXPECT_NEAR(ep, (663e6 - 448e6) / (0.3 - 448e6 / 199e9), 1e-3);
  EXPECT_NEAR(hardening_parameter(m.E, ep), m.E * ep / (m.E - ep), 1e-3);
}

TEST(Material, InitialStrainCaseStudy) {
  const double sh = hoop_stress(10.26e6, 0.508, 0.00714);
  const double expect = 0.3 * sh / 199e9 - 12e-6 * 60.0;
  EXPECT_NEAR(initial_strain(10.26e6, 0.508, 0.00714, 0.3, 12e-6, 60.0, 199e9), expect, 1e-15);
  EXPECT_NEAR(expect, -1.852e-4, 1e-7);
}

TEST(Material, StressLawElasticNearZeroAndMonotone) {
  const SteelMaterial m;
  for (double sh : {0.0, hoop_stress(10.26e6, 0.508, 0.00714)}) {
    const SteelLaw law(m, make_biaxial_state(m, sh));
    EXPECT_NEAR(law.stress(1e-5), m.E * 1e-5, 1e-3 * m.E * 1e-5);
    double prev = law.stress(-0.1);
    for (int i = 1; i <= 20000; ++i) {
      const double e = -0.1 + 0.2 * i / 20000.0;
      const auto [s, tan] = law.stress_tangent(e);
      ASSERT_GT(tan, 0.0) << "eps = " << e << ", sigma_h = " << sh;
      ASSERT_GT(s, prev);
      prev = s;
    }
  }
}

TEST(Material, StressLawApproachesBilinearFarFromYield) {
  const SteelMaterial m;
  const auto st = make_biaxial_state(m, 0.0);
  const SteelLaw law(m, st);
  for (double e : {0.02, 0.05, -0.03}) {
    const double ref = bilinear_reference(e, m, st);
    EXPECT_NEAR(law.stress(e) / ref, 1.0, 0.01) << e;
  }
}

TEST(Material, DerivativesMatchFiniteDifferences) {
  const SteelMaterial m;
  const SteelLaw law(m, make_biaxial_state(m, hoop_stress(10.26e6, 0.508, 0.00714)));
  for (double e : {-0.004, -0.0007, 0.0002, 0.0025, 0.01}) {
    const auto d = law.derivatives(e);
    const double h = 1e-7;
    const double fd1 = (law.stress(e + h) - law.stress(e - h)) / (2 * h);
    const double fd2 = (law.derivatives(e + h).s1 - law.derivatives(e - h).s1) / (2 * h);
    const double fd3 = (law.derivatives(e + h).s2 - law.derivatives(e - h).s2) / (2 * h);
    EXPECT_NEAR(d.s1, fd1, 1e-5 * std::abs(fd1) + 1e3);
    EXPECT_NEAR(d.s2, fd2, 1e-4 * std::abs(fd2) + 1e7);
    EXPECT_NEAR(d.s3, fd3, 1e-3 * std::abs(fd3) + 1e11);
  }
}

TEST(Material, PlasticModuliAreBelowElastic) {
  const SteelMaterial m;
  const auto st = make_biaxial_state(m, hoop_stress(10.26e6, 0.508, 0.00714));
  EXPECT_GT(st.bT, 0.0);
  EXPECT_LT(st.bT, 0.05);
  EXPECT_GT(st.bC, 0.0);
  EXPECT_LT(st.bC, 0.05);
}

TEST(Material, ValidateRejectsBadConstants) {
  SteelMaterial m;
  m.E = -1.0;
  EXPECT_THROW(m.validate(), Error);
  m = SteelMaterial{};
  m.sigma_u = 100e6;
  EXPECT_THROW(m.validate(), Error);
}

}  // namespace
}  // namespace gpra
