#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gpra/error.hpp"
#include "gpra/material.hpp"
#include "gpra/section.hpp"

namespace gpra {
namespace {

constexpr double kD = 0.508, kT = 0.00714;

double annulus_area(double D, double t) {
  const double ro = D / 2, ri = ro - t;
  return std::numbers::pi * (ro * ro - ri * ri);
}

double annulus_inertia(double D, double t) {
  const double ro = D / 2, ri = ro - t;
  return std::numbers::pi / 4 * (std::pow(ro, 4) - std::pow(ri, 4));
}

TEST(Section, AreaAndInertiaMatchTheAnnulus) {
  const auto g = FiberGrid::build(kD, kT, 4, 24);
  EXPECT_EQ(g.patches().size(), 96u);
  EXPECT_NEAR(g.area() / annulus_area(kD, kT), 1.0, 1e-12);
  EXPECT_NEAR(g.second_moment() / annulus_inertia(kD, kT), 1.0, 5e-3);
  EXPECT_NEAR(g.first_moment(), 0.0, 1e-15);
}

TEST(Section, LevelsMergeMirrorSectors) {
  const auto g = FiberGrid::build(kD, kT, 4, 24);
  double a = 0.0, i2 = 0.0;
  for (const auto& f : g.levels()) {
    a += f.area;
    i2 += f.z * f.z * f.area;
  }
  EXPECT_LT(g.levels().size(), g.patches().size());
  EXPECT_NEAR(a, g.area(), 1e-15);
  EXPECT_NEAR(i2, g.second_moment(), 1e-15);
  EXPECT_LE(g.z_max(), kD / 2);
  EXPECT_GT(g.z_max(), kD / 2 - kT);
}

TEST(Section, RejectsBadGeometry) {
  EXPECT_THROW(FiberGrid::build(0.1, 0.06, 4, 24), Error);
  EXPECT_THROW(FiberGrid::build(0.5, 0.01, 0, 24), Error);
  EXPECT_THROW(FiberGrid::build(0.5, 0.01, 4, 2), Error);
}

TEST(Section, ElasticForcesMatchEAandEI) {
  const SteelMaterial m;
  const SteelLaw law(m, make_biaxial_state(m, 0.0));
  const auto g = FiberGrid::build(kD, kT, 4, 24);
  const double e = 2e-4, k = 1e-4;  // both well inside the elastic range
  const auto f = section_forces(e, 0.0, 0.0, g, law, 0.0);
  EXPECT_NEAR(f.N / (m.E * g.area() * e), 1.0, 0.01);
  const auto b = section_forces(0.0, 0.0, k, g, law, 0.0);
  EXPECT_NEAR(b.M / (m.E * g.second_moment() * k), 1.0, 0.01);
  EXPECT_NEAR(b.N / (m.E * g.area() * 1e-4), 0.0, 0.01);
}

TEST(Section, TangentMatchesFiniteDifferences) {
  const SteelMaterial m;
  const SteelLaw law(m, make_biaxial_state(m, 354.73e6));
  const auto g = FiberGrid::build(kD, kT, 4, 24);
  for (auto [e, k] : {std::pair{1e-3, 2e-3}, std::pair{-5e-4, 1e-2}, std::pair{3e-3, -4e-3}}) {
    const auto t = section_tangent(e, k, g, law);
    const double he = 1e-8, hk = 1e-8;
    const auto pe = section_tangent(e + he, k, g, law), me = section_tangent(e - he, k, g, law);
    const auto pk = section_tangent(e, k + hk, g, law), mk = section_tangent(e, k - hk, g, law);
    EXPECT_NEAR(t.dN_de, (pe.N - me.N) / (2 * he), 1e-5 * std::abs(t.dN_de));
    EXPECT_NEAR(t.dM_de, (pe.M - me.M) / (2 * he), 1e-5 * std::abs(t.dN_de) * g.z_max());
    EXPECT_NEAR(t.dN_dk, (pk.N - mk.N) / (2 * hk), 1e-5 * std::abs(t.dN_de) * g.z_max());
    EXPECT_NEAR(t.dM_dk, (pk.M - mk.M) / (2 * hk), 1e-5 * std::abs(t.dM_dk));
    const auto f = section_forces(e, 0.0, k, g, law, 0.0);
    EXPECT_NEAR(t.N, f.N, 1e-9 * std::abs(f.N) + 1e-6);
    EXPECT_NEAR(t.M, f.M, 1e-9 * std::abs(f.M) + 1e-6);
  }
}

TEST(Section, PureBendingIsAntisymmetric) {
  const SteelMaterial m;
  const SteelLaw law(m, make_biaxial_state(m, 0.0));
  const auto g = FiberGrid::build(kD, kT, 4, 24);
  const auto a = section_forces(0.0, 0.0, 0.01, g, law, 0.0);
  const auto b = section_forces(0.0, 0.0, -0.01, g, law, 0.0);
  EXPECT_NEAR(a.M, -b.M, 1e-9 * std::abs(a.M));
  EXPECT_NEAR(a.N, b.N, 1e-9 * std::abs(a.M));
}

}  // namespace
}  // namespace gpra
