#include "gpra/section.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gpra/error.hpp"

namespace gpra {

namespace {

// cos(2 pi j / n) with exact mirror and half-turn symmetry.
double sector_cos(int j, int n) {
  j %= n;
  if (2 * j > n) j = n - j;  // cos(-a) = cos(a)
  if (n % 2 == 0 && 4 * j > n) {
    return -std::cos(2.0 * std::numbers::pi * double(n / 2 - j) / double(n));
  }
  return std::cos(2.0 * std::numbers::pi * double(j) / double(n));
}

}  // namespace

FiberGrid FiberGrid::build(double D, double t, int n_r, int n_theta) {
  if (!(t > 0.0) || !(D > 2.0 * t)) {
    throw Error(ErrorKind::invalid_geometry, "need D > 2t > 0 (D=" + std::to_string(D) +
                                                 ", t=" + std::to_string(t) + ")");
  }
  if (n_r < 1 || n_theta < 4) {
    throw Error(ErrorKind::invalid_geometry, "need n_r >= 1 and n_theta >= 4");
  }
  FiberGrid g;
  g.n_r_ = n_r;
  g.n_theta_ = n_theta;
  g.D_ = D;
  g.t_ = t;
  const double r_in = 0.5 * D - t;
  const double dr = t / n_r;
  const double dtheta = 2.0 * std::numbers::pi / n_theta;
  g.patches_.reserve(static_cast<std::size_t>(n_r * n_theta));
  for (int i = 0; i < n_r; ++i) {
    const double r1 = r_in + dr * i;
    const double r2 = (i + 1 == n_r) ? 0.5 * D : r1 + dr;
    const double area = 0.5 * dtheta * (r2 * r2 - r1 * r1);
    const double rg = std::sqrt(0.5 * (r1 * r1 + r2 * r2));
    for (int j = 0; j < n_theta; ++j) g.patches_.push_back({area, rg * sector_cos(j, n_theta)});
    // Sectors j and n - j share z.
    for (int j = 0; 2 * j <= n_theta; ++j) {
      const int mult = (j == 0 || 2 * j == n_theta) ? 1 : 2;
      g.levels_.push_back({mult * area, rg * sector_cos(j, n_theta)});
    }
  }
  for (const Fiber& f : g.patches_) g.z_max_ = std::max(g.z_max_, std::abs(f.z));
  return g;
}

double FiberGrid::area() const {
  double a = 0.0;
  for (const Fiber& f : patches_) a += f.area;
  return a;
}

double FiberGrid::first_moment() const {
  double s = 0.0;
  for (const Fiber& f : patches_) s += f.z * f.area;
  return s;
}

double FiberGrid::second_moment() const {
  double s = 0.0;
  for (const Fiber& f : patches_) s += f.z * f.z * f.area;
  return s;
}

SectionTangent section_tangent(double e, double kappa, const FiberGrid& grid, const SteelLaw& law) {
  SectionTangent st{};
  for (const Fiber& lv : grid.levels()) {
    const auto [s, ds] = law.stress_tangent(e - kappa * lv.z);
    const double za = lv.z * lv.area;
    st.N += s * lv.area;
    st.M -= s * za;
    st.dN_de += ds * lv.area;
    st.dN_dk -= ds * za;
    st.dM_de -= ds * za;
    st.dM_dk += ds * lv.z * za;
  }
  return st;
}

}  // namespace gpra
