#pragma once

// Fiber discretisation of the annular pipe cross-section.

#include <vector>

#include "gpra/material.hpp"

namespace gpra {

struct Fiber {
  double area;  // m^2
  double z;     // signed offset from the centroid along the bending axis, m
};

class FiberGrid {
 public:
  FiberGrid() = default;

  // n_r rings of equal thickness times n_theta equal sectors.  Each patch has
  // its exact annular-sector area; its fiber sits at mid-angle on the ring's
  // radius of gyration, sqrt((r_in^2 + r_out^2) / 2), so that sum(z^2 A)
  // reproduces the annulus second moment exactly for n_theta >= 3.
  static FiberGrid build(double D, double t, int n_r, int n_theta);

  int n_r() const { return n_r_; }
  int n_theta() const { return n_theta_; }
  double diameter() const { return D_; }
  double thickness() const { return t_; }

  // One entry per patch, ring-major.
  const std::vector<Fiber>& patches() const { return patches_; }
  // Patches sharing the same z merged (mirror sectors); used for evaluation.
  const std::vector<Fiber>& levels() const { return levels_; }

  double area() const;
  double first_moment() const;
  double second_moment() const;
  // Largest |z| over all fibers.
  double z_max() const { return z_max_; }

 private:
  int n_r_ = 0;
  int n_theta_ = 0;
  double D_ = 0.0;
  double t_ = 0.0;
  double z_max_ = 0.0;
  std::vector<Fiber> patches_;
  std::vector<Fiber> levels_;
};

inline FiberGrid build_fiber_grid(double D, double t, int n_r, int n_theta) {
  return FiberGrid::build(D, t, n_r, n_theta);
}

// eps_initial + u_x + w_x^2 / 2 - z w_xx.
template <class T>
T longitudinal_strain(const T& u_x, const T& w_x, const T& w_xx, double z, double eps_initial) {
  return u_x + w_x * w_x * 0.5 - w_xx * z + eps_initial;
}

template <class T>
struct SectionForces {
  T N;  // axial force, N
  T M;  // bending moment, N m
};

// N = sum(sigma A), M = -sum(z sigma A) with sigma from the steel law at each
// fiber strain.  Generic over double, jets and reverse-mode scalars.
template <class T>
SectionForces<T> section_forces(const T& u_x, const T& w_x, const T& w_xx, const FiberGrid& grid,
                                const SteelLaw& law, double eps_initial) {
  const T e = u_x + w_x * w_x * 0.5 + eps_initial;
  SectionForces<T> f{T(0.0), T(0.0)};
  for (const Fiber& lv : grid.levels()) {
    const T s = law.stress(e - w_xx * lv.z);
    f.N += s * lv.area;
    f.M -= s * (lv.z * lv.area);
  }
  return f;
}

// Section response in terms of centroid strain e and curvature kappa, with the
// tangent partials needed by Newton solvers.
struct SectionTangent {
  double N, M;
  double dN_de, dN_dk;
  double dM_de, dM_dk;
};

SectionTangent section_tangent(double e, double kappa, const FiberGrid& grid, const SteelLaw& law);

}  // namespace gpra
