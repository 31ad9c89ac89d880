#pragma once

// Problem definition shared by every solver: pipe geometry and operating
// loads, the ground-displacement block, the uncertain-parameter box, input
// normalisation and the residuals of the governing equations
//
//   R1 = N_x + h(Ug - u)
//   R2 = M_xx - (N w_x)_x - q(Wg - w)

#include <array>
#include <cstdint>
#include <string_view>

#include "gpra/autodiff/jet.hpp"
#include "gpra/error.hpp"
#include "gpra/material.hpp"
#include "gpra/section.hpp"
#include "gpra/soil.hpp"

namespace gpra {

struct PipeSpec {
  double D = 0.508;           // outer diameter, m
  double t = 0.00714;         // wall thickness, m
  double L = 90.0;            // modelled length, m
  double block_start = 40.0;  // m
  double block_len = 10.0;    // m
  double beta_deg = 90.0;     // crossing angle
  double P = 10.26e6;         // internal pressure, Pa
  double dT = 60.0;           // temperature change, degC
  SteelMaterial material{};
  int n_r = 4;
  int n_theta = 24;
  SoilOptions soil{};
  double fit_strain_max = 0.05;

  // The case-study pipe with internal pressure and heating.
  static PipeSpec biaxial_case() { return {}; }
  // Same pipe without operating loads.
  static PipeSpec uniaxial_case() {
    PipeSpec s;
    s.P = 0.0;
    s.dT = 0.0;
    return s;
  }
};

struct GroundDisplacement {
  double Ug;
  double Wg;
};

class PipeProblem {
 public:
  explicit PipeProblem(const PipeSpec& spec);

  const PipeSpec& spec() const { return spec_; }
  const FiberGrid& grid() const { return grid_; }
  const SteelLaw& law() const { return law_; }
  double eps_initial() const { return eps_initial_; }
  double length() const { return spec_.L; }

  // Stable digest of every field that changes the governing equations.
  std::uint64_t digest() const;

 private:
  PipeSpec spec_;
  FiberGrid grid_;
  SteelLaw law_;
  double eps_initial_ = 0.0;
};

// Rectangular block of magnitude delta at angle beta.  ramp_width > 0 replaces
// each edge by a cosine ramp of that width centred on the edge.  Throws
// out_of_domain for x outside [0, L].
GroundDisplacement ground_displacement(double x, double delta, const PipeProblem& problem,
                                       double ramp_width = 0.0);

// Uncertain parameters, in this fixed order.
enum Param : int { kDelta = 0, kCohesion = 1, kFriction = 2, kUnitWeight = 3, kDepth = 4 };
inline constexpr int kNumParams = 5;
std::string_view param_name(int p);

struct ScenarioSample {
  double delta = 1.1;  // m
  SoilSample soil{};

  double get(int p) const;
  void set(int p, double v);
};

struct ParameterBox {
  std::array<double, kNumParams> lo{0.0, 40.0, 22.0, 15.0, 1.2};
  std::array<double, kNumParams> hi{2.0, 50.0, 28.0, 23.0, 1.7};

  static ParameterBox full() { return {}; }
  void validate() const;
  bool contains(const ScenarioSample& s, double rel_tol = 1e-12) const;
  // Clamps in place; returns the number of clamped coordinates.
  int clamp(ScenarioSample& s) const;
  ScenarioSample midpoint() const;
};

using NormalizedInput = std::array<double, 6>;

// (x, delta, c, phi, gamma, H) mapped affinely to [-1, 1].  Throws
// out_of_domain for inputs outside the box or [0, L].
NormalizedInput normalize_inputs(double x, const ScenarioSample& s, const ParameterBox& box, double L);
std::pair<double, ScenarioSample> denormalize_inputs(const NormalizedInput& z, const ParameterBox& box,
                                                     double L);

// Everything about one (x, sample) pair that the residual needs besides the
// displacement jets.
struct PointContext {
  double x = 0.0;
  GroundDisplacement ground{0.0, 0.0};
  SpringLaw springs{};
};

PointContext make_point_context(double x, const ScenarioSample& s, const PipeProblem& problem,
                                double ramp_width = 0.0);

template <class T>
struct Residuals {
  T R1;  // N/m
  T R2;  // N/m
};

// Residuals from jets of u (order >= 3) and w (order >= 4) in x about ctx.x.
// N and M are evaluated on order-2 jets and then differentiated again.
template <class T, int KU, int KW>
Residuals<T> residuals(const PointContext& ctx, const ad::Jet<T, KU>& u, const ad::Jet<T, KW>& w,
                       const PipeProblem& problem) {
  if constexpr (KU < 3 || KW < 4) {
    throw Error(ErrorKind::insufficient_jet_order, "residuals need u to order 3 and w to order 4");
  } else {
    const auto ux = ad::truncate<2>(ad::differentiate(u));
    const auto wx = ad::truncate<2>(ad::differentiate(w));
    const auto wxx = ad::truncate<2>(ad::differentiate(ad::differentiate(w)));
    const auto f = section_forces(ux, wx, wxx, problem.grid(), problem.law(), problem.eps_initial());
    const auto nwx = ad::differentiate(f.N * wx);
    const T h = axial_force_density(T(ctx.ground.Ug) - u[0], ctx.springs);
    const T q = lateral_force_density(T(ctx.ground.Wg) - w[0], ctx.springs);
    return {f.N[1] + h, f.M[2] * 2.0 - nwx[0] - q};
  }
}

template <class T, int KU, int KW>
Residuals<T> residuals(double x, const ScenarioSample& s, const ad::Jet<T, KU>& u,
                       const ad::Jet<T, KW>& w, const PipeProblem& problem, double ramp_width = 0.0) {
  return residuals(make_point_context(x, s, problem, ramp_width), u, w, problem);
}

}  // namespace gpra
