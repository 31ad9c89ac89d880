#pragma once

// Longitudinal stress-strain law of pipe steel under a biaxial (hoop +
// longitudinal) stress state: von Mises yield shifted by the hoop stress, a
// linearised post-yield modulus per direction, and a smooth Menegotto-Pinto
// type curve that blends the tensile and compressive branches.

#include <cmath>
#include <utility>

#include "gpra/autodiff/jet.hpp"

namespace gpra {

struct SteelMaterial {
  double E = 199e9;        // Pa
  double sigma_y = 448e6;  // Pa
  double sigma_u = 663e6;  // Pa
  double eps_u = 0.3;
  double alpha = 12e-6;  // 1/degC
  double nu = 0.3;
  double R = 20.0;        // transition sharpness
  double omega = 10000.0;  // tension/compression blend scale, 1/strain

  // API 5L X65 constants used throughout the case study.
  static SteelMaterial x65() { return {}; }

  // Throws Error(invalid_argument) when an invariant is violated.
  void validate() const;

  // (sigma_u - sigma_y) / (eps_u - sigma_y / E).
  double uniaxial_plastic_modulus() const;
};

struct BiaxialState {
  double sigma_h = 0.0;   // hoop stress, Pa
  double sigma_yT = 0.0;  // tensile longitudinal yield, Pa
  double sigma_yC = 0.0;  // compressive longitudinal yield, Pa (negative)
  double Hp = 0.0;        // hardening parameter, Pa
  double bT = 0.0;        // EpT / E
  double bC = 0.0;        // EpC / E
};

struct YieldStresses {
  double tensile;
  double compressive;
};

struct PlasticModuli {
  double tensile;
  double compressive;
};

// P (D - 2t) / (2t).  Throws invalid_geometry unless D > 2t > 0.
double hoop_stress(double P, double D, double t);

// Longitudinal stresses satisfying von Mises at sigma_vM = sigma_y for the
// given hoop stress.  Throws no_real_root when |sigma_h| >= 2 sigma_y / sqrt(3).
YieldStresses biaxial_yield(double sigma_y, double sigma_h);

// E Ep / (E - Ep).
double hardening_parameter(double E, double Ep);

// Slopes of least-squares lines through the integrated biaxial flow-rule
// curves, from each yield point out to +/- fit_strain_max.
PlasticModuli plastic_moduli(const BiaxialState& state, double E, double fit_strain_max);

BiaxialState make_biaxial_state(const SteelMaterial& mat, double sigma_h,
                                double fit_strain_max = 0.05);

// nu * hoop_stress / E - alpha * dT; heating is compressive.
double initial_strain(double P, double D, double t, double nu, double alpha, double dT, double E);

// Piecewise-linear law with slopes E, then EpT / EpC beyond the yield stresses.
double bilinear_reference(double eps, const SteelMaterial& mat, const BiaxialState& state);

namespace detail {

// E eps (b + (1 - b) / (1 + |E eps / sy|^R)^(1/R)), evaluated in log space so it
// stays finite for any finite strain.
template <class T>
T mp_branch(const T& e_eps, double sy, double b, double R) {
  using std::abs;
  using std::exp;
  using std::log;
  const T x = e_eps / std::abs(sy);
  if (ad::value_of(x) == 0.0) return e_eps;
  const T s = log(abs(x)) * R;
  const T inv_knee = exp(-ad::softplus(s) / R);
  return e_eps * (b + (1.0 - b) * inv_knee);
}

}  // namespace detail

template <class T>
T stress_mp(const T& eps, const SteelMaterial& mat, const BiaxialState& state) {
  const T e_eps = eps * mat.E;
  const T s_t = detail::mp_branch(e_eps, state.sigma_yT, state.bT, mat.R);
  const T s_c = detail::mp_branch(e_eps, state.sigma_yC, state.bC, mat.R);
  const T w = ad::logistic(eps * mat.omega);
  return (s_t - s_c) * w + s_c;
}

// Stress and its first three strain derivatives at one strain value.
struct StressDerivatives {
  double s0, s1, s2, s3;
};

// Material constants bundled with the biaxial state they imply.
class SteelLaw {
 public:
  SteelLaw() = default;
  SteelLaw(const SteelMaterial& mat, const BiaxialState& state) : mat_(mat), state_(state) {}

  const SteelMaterial& material() const { return mat_; }
  const BiaxialState& state() const { return state_; }

  template <class T>
  T stress(const T& eps) const {
    return stress_mp(eps, mat_, state_);
  }

  StressDerivatives derivatives(double eps) const {
    const auto j = stress(ad::Jet<double, 3>::variable(eps));
    return {j[0], j[1], 2.0 * j[2], 6.0 * j[3]};
  }

  // Stress and tangent modulus.
  std::pair<double, double> stress_tangent(double eps) const {
    const auto j = stress(ad::Jet<double, 1>::variable(eps));
    return {j[0], j[1]};
  }

 private:
  SteelMaterial mat_;
  BiaxialState state_;
};

}  // namespace gpra
