#include "gpra/material.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "gpra/error.hpp"

namespace gpra {

namespace {

constexpr int kFitSamples = 101;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::invalid_argument, what);
}

// (2s - sh)^2 / (s^2 + sh^2 - s sh): plastic part of the biaxial flow rule
// per unit 1/(4 Hp).
double flow_integrand(double s, double sigma_h) {
  const double num = 2.0 * s - sigma_h;
  return num * num / (s * s + sigma_h * sigma_h - s * sigma_h);
}

double integrate_flow(double from, double to, double sigma_h) {
  if (from == to) return 0.0;
  double error = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      [&](double s) { return flow_integrand(s, sigma_h); }, from, to, 10, 1e-13, &error);
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::quadrature_failure,
                "flow-rule integrand is not finite between " + std::to_string(from) + " and " +
                    std::to_string(to) + " Pa");
  }
  return v;
}

// Slope of the flow-rule curve fitted from the yield stress `sy` to strain
// `eps_end` (sign selects the branch).
double fit_branch(double sy, double sigma_h, double Hp, double E, double eps_end) {
  const double dir = eps_end > 0.0 ? 1.0 : -1.0;
  const double eps_y = sy / E;
  const double d_eps = std::abs(eps_end - eps_y);
  const double inv4h = 1.0 / (4.0 * Hp);

  auto strain_at = [&](double s) { return s / E + inv4h * integrate_flow(sy, s, sigma_h); };

  // The integrand lies between its value at the yield point and 4, which
  // brackets the end stress.
  const double g_min = flow_integrand(sy, sigma_h);
  const double lo = d_eps / (1.0 / E + 4.0 * inv4h);
  const double hi = d_eps / (1.0 / E + g_min * inv4h);
  auto residual = [&](double ds) { return dir * (strain_at(sy + dir * ds) - eps_end); };

  double s_end = sy + dir * lo;
  if (hi > lo * (1.0 + 1e-12)) {
    boost::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(
        residual, lo, hi, residual(lo), residual(hi),
        boost::math::tools::eps_tolerance<double>(50), iters);
    s_end = sy + dir * 0.5 * (root.first + root.second);
  }

  // Least-squares line through uniformly spaced stress samples.
  std::vector<double> s(kFitSamples), e(kFitSamples);
  s[0] = sy;
  e[0] = eps_y;
  for (int i = 1; i < kFitSamples; ++i) {
    s[i] = sy + (s_end - sy) * double(i) / double(kFitSamples - 1);
    e[i] = e[i - 1] + (s[i] - s[i - 1]) / E + inv4h * integrate_flow(s[i - 1], s[i], sigma_h);
  }
  double me = 0.0, ms = 0.0;
  for (int i = 0; i < kFitSamples; ++i) {
    me += e[i];
    ms += s[i];
  }
  me /= kFitSamples;
  ms /= kFitSamples;
  double see = 0.0, ses = 0.0;
  for (int i = 0; i < kFitSamples; ++i) {
    see += (e[i] - me) * (e[i] - me);
    ses += (e[i] - me) * (s[i] - ms);
  }
  const double slope = ses / see;
  if (!std::isfinite(slope)) throw Error(ErrorKind::quadrature_failure, "plastic modulus fit failed");
  return slope;
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_geometry: return "invalid-geometry";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::no_real_root: return "no-real-root";
    case ErrorKind::quadrature_failure: return "quadrature-failure";
    case ErrorKind::out_of_domain: return "out-of-domain";
    case ErrorKind::insufficient_jet_order: return "insufficient-jet-order";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::diverged: return "diverged";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::evaluator_failure: return "evaluator-failure";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void SteelMaterial::validate() const {
  require(E > 0.0, "E must be positive");
  require(sigma_y > 0.0 && sigma_y < sigma_u, "need 0 < sigma_y < sigma_u");
  require(eps_u > 0.0 && eps_u < 1.0, "need 0 < eps_u < 1");
  require(eps_u > sigma_y / E, "eps_u must exceed the yield strain");
  require(nu > 0.0 && nu < 0.5, "need 0 < nu < 0.5");
  require(R > 1.0, "R must exceed 1");
  require(omega > 0.0, "omega must be positive");
}

double SteelMaterial::uniaxial_plastic_modulus() const {
  return (sigma_u - sigma_y) / (eps_u - sigma_y / E);
}

double hoop_stress(double P, double D, double t) {
  if (!(t > 0.0) || !(D > 2.0 * t)) {
    throw Error(ErrorKind::invalid_geometry, "need D > 2t > 0 (D=" + std::to_string(D) +
                                                 ", t=" + std::to_string(t) + ")");
  }
  return P * (D - 2.0 * t) / (2.0 * t);
}

YieldStresses biaxial_yield(double sigma_y, double sigma_h) {
  const double disc = 4.0 * sigma_y * sigma_y - 3.0 * sigma_h * sigma_h;
  if (!(disc > 0.0)) {
    throw Error(ErrorKind::no_real_root,
                "hoop stress " + std::to_string(sigma_h) + " Pa is outside 2 sigma_y / sqrt(3)");
  }
  const double r = std::sqrt(disc);
  return {0.5 * (sigma_h + r), 0.5 * (sigma_h - r)};
}

double hardening_parameter(double E, double Ep) {
  if (!(Ep >= 0.0) || !(Ep < E)) {
    throw Error(ErrorKind::invalid_argument, "need 0 <= Ep < E");
  }
  return E * Ep / (E - Ep);
}

PlasticModuli plastic_moduli(const BiaxialState& state, double E, double fit_strain_max) {
  if (!(fit_strain_max > state.sigma_yT / E) || !(fit_strain_max > -state.sigma_yC / E)) {
    throw Error(ErrorKind::invalid_argument, "fit_strain_max must exceed both yield strains");
  }
  if (!(state.Hp > 0.0)) throw Error(ErrorKind::invalid_argument, "Hp must be positive");
  return {fit_branch(state.sigma_yT, state.sigma_h, state.Hp, E, fit_strain_max),
          fit_branch(state.sigma_yC, state.sigma_h, state.Hp, E, -fit_strain_max)};
}

BiaxialState make_biaxial_state(const SteelMaterial& mat, double sigma_h, double fit_strain_max) {
  mat.validate();
  BiaxialState st;
  st.sigma_h = sigma_h;
  const auto y = biaxial_yield(mat.sigma_y, sigma_h);
  st.sigma_yT = y.tensile;
  st.sigma_yC = y.compressive;
  st.Hp = hardening_parameter(mat.E, mat.uniaxial_plastic_modulus());
  const auto ep = plastic_moduli(st, mat.E, fit_strain_max);
  st.bT = ep.tensile / mat.E;
  st.bC = ep.compressive / mat.E;
  return st;
}

double initial_strain(double P, double D, double t, double nu, double alpha, double dT, double E) {
  return nu * hoop_stress(P, D, t) / E - alpha * dT;
}

double bilinear_reference(double eps, const SteelMaterial& mat, const BiaxialState& state) {
  const double ey_t = state.sigma_yT / mat.E;
  const double ey_c = state.sigma_yC / mat.E;
  if (eps > ey_t) return state.sigma_yT + state.bT * mat.E * (eps - ey_t);
  if (eps < ey_c) return state.sigma_yC + state.bC * mat.E * (eps - ey_c);
  return mat.E * eps;
}

}  // namespace gpra
