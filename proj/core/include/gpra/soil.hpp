#pragma once

// Axial and lateral pipe-soil springs.  Ultimate resistances follow the ALA
// buried-pipe guideline; the force-displacement laws are smooth tanh curves.
//
// Units: cohesion in kPa, unit weight in kN/m^3, lengths in m; resistances
// come back in N/m.

#include <cmath>

#include "gpra/autodiff/jet.hpp"

namespace gpra {

struct SoilSample {
  double c = 45.0;      // cohesion, kPa
  double phi = 25.0;    // friction angle, degrees
  double gamma = 19.0;  // unit weight, kN/m^3
  double H = 1.45;      // depth to pipe centreline, m
};

struct SoilOptions {
  double friction_factor = 0.8;     // interface friction angle = f * phi
  double axial_yield_disp = 0.005;  // m
  double k_smooth = 0.6;            // tanh steepness
  double lateral_yield_disp = 0.0;  // m; 0 selects the ALA expression
};

struct SpringLaw {
  double Tu = 0.0;       // axial ultimate resistance, N/m
  double delta_t = 0.0;  // axial yield displacement, m
  double Pu = 0.0;       // lateral ultimate resistance, N/m
  double delta_p = 0.0;  // lateral yield displacement, m
  double k_smooth = 0.6;
};

struct Resistance {
  double ultimate;      // N/m
  double yield_disp;    // m
};

// Throws Error(invalid_argument) on c < 0, phi outside [0, 45), gamma <= 0 or
// H <= D / 2.
void validate_soil(const SoilSample& soil, double D);

// ALA adhesion factor for cohesion given in kPa.
double adhesion_factor(double c_kpa);
// Horizontal bearing factors at depth ratio H / D.
double clay_bearing_factor(double depth_ratio);
double sand_bearing_factor(double phi_deg, double depth_ratio);

// Tu = pi D alpha c + pi D H gamma (1 + K0) / 2 tan(f phi), K0 = 1 - sin(phi).
Resistance axial_resistance(const SoilSample& soil, double D, const SoilOptions& opts = {});
// Pu = Nch c D + Nqh gamma H D.
Resistance lateral_resistance(const SoilSample& soil, double D, const SoilOptions& opts = {});

SpringLaw make_spring_law(const SoilSample& soil, double D, const SoilOptions& opts = {});

// Tu tanh(k du / delta_t).
template <class T>
T axial_force_density(const T& delta_u, const SpringLaw& law) {
  using std::tanh;
  return tanh(delta_u * (law.k_smooth / law.delta_t)) * law.Tu;
}

// Pu tanh(k dw / delta_p).
template <class T>
T lateral_force_density(const T& delta_w, const SpringLaw& law) {
  using std::tanh;
  return tanh(delta_w * (law.k_smooth / law.delta_p)) * law.Pu;
}

}  // namespace gpra
