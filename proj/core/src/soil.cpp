#include "gpra/soil.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "gpra/ala_constants.hpp"
#include "gpra/error.hpp"

namespace gpra {

namespace {

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void validate_soil(const SoilSample& s, double D) {
  if (!(s.c >= 0.0)) throw Error(ErrorKind::invalid_argument, "cohesion must be >= 0");
  if (!(s.phi >= 0.0 && s.phi < 45.0)) {
    throw Error(ErrorKind::invalid_argument, "friction angle must lie in [0, 45) degrees");
  }
  if (!(s.gamma > 0.0)) throw Error(ErrorKind::invalid_argument, "unit weight must be positive");
  if (!(s.H > 0.5 * D)) {
    throw Error(ErrorKind::invalid_argument,
                "burial depth " + std::to_string(s.H) + " m must exceed D/2");
  }
}

double adhesion_factor(double c_kpa) {
  const double c = c_kpa / ala::kPaPerKsf;
  const auto& k = ala::kAdhesion;
  return k.a0 + k.a1 * c + k.a2 / (c * c + 1.0) + k.a3 / (c * c * c + 1.0);
}

double clay_bearing_factor(double x) {
  const auto& k = ala::kNch;
  const double x1 = x + 1.0;
  return std::min(k.a + k.b * x + k.c / (x1 * x1) + k.d / (x1 * x1 * x1), k.cap);
}

double sand_bearing_factor(double phi_deg, double x) {
  auto row_value = [x](const ala::SandBearingRow& r) {
    return r.a + x * (r.b + x * (r.c + x * (r.d + x * r.e)));
  };
  const auto& rows = ala::kNqh;
  if (phi_deg <= 0.0) return 0.0;
  if (phi_deg <= rows.front().phi_deg) return row_value(rows.front()) * phi_deg / rows.front().phi_deg;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (phi_deg <= rows[i].phi_deg) {
      const double w = (phi_deg - rows[i - 1].phi_deg) / (rows[i].phi_deg - rows[i - 1].phi_deg);
      return (1.0 - w) * row_value(rows[i - 1]) + w * row_value(rows[i]);
    }
  }
  return row_value(rows.back());
}

Resistance axial_resistance(const SoilSample& s, double D, const SoilOptions& opts) {
  validate_soil(s, D);
  const double pi = std::numbers::pi;
  const double c = s.c * 1e3;          // Pa
  const double gamma = s.gamma * 1e3;  // N/m^3
  const double k0 = 1.0 - std::sin(deg(s.phi));
  const double clay = pi * D * adhesion_factor(s.c) * c;
  const double sand =
      pi * D * s.H * gamma * 0.5 * (1.0 + k0) * std::tan(deg(opts.friction_factor * s.phi));
  return {clay + sand, opts.axial_yield_disp};
}

Resistance lateral_resistance(const SoilSample& s, double D, const SoilOptions& opts) {
  validate_soil(s, D);
  const double x = s.H / D;
  const double c = s.c * 1e3;
  const double gamma = s.gamma * 1e3;
  const double pu = clay_bearing_factor(x) * c * D + sand_bearing_factor(s.phi, x) * gamma * s.H * D;
  const double dp = std::clamp(ala::kLateralYieldFactor * (s.H + 0.5 * D), ala::kLateralYieldMinD * D,
                               ala::kLateralYieldMaxD * D);
  return {pu, opts.lateral_yield_disp > 0.0 ? opts.lateral_yield_disp : dp};
}

SpringLaw make_spring_law(const SoilSample& soil, double D, const SoilOptions& opts) {
  if (!(opts.k_smooth > 0.0) || !(opts.axial_yield_disp > 0.0) || opts.lateral_yield_disp < 0.0) {
    throw Error(ErrorKind::invalid_argument, "k_smooth and axial yield displacement must be positive");
  }
  const auto ax = axial_resistance(soil, D, opts);
  const auto lat = lateral_resistance(soil, D, opts);
  return {ax.ultimate, ax.yield_disp, lat.ultimate, lat.yield_disp, opts.k_smooth};
}

}  // namespace gpra
