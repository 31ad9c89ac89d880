#pragma once

// Soil-spring coefficients transcribed from American Lifelines Alliance,
// "Guidelines for the Design of Buried Steel Pipe" (July 2001), Appendix B.
// Units follow the guideline: the adhesion fit takes cohesion in kips/ft^2.

#include <array>

namespace gpra::ala {

// 1 ksf = 47.880 kPa.
inline constexpr double kPaPerKsf = 47.880259;

// App. B, B.1 axial soil springs: adhesion factor
//   alpha = 0.608 - 0.123 c - 0.274 / (c^2 + 1) + 0.695 / (c^3 + 1), c in ksf.
struct AdhesionFit {
  double a0 = 0.608;
  double a1 = -0.123;
  double a2 = -0.274;
  double a3 = 0.695;
};
inline constexpr AdhesionFit kAdhesion{};

// App. B, B.1: axial yield displacement by soil type (0.1 in dense sand,
// 0.2 in loose sand, 0.3 in stiff clay, 0.4 in soft clay), metres.
inline constexpr double kAxialYieldDenseSand = 0.003;
inline constexpr double kAxialYieldLooseSand = 0.005;
inline constexpr double kAxialYieldStiffClay = 0.008;
inline constexpr double kAxialYieldSoftClay = 0.010;

// App. B, B.1: interface friction factor f for a rough steel coating.
inline constexpr double kFrictionFactorRoughSteel = 0.8;

// App. B, B.2 lateral soil springs, horizontal bearing factor for clay:
//   Nch = a + b x + c / (x + 1)^2 + d / (x + 1)^3 <= 9, x = H / D.
struct ClayBearingFit {
  double a = 6.752;
  double b = 0.065;
  double c = -11.063;
  double d = 7.119;
  double cap = 9.0;
};
inline constexpr ClayBearingFit kNch{};

// App. B, B.2, horizontal bearing factor for sand:
//   Nqh = a + b x + c x^2 + d x^3 + e x^4, x = H / D, tabulated by friction
// angle; intermediate angles interpolate linearly between rows and Nqh = 0 at
// phi = 0.
struct SandBearingRow {
  double phi_deg;
  double a, b, c, d, e;
};
inline constexpr std::array<SandBearingRow, 6> kNqh{{
    {20.0, 2.399, 0.439, -0.03, 1.059e-3, -1.754e-5},
    {25.0, 3.332, 0.839, -0.090, 5.606e-3, -1.319e-4},
    {30.0, 4.565, 1.234, -0.089, 4.275e-3, -9.159e-5},
    {35.0, 6.816, 2.019, -0.146, 7.651e-3, -1.683e-4},
    {40.0, 10.959, 1.783, 0.045, -5.425e-3, -1.153e-4},
    {45.0, 17.658, 3.309, 0.048, -6.443e-3, -1.299e-4},
}};

// App. B, B.2: lateral yield displacement 0.04 (H + D/2), kept within
// [0.10 D, 0.15 D].
inline constexpr double kLateralYieldFactor = 0.04;
inline constexpr double kLateralYieldMinD = 0.10;
inline constexpr double kLateralYieldMaxD = 0.15;

}  // namespace gpra::ala
