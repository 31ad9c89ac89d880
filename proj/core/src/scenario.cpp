#include "gpra/scenario.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

namespace gpra {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::invalid_argument, what);
}

class Fnv {
 public:
  void add(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    add(std::bit_cast<std::uint64_t>(v));
  }
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

}  // namespace

PipeProblem::PipeProblem(const PipeSpec& spec) : spec_(spec) {
  require(spec.L > 0.0, "pipe length must be positive");
  require(spec.block_start >= 0.0 && spec.block_len > 0.0 &&
              spec.block_start + spec.block_len <= spec.L,
          "ground block must lie within [0, L]");
  require(spec.beta_deg > 0.0 && spec.beta_deg <= 90.0, "crossing angle must lie in (0, 90]");
  require(spec.P >= 0.0, "internal pressure must be >= 0");
  spec.material.validate();
  grid_ = FiberGrid::build(spec.D, spec.t, spec.n_r, spec.n_theta);
  const double sh = hoop_stress(spec.P, spec.D, spec.t);
  law_ = SteelLaw(spec.material, make_biaxial_state(spec.material, sh, spec.fit_strain_max));
  eps_initial_ = initial_strain(spec.P, spec.D, spec.t, spec.material.nu, spec.material.alpha, spec.dT,
                                spec.material.E);
}

std::uint64_t PipeProblem::digest() const {
  Fnv h;
  const auto& s = spec_;
  for (double v : {s.D, s.t, s.L, s.block_start, s.block_len, s.beta_deg, s.P, s.dT}) h.add(v);
  const auto& m = s.material;
  for (double v : {m.E, m.sigma_y, m.sigma_u, m.eps_u, m.alpha, m.nu, m.R, m.omega}) h.add(v);
  h.add(static_cast<std::uint64_t>(s.n_r));
  h.add(static_cast<std::uint64_t>(s.n_theta));
  for (double v : {s.soil.friction_factor, s.soil.axial_yield_disp, s.soil.k_smooth, s.soil.lateral_yield_disp,
                   s.fit_strain_max}) {
    h.add(v);
  }
  return h.value();
}

GroundDisplacement ground_displacement(double x, double delta, const PipeProblem& problem,
                                       double ramp_width) {
  const auto& s = problem.spec();
  if (!(x >= 0.0 && x <= s.L)) {
    throw Error(ErrorKind::out_of_domain, "x = " + std::to_string(x) + " outside [0, L]");
  }
  const double a = s.block_start;
  const double b = s.block_start + s.block_len;
  double f = 0.0;
  if (ramp_width > 0.0) {
    const double r = 0.5 * ramp_width;
    auto up = [&](double d) {  // 0 at d = -r, 1 at d = +r
      if (d <= -r) return 0.0;
      if (d >= r) return 1.0;
      return 0.5 * (1.0 - std::cos(std::numbers::pi * (d + r) / ramp_width));
    };
    f = up(x - a) * up(b - x);
  } else {
    f = (x >= a && x <= b) ? 1.0 : 0.0;
  }
  const double beta = s.beta_deg * std::numbers::pi / 180.0;
  const double ug = s.beta_deg == 90.0 ? 0.0 : delta * std::cos(beta);
  return {f * ug, f * delta * std::sin(beta)};
}

std::string_view param_name(int p) {
  switch (p) {
    case kDelta: return "delta";
    case kCohesion: return "c";
    case kFriction: return "phi";
    case kUnitWeight: return "gamma";
    case kDepth: return "H";
    default: throw Error(ErrorKind::invalid_argument, "parameter index out of range");
  }
}

double ScenarioSample::get(int p) const {
  switch (p) {
    case kDelta: return delta;
    case kCohesion: return soil.c;
    case kFriction: return soil.phi;
    case kUnitWeight: return soil.gamma;
    case kDepth: return soil.H;
    default: throw Error(ErrorKind::invalid_argument, "parameter index out of range");
  }
}

void ScenarioSample::set(int p, double v) {
  switch (p) {
    case kDelta: delta = v; break;
    case kCohesion: soil.c = v; break;
    case kFriction: soil.phi = v; break;
    case kUnitWeight: soil.gamma = v; break;
    case kDepth: soil.H = v; break;
    default: throw Error(ErrorKind::invalid_argument, "parameter index out of range");
  }
}

void ParameterBox::validate() const {
  for (int p = 0; p < kNumParams; ++p) {
    require(lo[p] < hi[p], "parameter box for " + std::string(param_name(p)) + " needs lo < hi");
  }
}

bool ParameterBox::contains(const ScenarioSample& s, double rel_tol) const {
  for (int p = 0; p < kNumParams; ++p) {
    const double slack = rel_tol * (hi[p] - lo[p]);
    const double v = s.get(p);
    if (!(v >= lo[p] - slack && v <= hi[p] + slack)) return false;
  }
  return true;
}

int ParameterBox::clamp(ScenarioSample& s) const {
  int n = 0;
  for (int p = 0; p < kNumParams; ++p) {
    const double v = s.get(p);
    const double c = std::clamp(v, lo[p], hi[p]);
    if (c != v) {
      s.set(p, c);
      ++n;
    }
  }
  return n;
}

ScenarioSample ParameterBox::midpoint() const {
  ScenarioSample s;
  for (int p = 0; p < kNumParams; ++p) s.set(p, 0.5 * (lo[p] + hi[p]));
  return s;
}

NormalizedInput normalize_inputs(double x, const ScenarioSample& s, const ParameterBox& box, double L) {
  if (!(x >= 0.0 && x <= L)) {
    throw Error(ErrorKind::out_of_domain, "x = " + std::to_string(x) + " outside [0, L]");
  }
  if (!box.contains(s)) throw Error(ErrorKind::out_of_domain, "sample outside the parameter box");
  NormalizedInput z{};
  z[0] = 2.0 * x / L - 1.0;
  for (int p = 0; p < kNumParams; ++p) {
    z[p + 1] = (2.0 * s.get(p) - box.lo[p] - box.hi[p]) / (box.hi[p] - box.lo[p]);
  }
  return z;
}

std::pair<double, ScenarioSample> denormalize_inputs(const NormalizedInput& z, const ParameterBox& box,
                                                     double L) {
  ScenarioSample s;
  for (int p = 0; p < kNumParams; ++p) {
    s.set(p, 0.5 * (box.lo[p] + box.hi[p]) + 0.5 * (box.hi[p] - box.lo[p]) * z[p + 1]);
  }
  return {0.5 * L * (z[0] + 1.0), s};
}

PointContext make_point_context(double x, const ScenarioSample& s, const PipeProblem& problem,
                                double ramp_width) {
  return {x, ground_displacement(x, s.delta, problem, ramp_width),
          make_spring_law(s.soil, problem.spec().D, problem.spec().soil)};
}

}  // namespace gpra
