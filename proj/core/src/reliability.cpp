#include "gpra/reliability.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <ostream>

#include "gpra/error.hpp"
#include "gpra/parallel.hpp"

namespace gpra {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Accumulated about the first value, so a constant list is exact.
void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  const double ref = v.front();
  double m = 0.0;
  for (double x : v) m += x - ref;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - ref - m) * (x - ref - m);
  mean = ref + m;
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

Histogram histogram(const std::vector<double>& v, int bins) {
  Histogram h;
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  h.lo = *mn;
  if (*mx == *mn) {
    h.width = 0.0;
    h.counts.assign(1, static_cast<long long>(v.size()));
    return h;
  }
  h.width = (*mx - *mn) / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    auto k = static_cast<long long>((x - h.lo) / h.width);
    k = std::clamp<long long>(k, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

void LimitState::validate() const {
  if (!(eps_cT > 0.0) || !(eps_cC > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "strain capacities must be positive");
  }
}

double compressive_capacity(double P, double D, double t, double E) {
  if (!(D > 0.0) || !(t > 0.0) || !(t < 0.5 * D) || !(E > 0.0) || !(P >= 0.0)) {
    throw Error(ErrorKind::invalid_geometry, "capacity needs D > 2t > 0, E > 0 and P >= 0");
  }
  const double r = P * D / (2.0 * t * E);
  return 0.5 * (t / D) - 0.0025 + 3000.0 * r * r;
}

LimitState strain_capacities(double P, double D, double t, double E, CapacityCase c) {
  const double cc = compressive_capacity(P, D, t, E);
  if (c == CapacityCase::I) return {0.02, cc, "I"};
  return {0.025, 1.3 * cc, "II"};
}

LimitState strain_capacities(const PipeSpec& spec, CapacityCase c) {
  return strain_capacities(spec.P, spec.D, spec.t, spec.material.E, c);
}

LimitStateValue limit_state_eval(double demand_T, double demand_C, const LimitState& ls) {
  return {ls.eps_cT - demand_T, ls.eps_cC - std::abs(demand_C)};
}

// ---------------------------------------------------------------------------

RandomVariables default_variables() {
  return {{{"delta", 1.1, 0.112},
           {"cohesion", 45.0, 0.715},
           {"friction", 25.0, 0.426},
           {"unit_weight", 19.0, 0.584},
           {"depth", 1.45, 0.0359}}};
}

void validate(const RandomVariables& rv) {
  for (const auto& v : rv) {
    if (!(v.sd > 0.0) || !std::isfinite(v.mean)) {
      throw Error(ErrorKind::invalid_argument, "random variable " + v.name + " needs a finite mean and sd > 0");
    }
  }
}

double standard_normal(std::uint64_t seed, std::uint64_t sample, int variable) {
  const std::uint64_t h = mix64(mix64(seed) ^ (sample * 8 + static_cast<std::uint64_t>(variable)));
  const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

SampleSet sample_random_variables(const RandomVariables& rv, const ParameterBox& box, int n, std::uint64_t seed,
                                  const std::array<double, kNumParams>& shift_sd) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "sample count must be >= 1");
  validate(rv);
  box.validate();
  SampleSet out;
  out.samples.resize(static_cast<std::size_t>(n));
  out.clamped.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScenarioSample s;
    for (int p = 0; p < kNumParams; ++p) {
      const auto& v = rv[static_cast<std::size_t>(p)];
      s.set(p, v.mean + v.sd * (shift_sd[static_cast<std::size_t>(p)] +
                                standard_normal(seed, static_cast<std::uint64_t>(i), p)));
    }
    const int c = box.clamp(s);
    out.samples[static_cast<std::size_t>(i)] = s;
    out.clamped[static_cast<std::size_t>(i)] = c;
    out.clamp_events += c;
  }
  return out;
}

// ---------------------------------------------------------------------------

DemandEvaluator oracle_evaluator(const PipeProblem& problem, const FdmOptions& opts) {
  return [&problem, opts](const ScenarioSample& s) {
    const auto f = solve_fdm(s, problem, opts);
    return StrainExtremes{f.eps_max_tensile, f.eps_min_compressive};
  };
}

DemandEvaluator surrogate_evaluator(const NetworkParams& net, const PipeProblem& problem, int n_grid) {
  return [&net, &problem, n_grid](const ScenarioSample& s) {
    return predict_strain_extremes(net, s, problem, n_grid);
  };
}

DemandStatistics demand_statistics(const std::vector<StrainExtremes>& d, int bins) {
  if (d.empty()) throw Error(ErrorKind::invalid_argument, "no demands");
  if (bins < 1) throw Error(ErrorKind::invalid_argument, "histogram needs at least one bin");
  std::vector<double> t, c;
  t.reserve(d.size());
  c.reserve(d.size());
  for (const auto& e : d) {
    t.push_back(e.tensile);
    c.push_back(e.compressive);
  }
  DemandStatistics s;
  mean_sd(t, s.mean_T, s.sd_T);
  mean_sd(c, s.mean_C, s.sd_C);
  s.hist_T = histogram(t, bins);
  s.hist_C = histogram(c, bins);
  return s;
}

std::array<double, 2> McsResult::confidence_interval_T(double z) const {
  return {std::max(0.0, pof_T - z * se_T), std::min(1.0, pof_T + z * se_T)};
}

McsResult run_mcs(const DemandEvaluator& eval, const RandomVariables& rv, const ParameterBox& box,
                  const LimitState& ls, const McsOptions& opts, const std::array<double, kNumParams>& shift_sd) {
  ls.validate();
  auto set = sample_random_variables(rv, box, opts.samples, opts.seed, shift_sd);
  const int n = opts.samples;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<StrainExtremes> dem(static_cast<std::size_t>(n), {nan, nan});
  std::vector<std::string> err(static_cast<std::size_t>(n));
  parallel_for(n, opts.threads, [&](int i) {
    const auto si = static_cast<std::size_t>(i);
    try {
      const auto d = eval(set.samples[si]);
      if (!std::isfinite(d.tensile) || !std::isfinite(d.compressive)) {
        err[si] = "non-finite demand";
      } else {
        dem[si] = d;
      }
    } catch (const Error& e) {
      err[si] = e.what();
    }
  });

  McsResult r;
  r.N = n;
  r.seed = opts.seed;
  r.clamp_events = set.clamp_events;
  std::vector<StrainExtremes> good;
  good.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (!err[si].empty()) {
      r.excluded.push_back(i);
      r.exclusion_reasons.push_back(err[si]);
      continue;
    }
    good.push_back(dem[si]);
    const auto g = limit_state_eval(dem[si].tensile, dem[si].compressive, ls);
    r.failures_T += g.fail_T();
    r.failures_C += g.fail_C();
  }
  r.valid = static_cast<int>(good.size());
  r.samples = std::move(set.samples);
  r.demands = std::move(dem);
  if (static_cast<double>(r.excluded.size()) > opts.max_excluded_fraction * n || good.empty()) {
    throw Error(ErrorKind::evaluator_failure,
                std::to_string(r.excluded.size()) + " of " + std::to_string(n) +
                    " samples failed to evaluate; first: sample " + std::to_string(r.excluded.front()) + ": " +
                    r.exclusion_reasons.front());
  }
  const double nv = r.valid;
  r.pof_T = static_cast<double>(r.failures_T) / nv;
  r.pof_C = static_cast<double>(r.failures_C) / nv;
  r.se_T = std::sqrt(r.pof_T * (1.0 - r.pof_T) / nv);
  r.se_C = std::sqrt(r.pof_C * (1.0 - r.pof_C) / nv);
  r.stats = demand_statistics(good, opts.histogram_bins);
  return r;
}

// ---------------------------------------------------------------------------

std::string to_string(SensitivityIndex d) {
  return d == SensitivityIndex::relative_change ? "relative_change" : "shifted_pof";
}

std::string to_string(FailureMode m) { return m == FailureMode::tensile ? "tensile" : "compressive"; }

SensitivityResult sensitivity(const DemandEvaluator& eval, const RandomVariables& rv, const ParameterBox& box,
                              const LimitState& ls, const McsOptions& opts, FailureMode mode,
                              SensitivityIndex def) {
  auto pof = [&](const McsResult& r) { return mode == FailureMode::tensile ? r.pof_T : r.pof_C; };
  SensitivityResult out;
  out.mode = mode;
  out.definition = def;
  out.baseline_pof = pof(run_mcs(eval, rv, box, ls, opts));
  out.baseline_index = 100.0 * out.baseline_pof;
  for (int p = 0; p < kNumParams; ++p) {
    for (int dir : {-1, 1}) {
      std::array<double, kNumParams> shift{};
      shift[static_cast<std::size_t>(p)] = dir;
      const double ps = pof(run_mcs(eval, rv, box, ls, opts, shift));
      double idx = 100.0 * ps;
      if (def == SensitivityIndex::relative_change && out.baseline_pof > 0.0) {
        idx = 100.0 * std::abs(ps - out.baseline_pof) / out.baseline_pof;
      }
      out.rows.push_back({p, dir, ps, idx});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_mcs_summary_csv(std::ostream& os, const McsResult& r) {
  const auto prec = os.precision(17);
  os << "mode,N,valid,excluded,failures,pof,se\n";
  os << "tensile," << r.N << ',' << r.valid << ',' << r.excluded.size() << ',' << r.failures_T << ',' << r.pof_T
     << ',' << r.se_T << '\n';
  os << "compressive," << r.N << ',' << r.valid << ',' << r.excluded.size() << ',' << r.failures_C << ','
     << r.pof_C << ',' << r.se_C << '\n';
  os.precision(prec);
}

void write_mcs_samples_csv(std::ostream& os, const McsResult& r, const LimitState& ls) {
  const auto prec = os.precision(17);
  os << "index";
  for (int p = 0; p < kNumParams; ++p) os << ',' << param_name(p);
  os << ",demand_T,demand_C,g_T,g_C\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    os << i;
    for (int p = 0; p < kNumParams; ++p) os << ',' << r.samples[i].get(p);
    const auto& d = r.demands[i];
    if (std::isfinite(d.tensile)) {
      const auto g = limit_state_eval(d.tensile, d.compressive, ls);
      os << ',' << d.tensile << ',' << d.compressive << ',' << g.g_T << ',' << g.g_C << '\n';
    } else {
      os << ",nan,nan,nan,nan\n";
    }
  }
  os.precision(prec);
}

void write_histogram_csv(std::ostream& os, const DemandStatistics& s) {
  const auto prec = os.precision(17);
  os << "mode,bin_lo,bin_hi,count\n";
  auto rows = [&](const char* mode, const Histogram& h) {
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      const double lo = h.lo + h.width * static_cast<double>(k);
      os << mode << ',' << lo << ',' << lo + h.width << ',' << h.counts[k] << '\n';
    }
  };
  rows("tensile", s.hist_T);
  rows("compressive", s.hist_C);
  os.precision(prec);
}

void write_sensitivity_csv(std::ostream& os, const SensitivityResult& s) {
  const auto prec = os.precision(17);
  os << "variable,shift,pof,index\n";
  for (const auto& r : s.rows) {
    os << param_name(r.param) << ',' << (r.direction < 0 ? "mean-sd" : "mean+sd") << ',' << r.pof << ','
       << r.index << '\n';
  }
  os.precision(prec);
}

}  // namespace gpra
