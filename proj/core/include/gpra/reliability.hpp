#pragma once

// Monte-Carlo reliability of the pipe against strain-capacity exceedance.
//
// Random variables are independent normals, drawn from a counter-based stream
// (sample i, variable p) so every sample is reproducible on its own and the
// result never depends on the thread count.  Draws are clamped to the
// parameter box.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gpra/oracle.hpp"
#include "gpra/scenario.hpp"
#include "gpra/surrogate.hpp"

namespace gpra {

// ---------------------------------------------------------------------------
// Capacities and limit states

enum class CapacityCase { I, II };

struct LimitState {
  double eps_cT = 0.02;     // tensile capacity
  double eps_cC = 0.0045;   // compressive capacity, positive magnitude
  std::string label = "I";

  void validate() const;
};

// 0.5 t/D - 0.0025 + 3000 (P D / (2 t E))^2.  Throws invalid_geometry.
double compressive_capacity(double P, double D, double t, double E);

// Case I: 2% tensile, compressive as above.  Case II: 2.5% tensile and 1.3
// times the case I compressive value (0.58% / 1.9% for the reference pipe).
LimitState strain_capacities(double P, double D, double t, double E, CapacityCase c);
LimitState strain_capacities(const PipeSpec& spec, CapacityCase c);

struct LimitStateValue {
  double g_T, g_C;
  bool fail_T() const { return g_T <= 0.0; }
  bool fail_C() const { return g_C <= 0.0; }
};

LimitStateValue limit_state_eval(double demand_T, double demand_C, const LimitState& ls);

// ---------------------------------------------------------------------------
// Random variables

struct RandomVariableSpec {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
};

using RandomVariables = std::array<RandomVariableSpec, kNumParams>;

RandomVariables default_variables();
void validate(const RandomVariables& rv);

// Standard normal draw for (seed, sample, variable).
double standard_normal(std::uint64_t seed, std::uint64_t sample, int variable);

struct SampleSet {
  std::vector<ScenarioSample> samples;
  std::vector<int> clamped;  // clamped coordinates per sample
  long long clamp_events = 0;
};

// Sample i uses mean + sd * standard_normal(seed, i, p) + shift[p] * sd.
SampleSet sample_random_variables(const RandomVariables& rv, const ParameterBox& box, int n, std::uint64_t seed,
                                  const std::array<double, kNumParams>& shift_sd = {});

// ---------------------------------------------------------------------------
// Monte Carlo

// Returns (demand_T, demand_C) as the strain extremes.  May throw gpra::Error;
// the sample is then excluded.
using DemandEvaluator = std::function<StrainExtremes(const ScenarioSample&)>;

DemandEvaluator oracle_evaluator(const PipeProblem& problem, const FdmOptions& opts = {});
DemandEvaluator surrogate_evaluator(const NetworkParams& net, const PipeProblem& problem, int n_grid = 901);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<long long> counts;
};

struct DemandStatistics {
  double mean_T = 0.0, sd_T = 0.0;
  double mean_C = 0.0, sd_C = 0.0;
  Histogram hist_T, hist_C;
};

// Sample mean, sample sd (n - 1) and fixed-width histograms over [min, max].
// Throws invalid_argument on an empty list.
DemandStatistics demand_statistics(const std::vector<StrainExtremes>& d, int bins = 50);

struct McsOptions {
  int samples = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  double max_excluded_fraction = 1e-3;
  int histogram_bins = 50;
};

struct McsResult {
  int N = 0;          // requested samples
  int valid = 0;      // samples with a demand
  long long failures_T = 0, failures_C = 0;
  double pof_T = 0.0, pof_C = 0.0;
  double se_T = 0.0, se_C = 0.0;
  std::uint64_t seed = 0;
  long long clamp_events = 0;
  std::vector<int> excluded;             // sample indices
  std::vector<std::string> exclusion_reasons;
  DemandStatistics stats;
  std::vector<ScenarioSample> samples;
  std::vector<StrainExtremes> demands;   // NaN for excluded samples

  // Normal-approximation interval on the PoF, clipped to [0, 1].
  std::array<double, 2> confidence_interval_T(double z = 1.959963984540054) const;
};

// PoF = failures / valid.  Throws evaluator_failure when more than
// max_excluded_fraction of the samples fail to evaluate.
McsResult run_mcs(const DemandEvaluator& eval, const RandomVariables& rv, const ParameterBox& box,
                  const LimitState& ls, const McsOptions& opts,
                  const std::array<double, kNumParams>& shift_sd = {});

// ---------------------------------------------------------------------------
// Sensitivity

enum class SensitivityIndex {
  relative_change,  // 100 |PoF_shift - PoF_0| / PoF_0
  shifted_pof,      // 100 PoF_shift
};

enum class FailureMode { tensile, compressive };

struct SensitivityRow {
  int param;
  int direction;  // -1 or +1
  double pof;
  double index;
};

struct SensitivityResult {
  double baseline_pof = 0.0;
  double baseline_index = 0.0;  // 100 PoF_0
  FailureMode mode = FailureMode::tensile;
  SensitivityIndex definition = SensitivityIndex::relative_change;
  std::vector<SensitivityRow> rows;  // 10 rows, parameter order, -1 before +1
};

// Common random numbers: every run reuses the baseline draws.  With PoF_0 = 0
// the relative index falls back to 100 PoF_shift.
SensitivityResult sensitivity(const DemandEvaluator& eval, const RandomVariables& rv, const ParameterBox& box,
                              const LimitState& ls, const McsOptions& opts,
                              FailureMode mode = FailureMode::tensile,
                              SensitivityIndex def = SensitivityIndex::relative_change);

std::string to_string(SensitivityIndex d);
std::string to_string(FailureMode m);

// ---------------------------------------------------------------------------
// Tables

void write_mcs_summary_csv(std::ostream& os, const McsResult& r);
void write_mcs_samples_csv(std::ostream& os, const McsResult& r, const LimitState& ls);
void write_histogram_csv(std::ostream& os, const DemandStatistics& s);
void write_sensitivity_csv(std::ostream& os, const SensitivityResult& s);

}  // namespace gpra
