#pragma once

// Run configuration read from a YAML file.  Every key is optional and falls
// back to the case-study default; unknown keys and invalid values are errors
// that name the file position.

#include <cstdint>
#include <filesystem>
#include <string>

#include "gpra/oracle.hpp"
#include "gpra/reliability.hpp"
#include "gpra/scenario.hpp"
#include "gpra/surrogate.hpp"

namespace gpra::cli {

struct NetworkConfig {
  int hidden_layers = 4;
  int neurons = 20;
  double u_scale_m = 0.1;
  double w_scale_m = 0.0;  // 0: upper delta bound of the box
};

struct TrainingConfig {
  int interior_points = 2000;
  int boundary_points = 200;
  std::uint64_t seed = 42;
  std::uint64_t validation_seed = 4242;
  LossOptions loss{};
  TrainOptions train{};
};

struct ReliabilityConfig {
  RandomVariables variables = default_variables();
  int samples = 100000;
  std::uint64_t seed = 2024;
  CapacityCase capacity_case = CapacityCase::I;
  double tensile_capacity = 0.0;      // > 0 overrides the case value
  double compressive_capacity = 0.0;  // > 0 overrides the case value
  SensitivityIndex sensitivity_index = SensitivityIndex::relative_change;
  FailureMode sensitivity_mode = FailureMode::tensile;
  int histogram_bins = 50;
  int grid_points = 901;
};

struct RunConfig {
  std::filesystem::path source;
  std::uint64_t digest = 0;  // FNV-1a of the file bytes
  PipeSpec pipe{};
  ParameterBox box{};
  NetworkConfig network{};
  TrainingConfig training{};
  ReliabilityConfig reliability{};
  FdmOptions oracle{};
  std::filesystem::path output_dir = "out";

  LimitState limit_state() const;
  double w_scale() const { return network.w_scale_m > 0.0 ? network.w_scale_m : box.hi[kDelta]; }
};

// Throws gpra::Error(ErrorKind::config) with "file:line:col: key: message".
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& name = "<config>");

}  // namespace gpra::cli
