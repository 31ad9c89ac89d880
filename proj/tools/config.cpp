#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "gpra/error.hpp"

namespace gpra::cli {

namespace {

constexpr std::array<const char*, kNumParams> kBoxKeys{"delta_m", "cohesion_kpa", "friction_deg",
                                                       "unit_weight_kn_m3", "depth_m"};

[[noreturn]] void fail(const std::string& file, const YAML::Mark& m, const std::string& key, const std::string& msg) {
  std::ostringstream os;
  os << file;
  if (!m.is_null()) os << ':' << (m.line + 1) << ':' << (m.column + 1);
  os << ": " << key << ": " << msg;
  throw Error(ErrorKind::config, os.str());
}

class Map {
 public:
  Map(YAML::Node node, std::string path, const std::string& file)
      : node_(std::move(node)), path_(std::move(path)), file_(file) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(file_, node_.Mark(), path_, "expected a mapping");
  }

  bool present() const { return node_ && node_.IsMap(); }

  // Undefined (false) when the key or the whole section is absent.
  YAML::Node find(const std::string& key) {
    static const YAML::Node empty(YAML::NodeType::Map);
    if (!present()) return empty[key];
    seen_.insert(key);
    const YAML::Node& n = node_;
    return n[key];
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Map child(const std::string& key) { return Map(find(key), key_path(key), file_); }

  void number(const std::string& key, double& dst, const std::function<bool(double)>& ok = {},
              const char* rule = "") {
    const auto n = find(key);
    if (!n) return;
    double v;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
      v = n.as<double>();
    } catch (const YAML::Exception&) {
      fail(file_, n.Mark(), key_path(key), "expected a number");
    }
    if (!std::isfinite(v) || (ok && !ok(v))) fail(file_, n.Mark(), key_path(key), std::string("must be ") + rule);
    dst = v;
  }

  void integer(const std::string& key, long long& dst, long long lo, long long hi) {
    const auto n = find(key);
    if (!n) return;
    long long v;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
      v = n.as<long long>();
    } catch (const YAML::Exception&) {
      fail(file_, n.Mark(), key_path(key), "expected an integer");
    }
    if (v < lo || v > hi) {
      fail(file_, n.Mark(), key_path(key),
           "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    dst = v;
  }

  void integer(const std::string& key, int& dst, long long lo, long long hi) {
    long long v = dst;
    integer(key, v, lo, hi);
    dst = static_cast<int>(v);
  }

  void seed(const std::string& key, std::uint64_t& dst) {
    const auto n = find(key);
    if (!n) return;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
      dst = n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(file_, n.Mark(), key_path(key), "expected a non-negative integer");
    }
  }

  void boolean(const std::string& key, bool& dst) {
    const auto n = find(key);
    if (!n) return;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
      dst = n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(file_, n.Mark(), key_path(key), "expected true or false");
    }
  }

  void text(const std::string& key, std::string& dst) {
    const auto n = find(key);
    if (!n) return;
    if (!n.IsScalar()) fail(file_, n.Mark(), key_path(key), "expected a string");
    dst = n.Scalar();
  }

  template <std::size_t N>
  void numbers(const std::string& key, std::array<double, N>& dst) {
    const auto n = find(key);
    if (!n) return;
    if (!n.IsSequence() || n.size() != N) {
      fail(file_, n.Mark(), key_path(key), "expected a list of " + std::to_string(N) + " numbers");
    }
    for (std::size_t i = 0; i < N; ++i) {
      try {
        dst[i] = n[i].as<double>();
      } catch (const YAML::Exception&) {
        fail(file_, n[i].Mark(), key_path(key), "expected a number");
      }
      if (!std::isfinite(dst[i])) fail(file_, n[i].Mark(), key_path(key), "must be finite");
    }
  }

  YAML::Mark mark() const { return present() ? node_.Mark() : YAML::Mark::null_mark(); }
  const std::string& path() const { return path_; }

  // Rejects keys that were never looked up.
  void finish() const {
    if (!present()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) fail(file_, kv.first.Mark(), key_path(k), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& file_;
  std::set<std::string> seen_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto non_negative = [](double v) { return v >= 0.0; };

void parse_problem(Map m, PipeSpec& s) {
  m.number("diameter_m", s.D, positive, "> 0");
  m.number("wall_thickness_m", s.t, positive, "> 0");
  m.number("length_m", s.L, positive, "> 0");
  m.number("block_start_m", s.block_start, non_negative, ">= 0");
  m.number("block_length_m", s.block_len, positive, "> 0");
  m.number("crossing_angle_deg", s.beta_deg, [](double v) { return v > 0.0 && v <= 180.0; }, "in (0, 180]");
  m.number("pressure_pa", s.P, non_negative, ">= 0");
  m.number("temperature_change_degc", s.dT);
  m.integer("fiber_rings", s.n_r, 1, 64);
  m.integer("fiber_sectors", s.n_theta, 3, 720);
  m.number("fit_strain_max", s.fit_strain_max, positive, "> 0");
  m.finish();
}

void parse_material(Map m, SteelMaterial& mat) {
  m.number("youngs_modulus_pa", mat.E, positive, "> 0");
  m.number("yield_stress_pa", mat.sigma_y, positive, "> 0");
  m.number("ultimate_stress_pa", mat.sigma_u, positive, "> 0");
  m.number("ultimate_strain", mat.eps_u, positive, "> 0");
  m.number("thermal_expansion_per_degc", mat.alpha, non_negative, ">= 0");
  m.number("poisson_ratio", mat.nu, [](double v) { return v >= 0.0 && v < 0.5; }, "in [0, 0.5)");
  m.number("transition_sharpness", mat.R, positive, "> 0");
  m.number("blend_scale", mat.omega, positive, "> 0");
  m.finish();
}

void parse_soil(Map m, SoilOptions& s) {
  m.number("friction_factor", s.friction_factor, positive, "> 0");
  m.number("axial_yield_disp_m", s.axial_yield_disp, positive, "> 0");
  m.number("lateral_yield_disp_m", s.lateral_yield_disp, non_negative, ">= 0");
  m.number("tanh_steepness", s.k_smooth, positive, "> 0");
  m.finish();
}

void parse_box(Map m, ParameterBox& b, const std::string& file) {
  for (int p = 0; p < kNumParams; ++p) {
    std::array<double, 2> r{b.lo[static_cast<std::size_t>(p)], b.hi[static_cast<std::size_t>(p)]};
    const auto node = m.find(kBoxKeys[static_cast<std::size_t>(p)]);
    m.numbers(kBoxKeys[static_cast<std::size_t>(p)], r);
    if (!(r[0] < r[1])) fail(file, node ? node.Mark() : m.mark(), m.key_path(kBoxKeys[static_cast<std::size_t>(p)]), "needs lo < hi");
    if (p != kDelta && p != kFriction && r[0] <= 0.0) {
      fail(file, node.Mark(), m.key_path(kBoxKeys[static_cast<std::size_t>(p)]), "lower bound must be > 0");
    }
    b.lo[static_cast<std::size_t>(p)] = r[0];
    b.hi[static_cast<std::size_t>(p)] = r[1];
  }
  m.finish();
}

void parse_network(Map m, NetworkConfig& n) {
  m.integer("hidden_layers", n.hidden_layers, 1, 64);
  m.integer("neurons", n.neurons, 1, 4096);
  m.number("u_scale_m", n.u_scale_m, positive, "> 0");
  m.number("w_scale_m", n.w_scale_m, non_negative, ">= 0");
  m.finish();
}

void parse_training(Map m, TrainingConfig& t) {
  m.integer("interior_points", t.interior_points, 1, 10'000'000);
  m.integer("boundary_points", t.boundary_points, 1, 10'000'000);
  m.seed("seed", t.seed);
  m.seed("validation_seed", t.validation_seed);
  m.number("ramp_width_m", t.loss.ramp_width, non_negative, ">= 0");
  m.numbers("loss_weights", t.loss.weights);
  m.boolean("nondimensional", t.loss.nondimensional);
  auto& o = t.train.optimizer;
  m.integer("adam_steps", o.adam_steps, 0, 100'000'000);
  m.number("adam_learning_rate", o.adam_lr, positive, "> 0");
  m.integer("max_iterations", o.max_iterations, 0, 100'000'000);
  m.number("relative_tolerance", o.rel_tol, non_negative, ">= 0");
  m.integer("lbfgs_memory", o.lbfgs_memory, 1, 1000);
  m.integer("max_line_search", o.max_line_search, 1, 1000);
  m.integer("log_every", o.log_every, 1, 100'000'000);
  m.integer("load_stages", t.train.load_stages, 1, 1000);
  m.integer("stage_iterations", t.train.stage_iterations, 0, 100'000'000);
  m.finish();
}

void parse_reliability(Map m, ReliabilityConfig& r, const std::string& file) {
  m.integer("samples", r.samples, 1, 100'000'000);
  m.seed("seed", r.seed);
  {
    std::string c = r.capacity_case == CapacityCase::I ? "I" : "II";
    const auto node = m.find("capacity_case");
    m.text("capacity_case", c);
    if (c == "I") {
      r.capacity_case = CapacityCase::I;
    } else if (c == "II") {
      r.capacity_case = CapacityCase::II;
    } else {
      fail(file, node.Mark(), m.key_path("capacity_case"), "expected I or II");
    }
  }
  m.number("tensile_capacity", r.tensile_capacity, non_negative, ">= 0");
  m.number("compressive_capacity", r.compressive_capacity, non_negative, ">= 0");
  {
    std::string s = to_string(r.sensitivity_index);
    const auto node = m.find("sensitivity_index");
    m.text("sensitivity_index", s);
    if (s == "relative_change") {
      r.sensitivity_index = SensitivityIndex::relative_change;
    } else if (s == "shifted_pof") {
      r.sensitivity_index = SensitivityIndex::shifted_pof;
    } else {
      fail(file, node.Mark(), m.key_path("sensitivity_index"), "expected relative_change or shifted_pof");
    }
  }
  {
    std::string s = to_string(r.sensitivity_mode);
    const auto node = m.find("sensitivity_mode");
    m.text("sensitivity_mode", s);
    if (s == "tensile") {
      r.sensitivity_mode = FailureMode::tensile;
    } else if (s == "compressive") {
      r.sensitivity_mode = FailureMode::compressive;
    } else {
      fail(file, node.Mark(), m.key_path("sensitivity_mode"), "expected tensile or compressive");
    }
  }
  m.integer("histogram_bins", r.histogram_bins, 1, 100000);
  m.integer("grid_points", r.grid_points, 2, 1'000'000);
  auto vars = m.child("variables");
  for (int p = 0; p < kNumParams; ++p) {
    auto v = vars.child(kBoxKeys[static_cast<std::size_t>(p)]);
    auto& spec = r.variables[static_cast<std::size_t>(p)];
    v.number("mean", spec.mean);
    v.number("sd", spec.sd, positive, "> 0");
    v.finish();
  }
  vars.finish();
  m.finish();
}

void parse_oracle(Map m, FdmOptions& o) {
  m.number("spacing_m", o.spacing, positive, "> 0");
  m.integer("load_steps", o.load_steps, 1, 100000);
  m.integer("max_newton", o.max_newton, 1, 100000);
  m.number("tolerance", o.tolerance, positive, "> 0");
  m.integer("max_step_halvings", o.max_step_halvings, 0, 60);
  m.number("ramp_width_m", o.ramp_width, non_negative, ">= 0");
  m.boolean("linear_springs", o.linear_springs);
  m.finish();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

LimitState RunConfig::limit_state() const {
  auto ls = strain_capacities(pipe, reliability.capacity_case);
  if (reliability.tensile_capacity > 0.0) ls.eps_cT = reliability.tensile_capacity;
  if (reliability.compressive_capacity > 0.0) ls.eps_cC = reliability.compressive_capacity;
  return ls;
}

RunConfig parse_config(const std::string& text, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(name, e.mark, "<syntax>", e.msg);
  }
  RunConfig c;
  c.source = name;
  c.digest = fnv1a(text);
  Map top(root, "", name);
  parse_problem(top.child("problem"), c.pipe);
  parse_material(top.child("material"), c.pipe.material);
  parse_soil(top.child("soil"), c.pipe.soil);
  parse_box(top.child("box"), c.box, name);
  parse_network(top.child("network"), c.network);
  parse_training(top.child("training"), c.training);
  parse_reliability(top.child("reliability"), c.reliability, name);
  parse_oracle(top.child("oracle"), c.oracle);
  {
    auto out = top.child("output");
    std::string dir = c.output_dir.string();
    out.text("directory", dir);
    c.output_dir = dir;
    out.finish();
  }
  top.finish();

  // Cross-field checks through the library validators.
  if (!(c.pipe.t < 0.5 * c.pipe.D)) {
    fail(name, top.child("problem").mark(), "problem.wall_thickness_m", "must be less than half the diameter");
  }
  if (c.pipe.block_start + c.pipe.block_len > c.pipe.L) {
    fail(name, top.child("problem").mark(), "problem.block_length_m", "block must end inside the pipe length");
  }
  try {
    c.pipe.material.validate();
  } catch (const Error& e) {
    fail(name, YAML::Mark::null_mark(), "material", e.what());
  }
  try {
    c.limit_state().validate();
  } catch (const Error& e) {
    fail(name, YAML::Mark::null_mark(), "reliability", e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::config, path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  auto c = parse_config(ss.str(), path.string());
  c.source = path;
  return c;
}

}  // namespace gpra::cli
