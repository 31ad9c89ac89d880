#include "commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "gpra/error.hpp"
#include "gpra/parallel.hpp"

namespace gpra::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Flags {
  std::string config;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::string evaluator = "surrogate";
  int threads = 0;
  std::string sample;
};

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot write " + p.string());
  return os;
}

fs::path output_dir(const Flags& f, const RunConfig& c) {
  fs::path d = f.out.empty() ? c.output_dir : fs::path(f.out);
  fs::create_directories(d);
  return d;
}

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& c, int threads) : t0_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["version"] = kVersion;
    j_["config"] = c.source.string();
    j_["config_digest"] = hex(c.digest);
    j_["threads"] = threads;
  }
  nlohmann::json& operator[](const char* k) { return j_[k]; }
  void write(const fs::path& p) {
    j_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    auto os = open_out(p);
    os << j_.dump(2) << '\n';
  }

 private:
  nlohmann::json j_;
  std::chrono::steady_clock::time_point t0_;
};

NetworkParams load_model(const Flags& f, const RunConfig& c, const PipeProblem& problem) {
  if (f.model.empty()) throw Error(ErrorKind::config, "--model is required");
  auto net = load_weights(f.model);
  const bool same = net.problem_digest == problem.digest() && net.box.lo == c.box.lo && net.box.hi == c.box.hi &&
                    net.length == problem.length();
  if (!same) throw Error(ErrorKind::config, "model trained for a different problem (" + f.model + ")");
  return net;
}

ScenarioSample parse_sample(const std::string& text, const RunConfig& c) {
  ScenarioSample s;
  for (int p = 0; p < kNumParams; ++p) s.set(p, c.reliability.variables[static_cast<std::size_t>(p)].mean);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::config, "--sample: expected name=value, got '" + item + "'");
    const auto key = item.substr(0, eq);
    int idx = -1;
    for (int p = 0; p < kNumParams; ++p) {
      if (param_name(p) == key) idx = p;
    }
    if (idx < 0) throw Error(ErrorKind::config, "--sample: unknown variable '" + key + "' (delta, c, phi, gamma, H)");
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("");
      s.set(idx, v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "--sample: bad value for " + key);
    }
  }
  return s;
}

DemandEvaluator make_evaluator(const Flags& f, const RunConfig& c, const PipeProblem& problem,
                               std::optional<NetworkParams>& net, Manifest& m) {
  if (f.evaluator == "oracle") {
    m["evaluator"] = "oracle";
    return oracle_evaluator(problem, c.oracle);
  }
  net = load_model(f, c, problem);
  m["evaluator"] = "surrogate";
  m["model"] = f.model;
  m["model_digest"] = hex(weights_digest(*net));
  return surrogate_evaluator(*net, problem, c.reliability.grid_points);
}

McsOptions mcs_options(const Flags& f, const RunConfig& c) {
  McsOptions o;
  o.samples = f.samples.value_or(c.reliability.samples);
  o.seed = f.seed.value_or(c.reliability.seed);
  o.threads = f.threads;
  o.histogram_bins = c.reliability.histogram_bins;
  return o;
}

int cmd_train(const Flags& f, const RunConfig& c, std::ostream& out) {
  const PipeProblem problem(c.pipe);
  const auto dir = output_dir(f, c);
  const fs::path model = f.model.empty() ? dir / "model.gpra" : fs::path(f.model);
  const auto seed = f.seed.value_or(c.training.seed);
  auto net = NetworkParams::xavier(make_layer_sizes(c.network.hidden_layers, c.network.neurons), c.box,
                                   problem.length(), seed);
  net.u_scale = c.network.u_scale_m;
  net.w_scale = c.w_scale();
  net.problem_digest = problem.digest();
  const auto set = sample_collocation(c.training.interior_points, c.training.boundary_points, c.box,
                                      problem.length(), seed);
  LossEvaluator loss(problem, set, c.box, c.training.loss, f.threads);
  Manifest m("train", c, f.threads);
  const auto res = train(net, loss, c.training.train);
  save_weights(model, res.params);
  {
    auto os = open_out(dir / "loss_history.csv");
    write_loss_history_csv(os, res.report);
  }
  const auto& t = res.report.terminal;
  m["seed"] = seed;
  m["model"] = model.string();
  m["model_digest"] = hex(weights_digest(res.params));
  m["iterations"] = res.report.iterations;
  m["evaluations"] = res.report.evaluations;
  m["stop_reason"] = to_string(res.report.reason);
  m["loss"] = {{"L1", t.L1}, {"L2", t.L2}, {"LBC", t.LBC}, {"total", t.total}};
  m.write(dir / "manifest_train.json");
  out << "train: " << to_string(res.report.reason) << " after " << res.report.iterations << " iterations, loss "
      << std::setprecision(6) << t.total << " (L1 " << t.L1 << ", L2 " << t.L2 << ", LBC " << t.LBC << ")\n"
      << "model: " << model.string() << '\n';
  return res.report.converged() ? kOk : kNotConverged;
}

int cmd_solve(const Flags& f, const RunConfig& c, std::ostream& out) {
  const PipeProblem problem(c.pipe);
  const auto dir = output_dir(f, c);
  const auto s = parse_sample(f.sample, c);
  Manifest m("solve", c, f.threads);
  FieldSolution sol;
  if (f.evaluator == "oracle") {
    m["evaluator"] = "oracle";
    sol = solve_fdm(s, problem, c.oracle);
  } else {
    const auto net = load_model(f, c, problem);
    m["evaluator"] = "surrogate";
    m["model_digest"] = hex(weights_digest(net));
    if (!c.box.contains(s)) throw Error(ErrorKind::config, "--sample lies outside the parameter box");
    sol = predict_fields(net, s, problem, c.reliability.grid_points);
  }
  {
    auto os = open_out(dir / "fields.csv");
    write_field_csv(os, sol);
  }
  nlohmann::json js;
  for (int p = 0; p < kNumParams; ++p) js[std::string(param_name(p))] = s.get(p);
  m["sample"] = js;
  m["eps_max_tensile"] = sol.eps_max_tensile;
  m["eps_min_compressive"] = sol.eps_min_compressive;
  m.write(dir / "manifest_solve.json");
  out << std::setprecision(6) << "tensile extreme " << 100.0 * sol.eps_max_tensile << " %, compressive extreme "
      << 100.0 * sol.eps_min_compressive << " %\n";
  return kOk;
}

int cmd_mcs(const Flags& f, const RunConfig& c, std::ostream& out) {
  const PipeProblem problem(c.pipe);
  const auto dir = output_dir(f, c);
  Manifest m("mcs", c, f.threads);
  std::optional<NetworkParams> net;
  const auto eval = make_evaluator(f, c, problem, net, m);
  const auto opts = mcs_options(f, c);
  const auto ls = c.limit_state();
  const auto r = run_mcs(eval, c.reliability.variables, c.box, ls, opts);
  {
    auto os = open_out(dir / "mcs_summary.csv");
    write_mcs_summary_csv(os, r);
  }
  {
    auto os = open_out(dir / "mcs_samples.csv");
    write_mcs_samples_csv(os, r, ls);
  }
  {
    auto os = open_out(dir / "mcs_histogram.csv");
    write_histogram_csv(os, r.stats);
  }
  m["seed"] = opts.seed;
  m["samples"] = opts.samples;
  m["capacity"] = {{"case", ls.label}, {"tensile", ls.eps_cT}, {"compressive", ls.eps_cC}};
  m["excluded"] = r.excluded.size();
  m["clamp_events"] = r.clamp_events;
  m["pof_tensile"] = r.pof_T;
  m["pof_compressive"] = r.pof_C;
  m.write(dir / "manifest_mcs.json");
  out << std::setprecision(6) << "N " << r.N << " valid " << r.valid << "\n"
      << "tensile PoF " << 100.0 * r.pof_T << " % (SE " << 100.0 * r.se_T << " %), demand mean "
      << 100.0 * r.stats.mean_T << " % sd " << 100.0 * r.stats.sd_T << " %\n"
      << "compressive PoF " << 100.0 * r.pof_C << " % (SE " << 100.0 * r.se_C << " %), demand mean "
      << 100.0 * r.stats.mean_C << " % sd " << 100.0 * r.stats.sd_C << " %\n";
  return kOk;
}

int cmd_sensitivity(const Flags& f, const RunConfig& c, std::ostream& out) {
  const PipeProblem problem(c.pipe);
  const auto dir = output_dir(f, c);
  Manifest m("sensitivity", c, f.threads);
  std::optional<NetworkParams> net;
  const auto eval = make_evaluator(f, c, problem, net, m);
  const auto opts = mcs_options(f, c);
  const auto r = sensitivity(eval, c.reliability.variables, c.box, c.limit_state(), opts,
                             c.reliability.sensitivity_mode, c.reliability.sensitivity_index);
  {
    auto os = open_out(dir / "sensitivity.csv");
    write_sensitivity_csv(os, r);
  }
  m["seed"] = opts.seed;
  m["samples"] = opts.samples;
  m["index"] = to_string(r.definition);
  m["mode"] = to_string(r.mode);
  m["baseline_pof"] = r.baseline_pof;
  m.write(dir / "manifest_sensitivity.json");
  out << std::setprecision(6) << "baseline PoF " << 100.0 * r.baseline_pof << " %\n";
  for (const auto& row : r.rows) {
    out << std::setw(6) << param_name(row.param) << (row.direction < 0 ? " -sd" : " +sd") << "  PoF "
        << std::setw(10) << 100.0 * row.pof << " %  index " << row.index << '\n';
  }
  return kOk;
}

int cmd_validate(const Flags& f, const RunConfig& c, std::ostream& out) {
  const PipeProblem problem(c.pipe);
  const auto dir = output_dir(f, c);
  Manifest m("validate", c, f.threads);
  const auto net = load_model(f, c, problem);
  const auto seed = f.seed.value_or(c.training.validation_seed);
  const auto train_set = sample_collocation(c.training.interior_points, c.training.boundary_points, c.box,
                                            problem.length(), net.seed);
  const auto test_set = sample_collocation(c.training.interior_points, c.training.boundary_points, c.box,
                                           problem.length(), seed);
  const auto lt = LossEvaluator(problem, train_set, c.box, c.training.loss, f.threads).evaluate(net);
  const auto lv = LossEvaluator(problem, test_set, c.box, c.training.loss, f.threads).evaluate(net);
  {
    auto os = open_out(dir / "validation.csv");
    os << std::setprecision(17) << "set,seed,L1,L2,LBC,total\n";
    os << "train," << net.seed << ',' << lt.L1 << ',' << lt.L2 << ',' << lt.LBC << ',' << lt.total << '\n';
    os << "test," << seed << ',' << lv.L1 << ',' << lv.L2 << ',' << lv.LBC << ',' << lv.total << '\n';
  }
  m["model_digest"] = hex(weights_digest(net));
  m["validation_seed"] = seed;
  m["train_total"] = lt.total;
  m["test_total"] = lv.total;
  m.write(dir / "manifest_validate.json");
  out << std::setprecision(6) << "train loss " << lt.total << ", test loss " << lv.total << " (ratio "
      << lv.total / lt.total << ")\n";
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::no_convergence:
    case ErrorKind::evaluator_failure: return kOracleFailure;
    default: return kUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strain demand and reliability of buried pipes under ground displacement"};
  app.require_subcommand(1);
  Flags f;
  auto add_common = [&](CLI::App* sub, bool model, bool evaluator, bool samples) {
    sub->add_option("--config", f.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (default: output.directory)");
    sub->add_option("--threads", f.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", f.seed, "override the seed from the config");
    if (model) sub->add_option("--model", f.model, "weight file");
    if (evaluator) {
      sub->add_option("--evaluator", f.evaluator, "surrogate or oracle")
          ->check(CLI::IsMember({"surrogate", "oracle"}));
    }
    if (samples) sub->add_option("--samples", f.samples, "Monte-Carlo sample count")->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "train the surrogate");
  add_common(train, true, false, false);
  auto* solve = app.add_subcommand("solve", "fields for one sample");
  add_common(solve, true, true, false);
  solve->add_option("--sample", f.sample, "e.g. delta=1.2,c=45,phi=25,gamma=19,H=1.45 (default: means)");
  auto* mcs = app.add_subcommand("mcs", "Monte-Carlo probability of failure");
  add_common(mcs, true, true, true);
  auto* sens = app.add_subcommand("sensitivity", "mean +- sd perturbation study");
  add_common(sens, true, true, true);
  auto* validate = app.add_subcommand("validate", "loss terms on a fresh collocation set");
  add_common(validate, true, false, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    const auto cfg = load_config(f.config);
    if (*train) return cmd_train(f, cfg, out);
    if (*solve) return cmd_solve(f, cfg, out);
    if (*mcs) return cmd_mcs(f, cfg, out);
    if (*sens) return cmd_sensitivity(f, cfg, out);
    if (*validate) return cmd_validate(f, cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace gpra::cli
