#pragma once

// Parametric physics-informed surrogate.
//
// A fully connected tanh network maps the normalised inputs
// (x, delta, c, phi, gamma, H) to raw outputs (y_u, y_w); the displacements are
// u = u_scale y_u and w = w_scale y_w.  Training minimises the mean squared
// residuals of the governing equations at interior collocation points plus the
// fixed-end conditions u = w = w_x = 0 at boundary points.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gpra/oracle.hpp"
#include "gpra/optimize.hpp"
#include "gpra/scenario.hpp"

namespace gpra {

struct NetworkParams {
  std::vector<int> layer_sizes;      // {6, hidden..., 2}
  std::vector<Eigen::MatrixXd> W;    // W[l] is layer_sizes[l+1] x layer_sizes[l]
  std::vector<Eigen::VectorXd> b;
  ParameterBox box{};                // normalisation of the five parameters
  double length = 90.0;              // x is normalised over [0, length]
  double u_scale = 0.1;              // m
  double w_scale = 2.0;              // m
  std::uint64_t seed = 0;
  std::uint64_t problem_digest = 0;

  // Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.
  static NetworkParams xavier(std::vector<int> layer_sizes, const ParameterBox& box, double length,
                              std::uint64_t seed);
  static NetworkParams zeros(std::vector<int> layer_sizes, const ParameterBox& box, double length);

  std::size_t num_params() const;
  // Layer order; each layer's weights row-major, then its biases.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> theta);

  // Throws shape_mismatch or non_finite.
  void validate() const;

  NormalizedInput normalize(double x, const ScenarioSample& s) const {
    return normalize_inputs(x, s, box, length);
  }
};

std::vector<int> make_layer_sizes(int hidden_layers, int neurons);

// Generic forward pass.  theta is the flattened parameter vector of `net`
// (which only supplies the shape and scales); P is its scalar type and S the
// input type (P itself or a jet over P).  Returns (u, w) in metres.
template <class P, class S>
std::array<S, 2> forward(const NetworkParams& net, std::span<const P> theta, const std::array<S, 6>& z) {
  using std::tanh;
  const auto& sz = net.layer_sizes;
  if (sz.size() < 2 || sz.front() != 6 || sz.back() != 2) {
    throw Error(ErrorKind::shape_mismatch, "network must map 6 inputs to 2 outputs");
  }
  if (theta.size() != net.num_params()) throw Error(ErrorKind::shape_mismatch, "parameter vector size");
  std::vector<S> h(z.begin(), z.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sz.size(); ++l) {
    const int nin = sz[l], nout = sz[l + 1];
    std::vector<S> a(static_cast<std::size_t>(nout));
    const std::size_t boff = off + static_cast<std::size_t>(nin * nout);
    for (int o = 0; o < nout; ++o) {
      S acc = S(theta[boff + static_cast<std::size_t>(o)]);
      for (int i = 0; i < nin; ++i) {
        acc = acc + h[static_cast<std::size_t>(i)] * theta[off + static_cast<std::size_t>(o * nin + i)];
      }
      a[static_cast<std::size_t>(o)] = (l + 2 < sz.size()) ? tanh(acc) : acc;
    }
    off = boff + static_cast<std::size_t>(nout);
    h = std::move(a);
  }
  return {h[0] * net.u_scale, h[1] * net.w_scale};
}

// (u, w) at one physical point.
std::array<double, 2> forward(const NetworkParams& net, double x, const ScenarioSample& s);

// ----------------------------------------------------------------------------
// Collocation

struct CollocationSet {
  // Rows: x, delta, c, phi, gamma, H in physical units.
  Eigen::Matrix<double, 6, Eigen::Dynamic> interior;
  Eigen::Matrix<double, 6, Eigen::Dynamic> boundary;
  std::uint64_t seed = 0;

  int n_interior() const { return static_cast<int>(interior.cols()); }
  int n_boundary() const { return static_cast<int>(boundary.cols()); }
};

// 6-D Latin hypercube over [0, L] x box for interior points; 5-D hypercube
// over the box for boundary points with x alternating between 0 and L.
CollocationSet sample_collocation(int n_interior, int n_boundary, const ParameterBox& box, double L,
                                  std::uint64_t seed);

// One point per equal-width stratum in each of the five parameters.
std::vector<ScenarioSample> latin_hypercube(int n, const ParameterBox& box, std::uint64_t seed);

// ----------------------------------------------------------------------------
// Loss

struct LossOptions {
  double ramp_width = 0.5;                   // m; cosine ramp at the block edges
  std::array<double, 3> weights{1.0, 1.0, 1.0};  // L1, L2, LBC in the objective
  bool nondimensional = true;                // R1 / Tu_ref, R2 / Pu_ref
  double load_factor = 1.0;                  // scales the ground displacement
};

struct LossTerms {
  double L1 = 0.0;
  double L2 = 0.0;
  double LBC = 0.0;
  double total = 0.0;  // L1 + L2 + LBC
};

// Batched evaluator of the loss and its parameter gradient.  Points are
// processed in fixed chunks reduced in chunk order, so results are identical
// for every thread count.
class LossEvaluator {
 public:
  LossEvaluator(const PipeProblem& problem, const CollocationSet& set, const ParameterBox& box,
                const LossOptions& opts = {}, int threads = 1);

  // Objective = weights . (L1, L2, LBC); `grad` (if non-empty) receives its
  // gradient with respect to net.flatten().
  LossTerms evaluate(const NetworkParams& net, std::span<double> grad = {}) const;
  double objective(const LossTerms& t) const;
  void set_load_factor(double f) { opts_.load_factor = f; }

  double residual_scale_axial() const { return tu_ref_; }
  double residual_scale_lateral() const { return pu_ref_; }
  const LossOptions& options() const { return opts_; }

  struct Point {
    NormalizedInput z;
    PointContext ctx;
  };

 private:
  const PipeProblem& problem_;
  LossOptions opts_;
  int threads_;
  double tu_ref_ = 1.0, pu_ref_ = 1.0;
  std::vector<Point> interior_;
  std::vector<NormalizedInput> boundary_;
};

// Loss via the fast evaluator.
LossTerms loss_total(const NetworkParams& net, const CollocationSet& set, const PipeProblem& problem,
                     const LossOptions& opts = {});

// Loss through the generic path (scenario::residuals on jets over reverse-mode
// scalars); slow, used to cross-check the fast evaluator.  Fills `grad` when
// non-empty.
LossTerms loss_total_reference(const NetworkParams& net, const CollocationSet& set, const PipeProblem& problem,
                               const LossOptions& opts = {}, std::span<double> grad = {});

// ----------------------------------------------------------------------------
// Training

struct LossRecord {
  int iteration;
  double load_factor;
  LossTerms terms;
};

struct TrainReport {
  int iterations = 0;
  int evaluations = 0;
  std::vector<LossRecord> history;
  LossTerms terminal;
  double best_objective = 0.0;
  double wall_seconds = 0.0;
  StopReason reason = StopReason::iteration_cap;
  bool converged() const { return reason == StopReason::converged; }
};

struct TrainResult {
  NetworkParams params;
  TrainReport report;
};

// Load continuation: stage k of `load_stages` trains at load factor k / load_stages,
// every stage but the last for at most `stage_iterations` L-BFGS iterations.
// The Adam warm-up runs in the first stage only.
struct TrainOptions {
  OptimizerConfig optimizer{};
  int load_stages = 1;
  int stage_iterations = 500;
};

TrainResult train(const NetworkParams& theta0, LossEvaluator& loss, const TrainOptions& opts);

void write_loss_history_csv(std::ostream& os, const TrainReport& r);

// ----------------------------------------------------------------------------
// Prediction

struct StrainExtremes {
  double tensile = 0.0;      // max strain over the grid at +-z_max
  double compressive = 0.0;  // min strain over the grid
};

StrainExtremes predict_strain_extremes(const NetworkParams& net, const ScenarioSample& s,
                                       const PipeProblem& problem, int n_grid = 901);

// Many samples at once; results in sample order for any thread count.
std::vector<StrainExtremes> predict_strain_extremes(const NetworkParams& net,
                                                    std::span<const ScenarioSample> samples,
                                                    const PipeProblem& problem, int n_grid = 901,
                                                    int threads = 1);

// Fields on a uniform grid of n_grid nodes, N and M from the section law.
FieldSolution predict_fields(const NetworkParams& net, const ScenarioSample& s, const PipeProblem& problem,
                             int n_grid = 901);

// ----------------------------------------------------------------------------
// Weight file

inline constexpr std::uint32_t kWeightFormatVersion = 1;

void write_weights(std::ostream& os, const NetworkParams& net);
NetworkParams read_weights(std::istream& is);
void save_weights(const std::filesystem::path& path, const NetworkParams& net);
NetworkParams load_weights(const std::filesystem::path& path);
// FNV-1a over the serialised bytes.
std::uint64_t weights_digest(const NetworkParams& net);

}  // namespace gpra
