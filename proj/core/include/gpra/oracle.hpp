#pragma once

// Finite-difference reference solver for the pipe-soil system.
//
// Nodes x_i = i h, i = 0..n.  Unknowns are (u_i, w_i) at interior nodes,
// interleaved; the ends are fixed (u = w = 0) and w_x = 0 is imposed through
// the ghost node w_{-1} = w_1.  N is evaluated at half nodes, M at nodes:
//
//   R1_i = (N_{i+1/2} - N_{i-1/2}) / h + h(Ug_i - u_i)
//   R2_i = (M_{i+1} - 2 M_i + M_{i-1}) / h^2
//          - (N w_x|_{i+1/2} - N w_x|_{i-1/2}) / h - q(Wg_i - w_i)
//
// The ground displacement is applied in load steps with Newton iteration per
// step.  The banded Jacobian is exact (section tangents) and solved by LAPACK.

#include <iosfwd>
#include <string>
#include <vector>

#include "gpra/scenario.hpp"

namespace gpra {

struct FdmOptions {
  double spacing = 0.1;  // m
  int load_steps = 20;
  int max_newton = 50;
  double tolerance = 1e-6;  // on |R1|/Tu and |R2|/Pu
  int max_step_halvings = 6;
  double ramp_width = 0.0;  // 0: sharp block
  bool linear_springs = false;
};

struct FieldSolution {
  std::vector<double> x, u, w, u_x, w_x, w_xx, N, M, eps_top, eps_bottom;
  double eps_max_tensile = 0.0;
  double eps_min_compressive = 0.0;
  double z_extreme = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int load_steps_done = 0;
  int newton_iterations = 0;
  std::vector<double> residual_history;  // final residual per load step
};

// Discrete system for one sample; exposed so that the Jacobian can be tested.
class FdmSystem {
 public:
  FdmSystem(const PipeProblem& problem, const ScenarioSample& sample, const FdmOptions& opts);

  int nodes() const { return n_ + 1; }
  int unknowns() const { return 2 * (n_ - 1); }
  double spacing() const { return h_; }
  const SpringLaw& springs() const { return springs_; }

  // Nondimensional residual at load fraction `lambda` of the sample delta.
  std::vector<double> residual(const std::vector<double>& v, double lambda) const;
  // Residual and LAPACK band storage (kl = ku = bandwidth(), ldab = 3 bw + 1).
  std::vector<double> residual_and_band(const std::vector<double>& v, double lambda,
                                        std::vector<double>& band) const;
  static constexpr int bandwidth() { return 5; }

  FieldSolution fields(const std::vector<double>& v) const;

 private:
  const PipeProblem& problem_;
  SpringLaw springs_;
  FdmOptions opts_;
  int n_ = 0;
  double h_ = 0.0;
  double r1_scale_ = 1.0;
  double r2_scale_ = 1.0;
  std::vector<double> ug_, wg_;  // at full delta

  std::vector<double> assemble(const std::vector<double>& v, double lambda, std::vector<double>* band) const;
};

// Throws Error(no_convergence) with step and residual diagnostics on failure.
FieldSolution solve_fdm(const ScenarioSample& sample, const PipeProblem& problem,
                        const FdmOptions& opts = {});

// EI w'''' + k w = k Wg with w = w_x = 0 at both ends, elastic EI from the
// fiber grid.  `wg` holds Wg at the nodes x_i = i * spacing.
FieldSolution solve_linear_winkler(const PipeProblem& problem, double k, const std::vector<double>& wg,
                                   double spacing = 0.1);

// x,u,w,w_x,w_xx,N,M,eps_top,eps_bottom with a header row.
void write_field_csv(std::ostream& os, const FieldSolution& f);

}  // namespace gpra
