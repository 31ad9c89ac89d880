#pragma once

// Unconstrained minimisation: Adam warm-up followed by L-BFGS with a
// strong-Wolfe line search.

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gpra {

// Returns f(x) and writes the gradient into g (same size as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> g)>;

struct OptimizerConfig {
  int adam_steps = 2000;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int max_iterations = 40000;  // L-BFGS iterations after the warm-up
  double rel_tol = 1e-8;       // on the change of f between iterations
  int lbfgs_memory = 20;
  int max_line_search = 25;
  int log_every = 10;
};

enum class StopReason { converged, iteration_cap, non_finite, line_search };

std::string to_string(StopReason r);

struct OptimizeResult {
  std::vector<double> x;  // best point seen
  double f = 0.0;         // f at x
  int iterations = 0;     // Adam steps + L-BFGS iterations
  int evaluations = 0;
  StopReason reason = StopReason::iteration_cap;
};

// Called every log_every iterations and at the end with (iteration, x, f).
using IterationCallback = std::function<void(int, std::span<const double>, double)>;

// Throws Error(diverged) when f(x0) is not finite.
OptimizeResult minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& cfg,
                        const IterationCallback& on_log = {});

}  // namespace gpra
