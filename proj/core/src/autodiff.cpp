#include <cmath>
#include <vector>

#include "gpra/autodiff/reverse.hpp"
#include "gpra/error.hpp"

namespace gpra::ad {

GradResult grad(const ScalarLoss& loss, std::span<const double> theta) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(theta.size());
  for (double t : theta) vars.push_back(tape.variable(t));
  const Var out = loss(vars);
  if (!std::isfinite(out.value())) {
    throw Error(ErrorKind::non_finite, "loss is not finite at the given parameters");
  }
  const auto adj = tape.adjoints(out);
  GradResult r;
  r.value = out.value();
  r.gradient.resize(theta.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    r.gradient[i] = adj[static_cast<std::size_t>(vars[i].index())];
  }
  return r;
}

}  // namespace gpra::ad
