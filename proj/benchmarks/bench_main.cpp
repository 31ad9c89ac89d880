#include <benchmark/benchmark.h>

#include "gpra/oracle.hpp"
#include "gpra/reliability.hpp"
#include "gpra/section.hpp"
#include "gpra/surrogate.hpp"

namespace {

using namespace gpra;

ParameterBox desk_box() {
  auto box = ParameterBox::full();
  box.lo[kDelta] = 0.5;
  box.hi[kDelta] = 1.5;
  return box;
}

const PipeProblem& problem() {
  static const PipeProblem p(PipeSpec::biaxial_case());
  return p;
}

void BM_SectionForces(benchmark::State& state) {
  const auto& p = problem();
  double e = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(section_forces(e, 0.002, 0.01, p.grid(), p.law(), p.eps_initial()));
    e += 1e-12;
  }
}
BENCHMARK(BM_SectionForces);

// Loss and gradient for the desk network; range(0) = interior points.
void BM_LossGradient(benchmark::State& state) {
  const auto& p = problem();
  const int ni = static_cast<int>(state.range(0));
  const auto set = sample_collocation(ni, ni / 10, desk_box(), p.length(), 42);
  const auto net = NetworkParams::xavier(make_layer_sizes(4, 20), desk_box(), p.length(), 42);
  LossEvaluator ev(p, set, desk_box());
  std::vector<double> g(net.num_params());
  for (auto _ : state) benchmark::DoNotOptimize(ev.evaluate(net, g));
  state.SetItemsProcessed(state.iterations() * ni);
}
BENCHMARK(BM_LossGradient)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PredictExtremes(benchmark::State& state) {
  const auto& p = problem();
  const auto net = NetworkParams::xavier(make_layer_sizes(4, 20), desk_box(), p.length(), 42);
  ScenarioSample s;
  for (auto _ : state) benchmark::DoNotOptimize(predict_strain_extremes(net, s, p, 901));
}
BENCHMARK(BM_PredictExtremes)->Unit(benchmark::kMicrosecond);

void BM_OracleSolve(benchmark::State& state) {
  const auto& p = problem();
  ScenarioSample s;
  for (auto _ : state) benchmark::DoNotOptimize(solve_fdm(s, p));
}
BENCHMARK(BM_OracleSolve)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
BENCHMARK_MAIN();
