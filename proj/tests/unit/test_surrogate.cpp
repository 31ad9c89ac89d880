#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gpra/error.hpp"
#include "gpra/surrogate.hpp"

namespace gpra {
namespace {

ParameterBox desk_box() {
  auto box = ParameterBox::full();
  box.lo[kDelta] = 0.5;
  box.hi[kDelta] = 1.5;
  return box;
}

NetworkParams small_net(std::uint64_t seed = 7) {
  auto net = NetworkParams::xavier(make_layer_sizes(2, 8), desk_box(), 90.0, seed);
  // nonzero biases so that every code path sees them
  auto theta = net.flatten();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += 0.05 * std::sin(1.0 + 3.0 * i);
  net.unflatten(theta);
  net.w_scale = 1.5;
  return net;
}

TEST(Network, ZeroNetworkGivesZero) {
  const auto net = NetworkParams::zeros(make_layer_sizes(3, 5), desk_box(), 90.0);
  ScenarioSample s;
  for (double x : {0.0, 33.0, 90.0}) {
    const auto y = forward(net, x, s);
    EXPECT_EQ(y[0], 0.0);
    EXPECT_EQ(y[1], 0.0);
  }
}

TEST(Network, FlattenRoundTripAndShape) {
  auto net = small_net();
  EXPECT_EQ(net.num_params(), std::size_t(6 * 8 + 8 + 8 * 8 + 8 + 8 * 2 + 2));
  const auto theta = net.flatten();
  auto other = NetworkParams::zeros(net.layer_sizes, net.box, net.length);
  other.unflatten(theta);
  EXPECT_EQ(other.flatten(), theta);
  EXPECT_THROW(other.unflatten(std::vector<double>(3, 0.0)), Error);
  net.W[1](0, 0) = NAN;
  EXPECT_THROW(net.validate(), Error);
}

TEST(Network, Deterministic) {
  const auto net = small_net();
  ScenarioSample s;
  s.delta = 0.9;
  const auto a = forward(net, 41.3, s);
  const auto b = forward(net, 41.3, s);
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
}

TEST(Network, JetDerivativesMatchFiniteDifferences) {
  const auto net = small_net();
  const auto theta = net.flatten();
  ScenarioSample s;
  s.delta = 1.2;
  const auto z = net.normalize(37.0, s);
  std::array<ad::Jet<double, 4>, 6> zj;
  for (int i = 0; i < 6; ++i) zj[i] = ad::Jet<double, 4>(z[i]);
  zj[0] = ad::Jet<double, 4>::variable(z[0]);
  const auto y = forward<double, ad::Jet<double, 4>>(net, theta, zj);

  auto at = [&](double dz) {
    auto zz = z;
    zz[0] += dz;
    return forward<double, double>(net, theta, zz);
  };
  const double h = 1e-4;
  for (int o = 0; o < 2; ++o) {
    const double d1 = (at(h)[o] - at(-h)[o]) / (2 * h);
    const double d2 = (at(h)[o] - 2 * at(0)[o] + at(-h)[o]) / (h * h);
    EXPECT_NEAR(y[o][1], d1, 1e-6 * std::max(1e-3, std::abs(d1)));
    EXPECT_NEAR(2 * y[o][2], d2, 1e-4 * std::max(1e-2, std::abs(d2)));
  }
}

TEST(Network, WrongShapeThrows) {
  EXPECT_THROW(NetworkParams::zeros({5, 4, 2}, desk_box(), 90.0), Error);
  auto net = NetworkParams::zeros({6, 4, 2}, desk_box(), 90.0);
  const std::vector<double> theta(net.num_params() + 1, 0.0);
  const NormalizedInput z{};
  EXPECT_THROW((forward<double, double>(net, theta, z)), Error);
}

TEST(Collocation, TwoPointHypercubeCoversBothHalves) {
  const auto box = desk_box();
  const auto set = sample_collocation(2, 2, box, 90.0, 3);
  std::array<double, 6> lo{0.0, box.lo[0], box.lo[1], box.lo[2], box.lo[3], box.lo[4]};
  std::array<double, 6> hi{90.0, box.hi[0], box.hi[1], box.hi[2], box.hi[3], box.hi[4]};
  for (int r = 0; r < 6; ++r) {
    const double mid = 0.5 * (lo[r] + hi[r]);
    EXPECT_NE(set.interior(r, 0) < mid, set.interior(r, 1) < mid) << r;
  }
}

TEST(Collocation, ExactlyOnePointPerStratum) {
  const auto box = desk_box();
  const int n = 1000;
  const auto set = sample_collocation(n, 100, box, 90.0, 11);
  std::array<double, 6> lo{0.0, box.lo[0], box.lo[1], box.lo[2], box.lo[3], box.lo[4]};
  std::array<double, 6> hi{90.0, box.hi[0], box.hi[1], box.hi[2], box.hi[3], box.hi[4]};
  for (int r = 0; r < 6; ++r) {
    std::vector<int> count(n, 0);
    for (int j = 0; j < n; ++j) {
      const double u = (set.interior(r, j) - lo[r]) / (hi[r] - lo[r]);
      ASSERT_GE(u, 0.0);
      ASSERT_LE(u, 1.0);
      ++count[std::min(n - 1, static_cast<int>(u * n))];
    }
    EXPECT_EQ(*std::min_element(count.begin(), count.end()), 1) << r;
    EXPECT_EQ(*std::max_element(count.begin(), count.end()), 1) << r;
  }
  for (int j = 0; j < set.n_boundary(); ++j) EXPECT_EQ(set.boundary(0, j), j % 2 == 0 ? 0.0 : 90.0);
}

TEST(Collocation, SeedControlsTheSet) {
  const auto box = desk_box();
  const auto a = sample_collocation(50, 10, box, 90.0, 1);
  const auto b = sample_collocation(50, 10, box, 90.0, 1);
  const auto c = sample_collocation(50, 10, box, 90.0, 2);
  EXPECT_EQ(a.interior, b.interior);
  EXPECT_EQ(a.boundary, b.boundary);
  EXPECT_NE(a.interior, c.interior);
}

TEST(Loss, TrivialProblemHasZeroLoss) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  auto box = ParameterBox::full();
  auto set = sample_collocation(32, 8, box, 90.0, 5);
  set.interior.row(1).setZero();
  set.boundary.row(1).setZero();
  const auto net = NetworkParams::zeros(make_layer_sizes(2, 8), box, 90.0);
  const auto t = loss_total(net, set, p);
  EXPECT_EQ(t.L1, 0.0);
  EXPECT_EQ(t.L2, 0.0);
  EXPECT_EQ(t.LBC, 0.0);
  EXPECT_EQ(t.total, 0.0);
}

TEST(Loss, FastPathMatchesReference) {
  const PipeProblem p(PipeSpec::biaxial_case());
  const auto net = small_net();
  const auto set = sample_collocation(16, 6, desk_box(), 90.0, 9);
  std::vector<double> g_fast(net.num_params()), g_ref(net.num_params());
  LossEvaluator ev(p, set, desk_box());
  const auto a = ev.evaluate(net, g_fast);
  const auto b = loss_total_reference(net, set, p, {}, g_ref);
  EXPECT_NEAR(a.L1, b.L1, 1e-10 * b.L1);
  EXPECT_NEAR(a.L2, b.L2, 1e-10 * b.L2);
  EXPECT_NEAR(a.LBC, b.LBC, 1e-10 * b.LBC);
  EXPECT_EQ(a.total, a.L1 + a.L2 + a.LBC);
  double gmax = 0.0;
  for (double v : g_ref) gmax = std::max(gmax, std::abs(v));
  for (std::size_t i = 0; i < g_ref.size(); ++i) EXPECT_NEAR(g_fast[i], g_ref[i], 1e-9 * gmax) << i;
}

TEST(Loss, GradientMatchesDirectionalDifference) {
  const PipeProblem p(PipeSpec::biaxial_case());
  auto net = small_net();
  const auto set = sample_collocation(16, 6, desk_box(), 90.0, 9);
  LossEvaluator ev(p, set, desk_box());
  std::vector<double> g(net.num_params());
  ev.evaluate(net, g);
  const auto theta = net.flatten();
  // a fixed pseudo-random direction
  std::vector<double> d(theta.size());
  double gd = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = std::sin(7.0 * i + 0.3);
    gd += g[i] * d[i];
  }
  const double h = 1e-6;
  auto shifted = [&](double k) {
    auto t = theta;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += k * h * d[i];
    auto n = net;
    n.unflatten(t);
    return ev.evaluate(n).total;
  };
  const double fd = (8 * (shifted(1) - shifted(-1)) - (shifted(2) - shifted(-2))) / (12 * h);
  EXPECT_NEAR(gd, fd, 1e-5 * std::abs(fd));

  // single weights moved by +-1e-6
  for (std::size_t i : {std::size_t(0), std::size_t(60), theta.size() - 1}) {
    auto tp = theta, tm = theta;
    tp[i] += 1e-6;
    tm[i] -= 1e-6;
    auto np = net, nm = net;
    np.unflatten(tp);
    nm.unflatten(tm);
    const double df = (ev.evaluate(np).total - ev.evaluate(nm).total) / 2;
    EXPECT_NEAR(df, g[i] * 1e-6, 1e-5 * std::abs(g[i] * 1e-6) + 1e-15) << i;
  }
}

TEST(Loss, SameResultForAnyThreadCount) {
  const PipeProblem p(PipeSpec::biaxial_case());
  const auto net = small_net();
  const auto set = sample_collocation(700, 130, desk_box(), 90.0, 9);
  std::vector<double> g1(net.num_params()), g3(net.num_params());
  const auto a = LossEvaluator(p, set, desk_box(), {}, 1).evaluate(net, g1);
  const auto b = LossEvaluator(p, set, desk_box(), {}, 3).evaluate(net, g3);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(g1, g3);
}

TEST(Loss, NonFiniteReportsThePoint) {
  const PipeProblem p(PipeSpec::biaxial_case());
  auto net = small_net();
  net.b.back()(1) = 1e300;
  const auto set = sample_collocation(16, 6, desk_box(), 90.0, 9);
  try {
    LossEvaluator(p, set, desk_box()).evaluate(net);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("point"), std::string::npos) << e.what();
  }
}

TEST(Train, ReducesLossAndIsReproducible) {
  const PipeProblem p(PipeSpec::biaxial_case());
  const auto net = small_net();
  const auto set = sample_collocation(64, 16, desk_box(), 90.0, 9);
  LossEvaluator ev(p, set, desk_box());
  const double initial = ev.evaluate(net).total;
  TrainOptions o;
  o.optimizer.adam_steps = 20;
  o.optimizer.max_iterations = 30;
  o.optimizer.log_every = 5;
  const auto a = train(net, ev, o);
  const auto b = train(net, ev, o);
  EXPECT_LE(a.report.best_objective, initial);
  EXPECT_EQ(a.params.flatten(), b.params.flatten());
  ASSERT_FALSE(a.report.history.empty());
  for (const auto& h : a.report.history) EXPECT_EQ(h.terms.total, h.terms.L1 + h.terms.L2 + h.terms.LBC);
  std::ostringstream os;
  write_loss_history_csv(os, a.report);
  EXPECT_EQ(os.str().rfind("iteration,load_factor,L1,L2,LBC,total\n", 0), 0u);
}

TEST(Train, LoadStagesEndAtFullLoad) {
  const PipeProblem p(PipeSpec::biaxial_case());
  const auto set = sample_collocation(32, 8, desk_box(), 90.0, 9);
  LossEvaluator ev(p, set, desk_box());
  TrainOptions o;
  o.optimizer.adam_steps = 5;
  o.optimizer.max_iterations = 20;
  o.optimizer.log_every = 1;
  o.load_stages = 4;
  o.stage_iterations = 3;
  const auto r = train(small_net(), ev, o);
  EXPECT_DOUBLE_EQ(r.report.history.front().load_factor, 0.25);
  EXPECT_DOUBLE_EQ(r.report.history.back().load_factor, 1.0);
  for (std::size_t i = 1; i < r.report.history.size(); ++i) {
    EXPECT_GE(r.report.history[i].load_factor, r.report.history[i - 1].load_factor);
  }
}

TEST(Predict, ZeroLoadStraightPipe) {
  const PipeProblem p(PipeSpec::uniaxial_case());
  const auto net = NetworkParams::zeros(make_layer_sizes(2, 8), ParameterBox::full(), 90.0);
  ScenarioSample s;
  s.delta = 0.0;
  const auto e = predict_strain_extremes(net, s, p, 101);
  EXPECT_EQ(e.tensile, 0.0);
  EXPECT_EQ(e.compressive, 0.0);
}

TEST(Predict, ExtremesMatchTheFieldsAndBatch) {
  const PipeProblem p(PipeSpec::biaxial_case());
  const auto net = small_net();
  std::vector<ScenarioSample> ss(5);
  for (int i = 0; i < 5; ++i) ss[i].delta = 0.6 + 0.2 * i;
  const auto batch1 = predict_strain_extremes(net, ss, p, 181, 1);
  const auto batch3 = predict_strain_extremes(net, ss, p, 181, 3);
  for (int i = 0; i < 5; ++i) {
    const auto one = predict_strain_extremes(net, ss[i], p, 181);
    EXPECT_EQ(one.tensile, batch1[i].tensile);
    EXPECT_EQ(batch1[i].tensile, batch3[i].tensile);
    EXPECT_EQ(batch1[i].compressive, batch3[i].compressive);
    const auto f = predict_fields(net, ss[i], p, 181);
    EXPECT_NEAR(f.eps_max_tensile, one.tensile, 1e-14);
    EXPECT_GE(one.tensile, one.compressive);
  }
}

TEST(WeightFile, RoundTrip) {
  auto net = small_net();
  net.seed = 42;
  net.problem_digest = 0x1234;
  std::stringstream ss;
  write_weights(ss, net);
  const auto back = read_weights(ss);
  EXPECT_EQ(back.layer_sizes, net.layer_sizes);
  EXPECT_EQ(back.flatten(), net.flatten());
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.problem_digest, 0x1234u);
  EXPECT_EQ(back.box.lo, net.box.lo);
  EXPECT_EQ(back.box.hi, net.box.hi);
  EXPECT_EQ(back.w_scale, net.w_scale);
  EXPECT_EQ(weights_digest(back), weights_digest(net));
}

TEST(WeightFile, HeaderIsLittleEndianAndVersioned) {
  std::stringstream ss;
  write_weights(ss, small_net());
  const auto bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "GPRA");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kWeightFormatVersion);
  EXPECT_EQ(bytes[5], 0);
}

TEST(WeightFile, RejectsBadInput) {
  std::stringstream bad("NOPE0000000000000000");
  EXPECT_THROW(read_weights(bad), Error);
  std::stringstream ss;
  write_weights(ss, small_net());
  auto bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_weights(truncated), Error);
  bytes[4] = 99;
  std::stringstream version(bytes);
  EXPECT_THROW(read_weights(version), Error);
}

TEST(Hypercube, OnePerStratumInEachParameter) {
  const auto box = desk_box();
  const auto s = latin_hypercube(5, box, 7);
  ASSERT_EQ(s.size(), 5u);
  for (int p = 0; p < kNumParams; ++p) {
    std::set<int> bins;
    for (const auto& x : s) bins.insert(static_cast<int>((x.get(p) - box.lo[p]) / (box.hi[p] - box.lo[p]) * 5));
    EXPECT_EQ(bins.size(), 5u);
  }
}

}  // namespace
}  // namespace gpra
