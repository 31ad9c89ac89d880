#include "gpra/oracle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

namespace gpra {

namespace {

// Value plus a short sparse gradient over the unknown vector.
struct Lin {
  static constexpr int kCap = 20;
  double v = 0.0;
  int n = 0;
  std::array<int, kCap> idx{};
  std::array<double, kCap> d{};

  void add(int i, double c) {
    if (i < 0 || c == 0.0) return;
    for (int k = 0; k < n; ++k) {
      if (idx[k] == i) {
        d[k] += c;
        return;
      }
    }
    idx[n] = i;
    d[n] = c;
    ++n;
  }
  void axpy(const Lin& o, double s) {
    v += s * o.v;
    for (int k = 0; k < o.n; ++k) add(o.idx[k], s * o.d[k]);
  }
};

Lin combine(const Lin& a, double sa, const Lin& b, double sb) {
  Lin r;
  r.axpy(a, sa);
  r.axpy(b, sb);
  return r;
}

int solve_band(int n, int kl, int ku, std::vector<double>& ab, std::vector<double>& rhs) {
  std::vector<lapack_int> piv(static_cast<std::size_t>(n));
  return LAPACKE_dgbsv(LAPACK_COL_MAJOR, n, kl, ku, 1, ab.data(), 2 * kl + ku + 1, piv.data(), rhs.data(),
                       n);
}

double inf_norm(const std::vector<double>& r) {
  double m = 0.0;
  for (double x : r) {
    if (!std::isfinite(x)) return INFINITY;
    m = std::max(m, std::abs(x));
  }
  return m;
}

double two_norm(const std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x * x;
  return std::sqrt(s);
}

int grid_intervals(double L, double h) {
  if (!(h > 0.0) || h > 0.25) throw Error(ErrorKind::invalid_argument, "grid spacing must lie in (0, 0.25] m");
  const double n = L / h;
  const int ni = static_cast<int>(std::lround(n));
  if (std::abs(n - ni) > 1e-9 * n || ni < 4) {
    throw Error(ErrorKind::invalid_argument, "grid spacing must divide the pipe length");
  }
  return ni;
}

}  // namespace

FdmSystem::FdmSystem(const PipeProblem& problem, const ScenarioSample& sample, const FdmOptions& opts)
    : problem_(problem),
      springs_(make_spring_law(sample.soil, problem.spec().D, problem.spec().soil)),
      opts_(opts) {
  n_ = grid_intervals(problem.length(), opts.spacing);
  h_ = problem.length() / n_;
  r1_scale_ = springs_.Tu > 0.0 ? 1.0 / springs_.Tu : 1.0;
  r2_scale_ = springs_.Pu > 0.0 ? 1.0 / springs_.Pu : 1.0;
  ug_.resize(static_cast<std::size_t>(n_ + 1));
  wg_.resize(static_cast<std::size_t>(n_ + 1));
  const auto& s = problem.spec();
  const double a = s.block_start / h_;
  const double b = (s.block_start + s.block_len) / h_;
  for (int i = 0; i <= n_; ++i) {
    double x = i * h_;
    // Snap nodes lying on a block edge up to rounding.
    if (std::abs(i - a) < 1e-9) x = s.block_start;
    if (std::abs(i - b) < 1e-9) x = s.block_start + s.block_len;
    const auto g = ground_displacement(std::min(x, s.L), sample.delta, problem, opts.ramp_width);
    ug_[static_cast<std::size_t>(i)] = g.Ug;
    wg_[static_cast<std::size_t>(i)] = g.Wg;
  }
}

std::vector<double> FdmSystem::residual(const std::vector<double>& v, double lambda) const {
  return assemble(v, lambda, nullptr);
}

std::vector<double> FdmSystem::residual_and_band(const std::vector<double>& v, double lambda,
                                                 std::vector<double>& band) const {
  return assemble(v, lambda, &band);
}

std::vector<double> FdmSystem::assemble(const std::vector<double>& v, double lambda,
                                        std::vector<double>* band) const {
  const int n = n_;
  const double h = h_;
  const int m = unknowns();
  if (static_cast<int>(v.size()) != m) throw Error(ErrorKind::shape_mismatch, "unknown vector size");
  const double eps0 = problem_.eps_initial();
  const auto& grid = problem_.grid();
  const auto& law = problem_.law();

  auto ui = [](int i) { return 2 * (i - 1); };
  auto wi = [](int i) { return 2 * (i - 1) + 1; };
  auto U = [&](int i) {
    Lin l;
    if (i <= 0 || i >= n) return l;
    l.v = v[static_cast<std::size_t>(ui(i))];
    l.add(ui(i), 1.0);
    return l;
  };
  auto W = [&](int i) {
    if (i < 0) i = -i;            // ghost w_{-1} = w_1
    if (i > n) i = 2 * n - i;     // ghost w_{n+1} = w_{n-1}
    Lin l;
    if (i == 0 || i == n) return l;
    l.v = v[static_cast<std::size_t>(wi(i))];
    l.add(wi(i), 1.0);
    return l;
  };

  std::vector<Lin> kap(static_cast<std::size_t>(n + 1)), mom(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    Lin k = W(i + 1);
    k.axpy(W(i), -2.0);
    k.axpy(W(i - 1), 1.0);
    Lin kk;
    kk.axpy(k, 1.0 / (h * h));
    kap[static_cast<std::size_t>(i)] = kk;
  }
  for (int i = 0; i <= n; ++i) {
    Lin ux, wx;
    if (i == 0) {
      ux.axpy(U(0), -3.0 / (2 * h));
      ux.axpy(U(1), 4.0 / (2 * h));
      ux.axpy(U(2), -1.0 / (2 * h));
    } else if (i == n) {
      ux.axpy(U(n), 3.0 / (2 * h));
      ux.axpy(U(n - 1), -4.0 / (2 * h));
      ux.axpy(U(n - 2), 1.0 / (2 * h));
    } else {
      ux = combine(U(i + 1), 1.0 / (2 * h), U(i - 1), -1.0 / (2 * h));
      wx = combine(W(i + 1), 1.0 / (2 * h), W(i - 1), -1.0 / (2 * h));
    }
    Lin e = ux;
    e.v += eps0 + 0.5 * wx.v * wx.v;
    for (int k = 0; k < wx.n; ++k) e.add(wx.idx[k], wx.v * wx.d[k]);
    const Lin& kp = kap[static_cast<std::size_t>(i)];
    const auto st = section_tangent(e.v, kp.v, grid, law);
    Lin mm;
    mm.axpy(e, st.dM_de);
    mm.axpy(kp, st.dM_dk);
    mm.v = st.M;
    mom[static_cast<std::size_t>(i)] = mm;
  }
  std::vector<Lin> nh(static_cast<std::size_t>(n)), nwh(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Lin ux = combine(U(i + 1), 1.0 / h, U(i), -1.0 / h);
    const Lin wx = combine(W(i + 1), 1.0 / h, W(i), -1.0 / h);
    const Lin kp = combine(kap[static_cast<std::size_t>(i)], 0.5, kap[static_cast<std::size_t>(i + 1)], 0.5);
    Lin e = ux;
    e.v += eps0 + 0.5 * wx.v * wx.v;
    for (int k = 0; k < wx.n; ++k) e.add(wx.idx[k], wx.v * wx.d[k]);
    const auto st = section_tangent(e.v, kp.v, grid, law);
    Lin nn;
    nn.axpy(e, st.dN_de);
    nn.axpy(kp, st.dN_dk);
    nn.v = st.N;
    Lin nw;
    nw.axpy(nn, wx.v);
    nw.axpy(wx, nn.v);
    nw.v = nn.v * wx.v;
    nh[static_cast<std::size_t>(i)] = nn;
    nwh[static_cast<std::size_t>(i)] = nw;
  }

  const int kl = bandwidth();
  const int ldab = 3 * kl + 1;
  if (band) band->assign(static_cast<std::size_t>(ldab) * static_cast<std::size_t>(m), 0.0);
  auto scatter = [&](int row, const Lin& l) {
    if (!band) return;
    for (int k = 0; k < l.n; ++k) {
      const int col = l.idx[k];
      (*band)[static_cast<std::size_t>(2 * kl + row - col + col * ldab)] += l.d[k];
    }
  };

  const auto& sp = springs_;
  std::vector<double> r(static_cast<std::size_t>(m));
  for (int i = 1; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double du = lambda * ug_[si] - v[static_cast<std::size_t>(ui(i))];
    const double dw = lambda * wg_[si] - v[static_cast<std::size_t>(wi(i))];
    const double ka = sp.k_smooth / sp.delta_t;
    const double kw = sp.k_smooth / sp.delta_p;
    double fa, dfa, fw, dfw;
    if (opts_.linear_springs) {
      fa = sp.Tu * ka * du;
      dfa = sp.Tu * ka;
      fw = sp.Pu * kw * dw;
      dfw = sp.Pu * kw;
    } else {
      const double ta = std::tanh(ka * du);
      const double tw = std::tanh(kw * dw);
      fa = sp.Tu * ta;
      dfa = sp.Tu * ka * (1.0 - ta * ta);
      fw = sp.Pu * tw;
      dfw = sp.Pu * kw * (1.0 - tw * tw);
    }

    Lin r1 = combine(nh[si], 1.0 / h, nh[si - 1], -1.0 / h);
    r1.v += fa;
    r1.add(ui(i), -dfa);
    Lin r2 = combine(mom[si + 1], 1.0 / (h * h), mom[si - 1], 1.0 / (h * h));
    r2.axpy(mom[si], -2.0 / (h * h));
    r2.axpy(nwh[si], -1.0 / h);
    r2.axpy(nwh[si - 1], 1.0 / h);
    r2.v -= fw;
    r2.add(wi(i), dfw);

    Lin s1, s2;
    s1.axpy(r1, r1_scale_);
    s2.axpy(r2, r2_scale_);
    r[static_cast<std::size_t>(ui(i))] = s1.v;
    r[static_cast<std::size_t>(wi(i))] = s2.v;
    scatter(ui(i), s1);
    scatter(wi(i), s2);
  }
  return r;
}

FieldSolution FdmSystem::fields(const std::vector<double>& v) const {
  const int n = n_;
  const double h = h_;
  FieldSolution f;
  const auto N1 = static_cast<std::size_t>(n + 1);
  f.x.resize(N1);
  f.u.assign(N1, 0.0);
  f.w.assign(N1, 0.0);
  for (int i = 0; i <= n; ++i) f.x[static_cast<std::size_t>(i)] = i * h;
  for (int i = 1; i < n; ++i) {
    f.u[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(2 * (i - 1))];
    f.w[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(2 * (i - 1) + 1)];
  }
  auto w_at = [&](int i) {
    if (i < 0) i = -i;
    if (i > n) i = 2 * n - i;
    return f.w[static_cast<std::size_t>(i)];
  };
  f.u_x.resize(N1);
  f.w_x.resize(N1);
  f.w_xx.resize(N1);
  f.N.resize(N1);
  f.M.resize(N1);
  f.eps_top.resize(N1);
  f.eps_bottom.resize(N1);
  const double zm = problem_.grid().z_max();
  f.z_extreme = zm;
  f.eps_max_tensile = -INFINITY;
  f.eps_min_compressive = INFINITY;
  for (int i = 0; i <= n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    double ux;
    if (i == 0) {
      ux = (-3 * f.u[0] + 4 * f.u[1] - f.u[2]) / (2 * h);
    } else if (i == n) {
      ux = (3 * f.u[si] - 4 * f.u[si - 1] + f.u[si - 2]) / (2 * h);
    } else {
      ux = (f.u[si + 1] - f.u[si - 1]) / (2 * h);
    }
    const double wx = (i == 0 || i == n) ? 0.0 : (w_at(i + 1) - w_at(i - 1)) / (2 * h);
    const double kp = (w_at(i + 1) - 2 * w_at(i) + w_at(i - 1)) / (h * h);
    f.u_x[si] = ux;
    f.w_x[si] = wx;
    f.w_xx[si] = kp;
    const double e = problem_.eps_initial() + ux + 0.5 * wx * wx;
    const auto st = section_tangent(e, kp, problem_.grid(), problem_.law());
    f.N[si] = st.N;
    f.M[si] = st.M;
    f.eps_top[si] = e - zm * kp;
    f.eps_bottom[si] = e + zm * kp;
    f.eps_max_tensile = std::max({f.eps_max_tensile, f.eps_top[si], f.eps_bottom[si]});
    f.eps_min_compressive = std::min({f.eps_min_compressive, f.eps_top[si], f.eps_bottom[si]});
  }
  return f;
}

FieldSolution solve_fdm(const ScenarioSample& sample, const PipeProblem& problem, const FdmOptions& opts) {
  if (opts.load_steps < 1 || opts.max_newton < 1 || !(opts.tolerance > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "load_steps, max_newton and tolerance must be positive");
  }
  FdmSystem sys(problem, sample, opts);
  const int m = sys.unknowns();
  const int kl = FdmSystem::bandwidth();
  std::vector<double> v(static_cast<std::size_t>(m), 0.0), band, rhs;
  std::vector<double> history;
  int iterations = 0;
  double res = 0.0;

  // Newton at fixed load; returns true on convergence, leaves v at the last iterate.
  auto newton = [&](double lambda) {
    for (int it = 0; it <= opts.max_newton; ++it) {
      auto r = sys.residual_and_band(v, lambda, band);
      res = inf_norm(r);
      if (!std::isfinite(res)) return false;
      if (res < opts.tolerance) return true;
      if (it == opts.max_newton) return false;
      ++iterations;
      rhs.resize(r.size());
      for (std::size_t k = 0; k < r.size(); ++k) rhs[k] = -r[k];
      if (solve_band(m, kl, kl, band, rhs) != 0) return false;
      const double r0 = two_norm(r);
      double alpha = 1.0;
      std::vector<double> trial(v.size());
      for (;;) {
        for (std::size_t k = 0; k < v.size(); ++k) trial[k] = v[k] + alpha * rhs[k];
        const double rt = two_norm(sys.residual(trial, lambda));
        if ((std::isfinite(rt) && rt < (1.0 - 1e-4 * alpha) * r0) || alpha < 1.0 / 64.0) {
          if (!std::isfinite(rt)) return false;
          break;
        }
        alpha *= 0.5;
      }
      v.swap(trial);
    }
    return false;
  };

  const double nominal = 1.0 / opts.load_steps;
  double lambda = 0.0;
  double step = nominal;
  int halvings = 0;
  int steps = 0;
  if (sample.delta == 0.0) lambda = 1.0 - nominal;  // one solve suffices
  // Secant predictor from the last two converged states.
  std::vector<double> prev_v;
  double prev_lambda = -1.0;
  while (lambda < 1.0 - 1e-12) {
    const double target = std::min(1.0, lambda + step);
    const auto saved = v;
    if (prev_lambda >= 0.0) {
      const double s = (target - lambda) / (lambda - prev_lambda);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += s * (v[k] - prev_v[k]);
    }
    if (newton(target)) {
      prev_v = saved;
      prev_lambda = lambda;
      lambda = target;
      ++steps;
      history.push_back(res);
      if (step < nominal) step = std::min(nominal, 2.0 * step);
    } else {
      v = saved;
      if (++halvings > opts.max_step_halvings) {
        std::ostringstream msg;
        msg << "Newton failed at load fraction " << target << " after " << steps
            << " steps; last residual " << res << "; history:";
        for (double hres : history) msg << ' ' << hres;
        throw Error(ErrorKind::no_convergence, msg.str());
      }
      step *= 0.5;
    }
  }
  if (steps == 0) {
    if (!newton(1.0)) throw Error(ErrorKind::no_convergence, "Newton failed on the unloaded problem");
    history.push_back(res);
    steps = 1;
  }
  FieldSolution f = sys.fields(v);
  f.residual_norm = res;
  f.converged = true;
  f.load_steps_done = steps;
  f.newton_iterations = iterations;
  f.residual_history = std::move(history);
  return f;
}

FieldSolution solve_linear_winkler(const PipeProblem& problem, double k, const std::vector<double>& wg,
                                   double spacing) {
  if (!(k > 0.0)) throw Error(ErrorKind::invalid_argument, "spring stiffness must be positive");
  const int n = grid_intervals(problem.length(), spacing);
  if (static_cast<int>(wg.size()) != n + 1) throw Error(ErrorKind::shape_mismatch, "Wg size must be nodes");
  const double h = problem.length() / n;
  const double EI = problem.spec().material.E * problem.grid().second_moment();
  const int m = n - 1;
  const int kl = 2;
  const int ldab = 3 * kl + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab * m), 0.0), rhs(static_cast<std::size_t>(m));
  const double c = EI / (h * h * h * h);
  auto put = [&](int row, int col, double val) {
    if (col < 0 || col >= m) return;
    ab[static_cast<std::size_t>(2 * kl + row - col + col * ldab)] += val;
  };
  const std::array<double, 5> stencil{1.0, -4.0, 6.0, -4.0, 1.0};
  for (int i = 1; i < n; ++i) {
    const int row = i - 1;
    for (int o = -2; o <= 2; ++o) {
      int j = i + o;
      if (j < 0) j = -j;
      if (j > n) j = 2 * n - j;
      if (j == 0 || j == n) continue;
      put(row, j - 1, c * stencil[static_cast<std::size_t>(o + 2)]);
    }
    put(row, row, k);
    rhs[static_cast<std::size_t>(row)] = k * wg[static_cast<std::size_t>(i)];
  }
  if (solve_band(m, kl, kl, ab, rhs) != 0) throw Error(ErrorKind::no_convergence, "singular Winkler system");

  FieldSolution f;
  const auto N1 = static_cast<std::size_t>(n + 1);
  f.x.resize(N1);
  f.u.assign(N1, 0.0);
  f.u_x.assign(N1, 0.0);
  f.N.assign(N1, 0.0);
  f.w.assign(N1, 0.0);
  for (int i = 0; i <= n; ++i) f.x[static_cast<std::size_t>(i)] = i * h;
  for (int i = 1; i < n; ++i) f.w[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i - 1)];
  auto w_at = [&](int i) {
    if (i < 0) i = -i;
    if (i > n) i = 2 * n - i;
    return f.w[static_cast<std::size_t>(i)];
  };
  f.w_x.resize(N1);
  f.w_xx.resize(N1);
  f.M.resize(N1);
  f.eps_top.resize(N1);
  f.eps_bottom.resize(N1);
  const double zm = problem.grid().z_max();
  f.z_extreme = zm;
  f.eps_max_tensile = -INFINITY;
  f.eps_min_compressive = INFINITY;
  for (int i = 0; i <= n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    f.w_x[si] = (i == 0 || i == n) ? 0.0 : (w_at(i + 1) - w_at(i - 1)) / (2 * h);
    f.w_xx[si] = (w_at(i + 1) - 2 * w_at(i) + w_at(i - 1)) / (h * h);
    f.M[si] = EI * f.w_xx[si];
    f.eps_top[si] = -zm * f.w_xx[si];
    f.eps_bottom[si] = zm * f.w_xx[si];
    f.eps_max_tensile = std::max({f.eps_max_tensile, f.eps_top[si], f.eps_bottom[si]});
    f.eps_min_compressive = std::min({f.eps_min_compressive, f.eps_top[si], f.eps_bottom[si]});
  }
  f.converged = true;
  f.load_steps_done = 1;
  return f;
}

void write_field_csv(std::ostream& os, const FieldSolution& f) {
  os << "x,u,w,w_x,w_xx,N,M,eps_top,eps_bottom\n";
  const auto prec = os.precision(17);
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    os << f.x[i] << ',' << f.u[i] << ',' << f.w[i] << ',' << f.w_x[i] << ',' << f.w_xx[i] << ',' << f.N[i]
       << ',' << f.M[i] << ',' << f.eps_top[i] << ',' << f.eps_bottom[i] << '\n';
  }
  os.precision(prec);
}

}  // namespace gpra
