#include "gpra/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "gpra/error.hpp"

namespace gpra {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Point {
  std::vector<double> x, g;
  double f = 0.0;
};

class Counter {
 public:
  Counter(const Objective& f, int& evals) : f_(f), evals_(evals) {}
  double operator()(const std::vector<double>& x, std::vector<double>& g) const {
    ++evals_;
    const double v = f_(x, g);
    return (std::isfinite(v) && all_finite(g)) ? v : INFINITY;
  }

 private:
  const Objective& f_;
  int& evals_;
};

// Minimiser of the cubic through (a, fa, da), (b, fb, db), clipped to the
// interior of [a, b]; falls back to bisection.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

// Strong-Wolfe line search along d from p.  On success fills `out`.
bool line_search(const Counter& eval, const Point& p, const std::vector<double>& d, double alpha0,
                 int max_evals, Point& out) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  const double d0 = dot(p.g, d);
  const std::size_t n = p.x.size();
  auto probe = [&](double a, Point& q) {
    q.x.resize(n);
    q.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) q.x[i] = p.x[i] + a * d[i];
    q.f = eval(q.x, q.g);
    return std::isfinite(q.f) ? dot(q.g, d) : INFINITY;
  };

  double a_prev = 0.0, f_prev = p.f, d_prev = d0;
  double a = alpha0;
  Point q;
  int evals = 0;
  double lo = 0, hi = 0, flo = 0, fhi = 0, dlo = 0, dhi = 0;
  bool bracketed = false;
  while (evals < max_evals) {
    const double da = probe(a, q);
    ++evals;
    if (!std::isfinite(q.f)) {
      // Step too long into a non-finite region: shrink.
      a = 0.5 * (a_prev + a);
      continue;
    }
    if (q.f > p.f + c1 * a * d0 || (evals > 1 && q.f >= f_prev)) {
      lo = a_prev, flo = f_prev, dlo = d_prev;
      hi = a, fhi = q.f, dhi = da;
      bracketed = true;
      break;
    }
    if (std::abs(da) <= -c2 * d0) {
      out = std::move(q);
      return true;
    }
    if (da >= 0.0) {
      lo = a, flo = q.f, dlo = da;
      hi = a_prev, fhi = f_prev, dhi = d_prev;
      bracketed = true;
      out = q;  // keep as the best acceptable fallback
      break;
    }
    a_prev = a, f_prev = q.f, d_prev = da;
    out = q;
    a *= 2.0;
  }
  if (!bracketed) return evals > 0 && out.x.size() == n && out.f < p.f;

  Point best_lo;
  bool have_lo = lo > 0.0;
  if (have_lo) {
    best_lo.x.resize(n);
    // `out` already holds the point at lo when lo > 0.
    best_lo = out;
  }
  while (evals < max_evals) {
    const double t = cubic_step(lo, flo, dlo, hi, fhi, dhi);
    const double dt = probe(t, q);
    ++evals;
    if (!std::isfinite(q.f) || q.f > p.f + c1 * t * d0 || q.f >= flo) {
      hi = t, fhi = std::isfinite(q.f) ? q.f : 1e300, dhi = std::isfinite(dt) ? dt : 0.0;
    } else {
      if (std::abs(dt) <= -c2 * d0) {
        out = std::move(q);
        return true;
      }
      if (dt * (hi - lo) >= 0.0) hi = lo, fhi = flo, dhi = dlo;
      lo = t, flo = q.f, dlo = dt;
      best_lo = q;
      have_lo = true;
    }
    if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
  }
  if (have_lo && best_lo.f < p.f) {
    out = std::move(best_lo);
    return true;
  }
  return false;
}

}  // namespace

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::iteration_cap: return "iteration_cap";
    case StopReason::non_finite: return "non_finite";
    case StopReason::line_search: return "line_search";
  }
  return "unknown";
}

OptimizeResult minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& cfg,
                        const IterationCallback& on_log) {
  OptimizeResult res;
  const Counter eval(f, res.evaluations);
  const std::size_t n = x0.size();
  Point p;
  p.x = std::move(x0);
  p.g.assign(n, 0.0);
  p.f = eval(p.x, p.g);
  if (!std::isfinite(p.f)) throw Error(ErrorKind::diverged, "loss is not finite at the initial point");
  res.x = p.x;
  res.f = p.f;
  int iter = 0;
  auto log = [&](const Point& q) {
    if (on_log && cfg.log_every > 0 && iter % cfg.log_every == 0) on_log(iter, q.x, q.f);
  };
  auto finish = [&](StopReason r) {
    res.reason = r;
    res.iterations = iter;
    if (on_log) on_log(iter, res.x, res.f);
    return res;
  };
  log(p);

  // Adam warm-up.
  if (cfg.adam_steps > 0) {
    std::vector<double> m(n, 0.0), v(n, 0.0);
    double b1t = 1.0, b2t = 1.0;
    for (int t = 1; t <= cfg.adam_steps; ++t) {
      b1t *= cfg.adam_beta1;
      b2t *= cfg.adam_beta2;
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * p.g[i];
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * p.g[i] * p.g[i];
        const double mh = m[i] / (1.0 - b1t);
        const double vh = v[i] / (1.0 - b2t);
        p.x[i] -= cfg.adam_lr * mh / (std::sqrt(vh) + 1e-8);
      }
      p.f = eval(p.x, p.g);
      ++iter;
      if (!std::isfinite(p.f)) return finish(StopReason::non_finite);
      if (p.f < res.f) {
        res.f = p.f;
        res.x = p.x;
      }
      log(p);
    }
    // Continue from the best warm-up point.
    if (res.f < p.f) {
      p.x = res.x;
      p.f = eval(p.x, p.g);
    }
  }

  // L-BFGS.
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> d(n), alpha(static_cast<std::size_t>(cfg.lbfgs_memory));
  bool retried = false;
  for (int k = 0; k < cfg.max_iterations; ++k) {
    // Two-loop recursion.
    for (std::size_t i = 0; i < n; ++i) d[i] = -p.g[i];
    const int mcount = static_cast<int>(S.size());
    for (int j = mcount - 1; j >= 0; --j) {
      const auto sj = static_cast<std::size_t>(j);
      alpha[sj] = rho[sj] * dot(S[sj], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[sj] * Y[sj][i];
    }
    if (mcount > 0) {
      const auto& s = S.back();
      const auto& y = Y.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& di : d) di *= gamma;
    }
    for (int j = 0; j < mcount; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const double beta = rho[sj] * dot(Y[sj], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += S[sj][i] * (alpha[sj] - beta);
    }
    double gd = dot(p.g, d);
    if (!(gd < 0.0)) {
      S.clear(), Y.clear(), rho.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -p.g[i];
      gd = dot(p.g, d);
    }
    const double gnorm = std::sqrt(dot(p.g, p.g));
    if (gnorm == 0.0) return finish(StopReason::converged);
    const double a0 = S.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

    Point q;
    if (!line_search(eval, p, d, a0, cfg.max_line_search, q)) {
      if (retried || S.empty()) return finish(StopReason::line_search);
      retried = true;
      S.clear(), Y.clear(), rho.clear();
      continue;
    }
    retried = false;
    ++iter;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = q.x[i] - p.x[i];
      y[i] = q.g[i] - p.g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (static_cast<int>(S.size()) == cfg.lbfgs_memory) {
        S.pop_front(), Y.pop_front(), rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    const double rel = std::abs(p.f - q.f) / std::max({std::abs(p.f), std::abs(q.f), 1e-300});
    p = std::move(q);
    if (p.f < res.f) {
      res.f = p.f;
      res.x = p.x;
    }
    log(p);
    if (rel < cfg.rel_tol) return finish(StopReason::converged);
  }
  return finish(StopReason::iteration_cap);
}

}  // namespace gpra
