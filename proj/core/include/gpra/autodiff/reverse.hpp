#pragma once

// Reverse-mode (adjoint) scalar AD on an explicit tape.
//
// Each Var operation appends one node holding up to two parent indices and the
// local partial derivatives.  Var composes with Jet<Var, K>, which is how the
// gradient of a loss that depends on Taylor coefficients is obtained
// (reverse over forward).

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace gpra::ad {

class Var;

class Tape {
 public:
  struct Node {
    int a;
    int b;
    double da;
    double db;
  };

  Tape() { nodes_.reserve(1 << 12); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(double v);

  int push(int a, double da, int b, double db) {
    nodes_.push_back({a, b, da, db});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Adjoints of every node with respect to `out`.
  std::vector<double> adjoints(const Var& out) const;

 private:
  std::vector<Node> nodes_;
};

class Var {
 public:
  Var() = default;
  Var(double v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  Var(double v, int idx, Tape* tape) : v_(v), idx_(idx), tape_(tape) {}

  double value() const { return v_; }
  int index() const { return idx_; }
  Tape* tape() const { return tape_; }
  bool is_constant() const { return idx_ < 0; }

  friend Var unary(const Var& a, double v, double da) {
    if (a.idx_ < 0) return Var(v);
    return Var(v, a.tape_->push(a.idx_, da, -1, 0.0), a.tape_);
  }
  friend Var binary(const Var& a, const Var& b, double v, double da, double db) {
    if (a.idx_ < 0 && b.idx_ < 0) return Var(v);
    Tape* t = a.tape_ ? a.tape_ : b.tape_;
    if (a.idx_ < 0) return Var(v, t->push(b.idx_, db, -1, 0.0), t);
    if (b.idx_ < 0) return Var(v, t->push(a.idx_, da, -1, 0.0), t);
    return Var(v, t->push(a.idx_, da, b.idx_, db), t);
  }

  friend Var operator+(const Var& a, const Var& b) { return binary(a, b, a.v_ + b.v_, 1.0, 1.0); }
  friend Var operator-(const Var& a, const Var& b) { return binary(a, b, a.v_ - b.v_, 1.0, -1.0); }
  friend Var operator*(const Var& a, const Var& b) { return binary(a, b, a.v_ * b.v_, b.v_, a.v_); }
  friend Var operator/(const Var& a, const Var& b) {
    const double q = a.v_ / b.v_;
    return binary(a, b, q, 1.0 / b.v_, -q / b.v_);
  }
  friend Var operator-(const Var& a) { return unary(a, -a.v_, -1.0); }

  friend Var operator+(const Var& a, double s) { return unary(a, a.v_ + s, 1.0); }
  friend Var operator+(double s, const Var& a) { return unary(a, a.v_ + s, 1.0); }
  friend Var operator-(const Var& a, double s) { return unary(a, a.v_ - s, 1.0); }
  friend Var operator-(double s, const Var& a) { return unary(a, s - a.v_, -1.0); }
  friend Var operator*(const Var& a, double s) { return unary(a, a.v_ * s, s); }
  friend Var operator*(double s, const Var& a) { return unary(a, a.v_ * s, s); }
  friend Var operator/(const Var& a, double s) { return unary(a, a.v_ / s, 1.0 / s); }
  friend Var operator/(double s, const Var& a) {
    const double q = s / a.v_;
    return unary(a, q, -q / a.v_);
  }

  Var& operator+=(const Var& o) { return *this = *this + o; }
  Var& operator-=(const Var& o) { return *this = *this - o; }
  Var& operator*=(const Var& o) { return *this = *this * o; }
  Var& operator/=(const Var& o) { return *this = *this / o; }

  friend Var exp(const Var& a) {
    const double e = std::exp(a.v_);
    return unary(a, e, e);
  }
  friend Var log(const Var& a) { return unary(a, std::log(a.v_), 1.0 / a.v_); }
  friend Var log1p(const Var& a) { return unary(a, std::log1p(a.v_), 1.0 / (1.0 + a.v_)); }
  friend Var sqrt(const Var& a) {
    const double r = std::sqrt(a.v_);
    return unary(a, r, 0.5 / r);
  }
  friend Var tanh(const Var& a) {
    const double t = std::tanh(a.v_);
    return unary(a, t, 1.0 - t * t);
  }
  friend Var abs(const Var& a) { return a.v_ < 0.0 ? -a : a; }
  friend Var pow(const Var& a, double p) {
    const double r = std::pow(a.v_, p);
    return unary(a, r, p * std::pow(a.v_, p - 1.0));
  }

 private:
  double v_ = 0.0;
  int idx_ = -1;
  Tape* tape_ = nullptr;
};

inline double value_of(const Var& v) { return v.value(); }

inline Var Tape::variable(double v) { return Var(v, push(-1, 0.0, -1, 0.0), this); }

inline std::vector<double> Tape::adjoints(const Var& out) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (out.is_constant()) return adj;
  adj[static_cast<std::size_t>(out.index())] = 1.0;
  for (int i = out.index(); i >= 0; --i) {
    const double g = adj[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += g * n.da;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += g * n.db;
  }
  return adj;
}

struct GradResult {
  double value = 0.0;
  std::vector<double> gradient;
};

using ScalarLoss = std::function<Var(std::span<const Var>)>;

// Value and exact gradient of loss(theta).  Throws gpra::Error
// (ErrorKind::non_finite) when the loss is not finite at theta.
GradResult grad(const ScalarLoss& loss, std::span<const double> theta);

}  // namespace gpra::ad
