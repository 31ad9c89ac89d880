#pragma once

// Truncated Taylor jets in one variable.
//
// A Jet<T, K> stores the Taylor coefficients c[0..K] of a function of x about
// some point x0, so that derivative k equals k! * c[k].  Arithmetic and the
// elementary functions below propagate those coefficients exactly (truncated
// at order K).  T may be double or a reverse-mode Var, which is how parameter
// gradients of derivative-dependent losses are obtained.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>
#include <utility>

namespace gpra::ad {

inline double value_of(double x) { return x; }

template <class T, int K>
class Jet {
  static_assert(K >= 0, "jet order must be non-negative");

 public:
  using scalar_type = T;
  static constexpr int order = K;

  std::array<T, K + 1> c{};

  constexpr Jet() = default;
  // Constant jet.
  constexpr Jet(const T& v) { c[0] = v; }  // NOLINT(google-explicit-constructor)
  template <class U>
    requires(!std::is_same_v<U, T> && std::is_arithmetic_v<U>)
  constexpr Jet(U v) {  // NOLINT(google-explicit-constructor)
    c[0] = T(static_cast<double>(v));
  }

  // Independent variable x seeded at x0; `slope` scales dx (chain rule for an
  // affine reparametrisation).
  static Jet variable(const T& x0, const T& slope = T(1.0)) {
    Jet j;
    j.c[0] = x0;
    if constexpr (K >= 1) j.c[1] = slope;
    return j;
  }

  constexpr const T& operator[](std::size_t k) const { return c[k]; }
  constexpr T& operator[](std::size_t k) { return c[k]; }
  constexpr const T& value() const { return c[0]; }

  // k-th derivative, k! * c[k].
  T derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[k] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k <= K; ++k) c[k] = c[k] + o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k <= K; ++k) c[k] = c[k] - o.c[k];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator-(const Jet& a) {
    Jet r;
    for (int k = 0; k <= K; ++k) r.c[k] = -a.c[k];
    return r;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= K; ++k) {
      T s = a.c[0] * b.c[k];
      for (int j = 1; j <= k; ++j) s = s + a.c[j] * b.c[k - j];
      r.c[k] = s;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k <= K; ++k) {
      T s = a.c[k];
      for (int j = 1; j <= k; ++j) s = s - b.c[j] * r.c[k - j];
      r.c[k] = s / b.c[0];
    }
    return r;
  }

  // Scalar (coefficient-type) operands.
  friend Jet operator+(Jet a, const T& s) {
    a.c[0] = a.c[0] + s;
    return a;
  }
  friend Jet operator+(const T& s, Jet a) { return std::move(a) + s; }
  friend Jet operator-(Jet a, const T& s) {
    a.c[0] = a.c[0] - s;
    return a;
  }
  friend Jet operator-(const T& s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, const T& s) {
    for (int k = 0; k <= K; ++k) a.c[k] = a.c[k] * s;
    return a;
  }
  friend Jet operator*(const T& s, Jet a) { return std::move(a) * s; }
  friend Jet operator/(Jet a, const T& s) {
    for (int k = 0; k <= K; ++k) a.c[k] = a.c[k] / s;
    return a;
  }
  friend Jet operator/(const T& s, const Jet& a) { return Jet(s) / a; }
};

// double operands when T is not double (e.g. Jet<Var, K> * 2.0).
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator*(Jet<T, K> a, double s) {
  for (int k = 0; k <= K; ++k) a.c[k] = a.c[k] * s;
  return a;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator*(double s, Jet<T, K> a) {
  return std::move(a) * s;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator+(Jet<T, K> a, double s) {
  a.c[0] = a.c[0] + s;
  return a;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator+(double s, Jet<T, K> a) {
  return std::move(a) + s;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator-(Jet<T, K> a, double s) {
  a.c[0] = a.c[0] - s;
  return a;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator-(double s, const Jet<T, K>& a) {
  return -a + s;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator/(Jet<T, K> a, double s) {
  for (int k = 0; k <= K; ++k) a.c[k] = a.c[k] / s;
  return a;
}
template <class T, int K>
  requires(!std::is_same_v<T, double>)
Jet<T, K> operator/(double s, const Jet<T, K>& a) {
  return Jet<T, K>(T(s)) / a;
}

template <class T, int K>
double value_of(const Jet<T, K>& j) {
  return value_of(j.c[0]);
}

template <class T>
struct is_jet : std::false_type {};
template <class T, int K>
struct is_jet<Jet<T, K>> : std::true_type {};
template <class T>
inline constexpr bool is_jet_v = is_jet<T>::value;

// Coefficients of d/dx of the jet, one order lower.
template <class T, int K>
  requires(K >= 1)
Jet<T, K - 1> differentiate(const Jet<T, K>& a) {
  Jet<T, K - 1> r;
  for (int k = 0; k < K; ++k) r.c[k] = a.c[k + 1] * double(k + 1);
  return r;
}

// Drop coefficients above order M.
template <int M, class T, int K>
  requires(M <= K)
Jet<T, M> truncate(const Jet<T, K>& a) {
  Jet<T, M> r;
  for (int k = 0; k <= M; ++k) r.c[k] = a.c[k];
  return r;
}

template <class T, int K>
Jet<T, K> exp(const Jet<T, K>& a) {
  using std::exp;
  Jet<T, K> r;
  r.c[0] = exp(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    T s = a.c[1] * r.c[k - 1];
    for (int j = 2; j <= k; ++j) s = s + a.c[j] * r.c[k - j] * double(j);
    r.c[k] = s / double(k);
  }
  return r;
}

template <class T, int K>
Jet<T, K> log(const Jet<T, K>& a) {
  using std::log;
  Jet<T, K> r;
  r.c[0] = log(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    T s = a.c[k] * double(k);
    for (int j = 1; j < k; ++j) s = s - r.c[j] * a.c[k - j] * double(j);
    r.c[k] = s / (a.c[0] * double(k));
  }
  return r;
}

// log(1 + a), accurate for small a.c[0].
template <class T, int K>
Jet<T, K> log1p(const Jet<T, K>& a) {
  using std::log1p;
  Jet<T, K> r;
  r.c[0] = log1p(a.c[0]);
  const T base = a.c[0] + 1.0;
  for (int k = 1; k <= K; ++k) {
    T s = a.c[k] * double(k);
    for (int j = 1; j < k; ++j) s = s - r.c[j] * a.c[k - j] * double(j);
    r.c[k] = s / (base * double(k));
  }
  return r;
}

template <class T, int K>
Jet<T, K> sqrt(const Jet<T, K>& a) {
  using std::sqrt;
  Jet<T, K> r;
  r.c[0] = sqrt(a.c[0]);
  for (int k = 1; k <= K; ++k) {
    T s = a.c[k];
    for (int j = 1; j < k; ++j) s = s - r.c[j] * r.c[k - j];
    r.c[k] = s / (r.c[0] * 2.0);
  }
  return r;
}

// y = tanh(a) via y' = (1 - y^2) a'.
template <class T, int K>
Jet<T, K> tanh(const Jet<T, K>& a) {
  using std::tanh;
  Jet<T, K> y;
  Jet<T, K> s;  // 1 - y^2
  y.c[0] = tanh(a.c[0]);
  s.c[0] = 1.0 - y.c[0] * y.c[0];
  for (int k = 1; k <= K; ++k) {
    T acc = a.c[1] * s.c[k - 1];
    for (int j = 2; j <= k; ++j) acc = acc + a.c[j] * s.c[k - j] * double(j);
    y.c[k] = acc / double(k);
    T sq = y.c[0] * y.c[k];
    for (int j = 1; j < k; ++j) sq = sq + y.c[j] * y.c[k - j] * 0.5;
    s.c[k] = -(sq * 2.0);
  }
  return y;
}

// |a|, smooth away from a.c[0] == 0.
template <class T, int K>
Jet<T, K> abs(const Jet<T, K>& a) {
  return value_of(a.c[0]) < 0.0 ? -a : a;
}

// Non-negative integer power by repeated squaring.
template <class T, int K>
Jet<T, K> pow(Jet<T, K> base, int n) {
  Jet<T, K> r(T(1.0));
  while (n > 0) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return r;
}

// a^p for a.c[0] > 0.
template <class T, int K>
Jet<T, K> pow(const Jet<T, K>& a, double p) {
  return exp(log(a) * T(p));
}

// Scalar fallbacks so generic code can call these unqualified.
inline double log1p_(double x) { return std::log1p(x); }

// Numerically stable log(1 + exp(s)).
inline double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}
template <class T>
  requires(!std::is_same_v<T, double>)
T softplus(const T& s) {
  using std::exp;
  using std::log1p;
  return value_of(s) > 0.0 ? s + log1p(exp(-s)) : log1p(exp(s));
}

// Numerically stable 1 / (1 + exp(-s)).
inline double logistic(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}
template <class T>
  requires(!std::is_same_v<T, double>)
T logistic(const T& s) {
  using std::exp;
  if (value_of(s) >= 0.0) return 1.0 / (exp(-s) + 1.0);
  const T e = exp(s);
  return e / (e + 1.0);
}

// Taylor coefficients of f about x0 up to order K: jet_eval(f, x0) returns
// c[k] = f^(k)(x0) / k!.  f must be generic over its argument type.
template <int K, class F>
auto jet_eval(F&& f, double x0) {
  return f(Jet<double, K>::variable(x0));
}

}  // namespace gpra::ad
