#include "gpra/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "gpra/autodiff/reverse.hpp"
#include "gpra/parallel.hpp"

namespace gpra {

namespace {

using Mat = Eigen::MatrixXd;
using Arr = Eigen::ArrayXXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kChunk = 128;

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// Unbiased integer in [0, n).
std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do r = g();
  while (r >= limit);
  return r % n;
}

std::vector<int> permutation(std::mt19937_64& g, int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = uniform_index(g, static_cast<std::uint64_t>(i) + 1);
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Batched forward/backward over Taylor jets in x.
//
// For a hidden layer with pre-activation coefficients x_k and t = tanh(x_0),
// f_m = tanh^(m)(x_0) / m!, the activation coefficients are
//   y0 = t, y1 = f1 x1, y2 = f1 x2 + f2 x1^2,
//   y3 = f1 x3 + 2 f2 x1 x2 + f3 x1^3,
//   y4 = f1 x4 + f2 (x2^2 + 2 x1 x3) + 3 f3 x1^2 x2 + f4 x1^4.

struct LayerState {
  std::vector<Arr> x;  // pre-activation coefficients
  std::vector<Arr> f;  // f[m] = f_m, m = 1..K+1 (f[0] unused)
  std::vector<Mat> h;  // activation coefficients
};

template <int K>
struct Batch {
  int n = 0;
  double c1 = 0.0;  // d xi / d x
  Mat z;            // 6 x n inputs
  std::vector<LayerState> layers;
  std::vector<Mat> y;  // raw outputs, 2 x n per coefficient
};

template <int K>
void forward_batch(const NetworkParams& net, Batch<K>& B) {
  const std::size_t nl = net.W.size();
  B.layers.assign(nl - 1, {});
  const int n = B.n;
  std::vector<Mat> in(K + 1);
  in[0] = B.z;
  for (std::size_t l = 0; l + 1 < nl; ++l) {
    const Mat& W = net.W[l];
    LayerState& L = B.layers[l];
    L.x.resize(K + 1);
    if (l == 0) {
      L.x[0] = ((W * B.z).colwise() + net.b[l]).array();
      for (int k = 1; k <= K; ++k) {
        if (k == 1) {
          L.x[1] = (W.col(0) * B.c1).replicate(1, n).array();
        } else {
          L.x[k] = Arr::Zero(W.rows(), n);
        }
      }
    } else {
      L.x[0] = ((W * in[0]).colwise() + net.b[l]).array();
      for (int k = 1; k <= K; ++k) L.x[k] = (W * in[k]).array();
    }
    const Arr t = L.x[0].tanh();
    const Arr t2 = t * t;
    L.f.resize(K + 2);
    L.f[1] = 1.0 - t2;
    if constexpr (K + 1 >= 2) L.f[2] = -t * L.f[1];
    if constexpr (K + 1 >= 3) L.f[3] = (-2.0 + t2 * (8.0 - 6.0 * t2)) / 6.0;
    if constexpr (K + 1 >= 4) L.f[4] = t * (16.0 + t2 * (-40.0 + 24.0 * t2)) / 24.0;
    if constexpr (K + 1 >= 5) L.f[5] = (16.0 + t2 * (-136.0 + t2 * (240.0 - 120.0 * t2))) / 120.0;
    const auto& x = L.x;
    const auto& f = L.f;
    L.h.resize(K + 1);
    L.h[0] = t.matrix();
    if constexpr (K >= 1) L.h[1] = (f[1] * x[1]).matrix();
    if constexpr (K >= 2) L.h[2] = (f[1] * x[2] + f[2] * x[1].square()).matrix();
    if constexpr (K >= 3) {
      L.h[3] = (f[1] * x[3] + 2.0 * f[2] * x[1] * x[2] + f[3] * x[1].cube()).matrix();
    }
    if constexpr (K >= 4) {
      L.h[4] = (f[1] * x[4] + f[2] * (x[2].square() + 2.0 * x[1] * x[3]) + 3.0 * f[3] * x[1].square() * x[2] +
                f[4] * x[1].square().square())
                   .matrix();
    }
    for (int k = 0; k <= K; ++k) in[k] = L.h[k];
  }
  const Mat& Wo = net.W[nl - 1];
  B.y.resize(K + 1);
  B.y[0] = (Wo * in[0]).colwise() + net.b[nl - 1];
  for (int k = 1; k <= K; ++k) B.y[k] = Wo * in[k];
}

// Parameter offsets of layer l in the flattened vector.
std::vector<std::size_t> layer_offsets(const NetworkParams& net) {
  std::vector<std::size_t> off(net.W.size() + 1, 0);
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    off[l + 1] = off[l] + static_cast<std::size_t>(net.W[l].size() + net.b[l].size());
  }
  return off;
}

template <int K>
void backward_batch(const NetworkParams& net, const Batch<K>& B, std::vector<Mat> ybar, std::span<double> grad) {
  const std::size_t nl = net.W.size();
  const auto off = layer_offsets(net);
  auto accumulate = [&](std::size_t l, const std::vector<Mat>& abar, const std::vector<Mat>& in) {
    const Mat& W = net.W[l];
    Eigen::Map<RowMat> gW(grad.data() + off[l], W.rows(), W.cols());
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + off[l] + W.size(), W.rows());
    for (int k = 0; k <= K; ++k) {
      if (in[static_cast<std::size_t>(k)].size() == 0) continue;
      gW.noalias() += abar[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(k)].transpose();
    }
    gb += abar[0].rowwise().sum();
  };

  // Output layer.
  {
    std::vector<Mat> in(K + 1);
    for (int k = 0; k <= K; ++k) in[k] = B.layers.back().h[k];
    accumulate(nl - 1, ybar, in);
  }
  std::vector<Mat> hbar(K + 1);
  for (int k = 0; k <= K; ++k) hbar[k] = net.W[nl - 1].transpose() * ybar[k];

  for (std::size_t l = nl - 1; l-- > 0;) {
    const LayerState& L = B.layers[l];
    const auto& x = L.x;
    const auto& f = L.f;
    std::vector<Arr> yb(K + 1);
    for (int k = 0; k <= K; ++k) yb[k] = hbar[k].array();
    std::vector<Mat> xbar(K + 1);
    if constexpr (K == 0) {
      xbar[0] = (yb[0] * f[1]).matrix();
    } else if constexpr (K == 1) {
      xbar[1] = (yb[1] * f[1]).matrix();
      xbar[0] = (yb[0] * f[1] + 2.0 * yb[1] * f[2] * x[1]).matrix();
    } else if constexpr (K == 2) {
      const Arr d2 = 2.0 * f[2] * x[2] + 3.0 * f[3] * x[1].square();
      xbar[2] = (yb[2] * f[1]).matrix();
      xbar[1] = (yb[1] * f[1] + 2.0 * yb[2] * f[2] * x[1]).matrix();
      xbar[0] = (yb[0] * f[1] + 2.0 * yb[1] * f[2] * x[1] + yb[2] * d2).matrix();
    } else {
      static_assert(K == 4, "jet order 0, 1, 2 or 4");
      const Arr d2 = 2.0 * f[2] * x[2] + 3.0 * f[3] * x[1].square();
      const Arr d3 = 2.0 * f[2] * x[3] + 6.0 * f[3] * x[1] * x[2] + 4.0 * f[4] * x[1].cube();
      const Arr d4 = 2.0 * f[2] * x[4] + 3.0 * f[3] * (x[2].square() + 2.0 * x[1] * x[3]) +
                     12.0 * f[4] * x[1].square() * x[2] + 5.0 * f[5] * x[1].square().square();
      xbar[4] = (yb[4] * f[1]).matrix();
      xbar[3] = (yb[3] * f[1] + 2.0 * yb[4] * f[2] * x[1]).matrix();
      xbar[2] = (yb[2] * f[1] + 2.0 * yb[3] * f[2] * x[1] + yb[4] * d2).matrix();
      xbar[1] = (yb[1] * f[1] + 2.0 * yb[2] * f[2] * x[1] + yb[3] * d2 + yb[4] * d3).matrix();
      xbar[0] = (yb[0] * f[1] + 2.0 * yb[1] * f[2] * x[1] + yb[2] * d2 + yb[3] * d3 + yb[4] * d4).matrix();
    }
    if (l == 0) {
      const Mat& W = net.W[0];
      Eigen::Map<RowMat> gW(grad.data() + off[0], W.rows(), W.cols());
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + off[0] + W.size(), W.rows());
      gW.noalias() += xbar[0] * B.z.transpose();
      if constexpr (K >= 1) gW.col(0) += B.c1 * xbar[1].rowwise().sum();
      gb += xbar[0].rowwise().sum();
    } else {
      std::vector<Mat> in(K + 1);
      for (int k = 0; k <= K; ++k) in[k] = B.layers[l - 1].h[k];
      accumulate(l, xbar, in);
      for (int k = 0; k <= K; ++k) hbar[k] = net.W[l].transpose() * xbar[k];
    }
  }
}

// ---------------------------------------------------------------------------
// Pointwise physics with its adjoint.

struct PhysicsResult {
  double r1, r2;  // scaled residuals
};

// u, w: Taylor coefficients 0..4 in x.  Given the adjoints of the scaled
// residuals (r1bar, r2bar), adds d/du_k and d/dw_k into ubar, wbar.
class PointPhysics {
 public:
  PointPhysics(const PipeProblem& p, double r1s, double r2s, double load)
      : p_(p), r1s_(r1s), r2s_(r2s), load_(load) {}

  PhysicsResult eval(const double* u, const double* w, const PointContext& ctx) {
    const double a0 = u[1], a1 = 2.0 * u[2], a2 = 3.0 * u[3];
    b0_ = w[1], b1_ = 2.0 * w[2], b2_ = 3.0 * w[3];
    c0_ = 2.0 * w[2], c1_ = 6.0 * w[3], c2_ = 12.0 * w[4];
    const double e0 = p_.eps_initial() + a0 + 0.5 * b0_ * b0_;
    const double e1 = a1 + b0_ * b1_;
    const double e2 = a2 + b0_ * b2_ + 0.5 * b1_ * b1_;
    N0_ = N1_ = M2_ = 0.0;
    sp_ = szp_ = sz2p_ = sq_ = szq_ = sz2q_ = szr_ = sz2r_ = 0.0;
    const auto& law = p_.law();
    for (const Fiber& lv : p_.grid().levels()) {
      const double z = lv.z, A = lv.area;
      const double ef0 = e0 - z * c0_;
      const double ef1 = e1 - z * c1_;
      const double ef2 = e2 - z * c2_;
      const auto S = law.derivatives(ef0);
      const double s1 = S.s1 * ef1;
      const double s2 = S.s1 * ef2 + 0.5 * S.s2 * ef1 * ef1;
      N0_ += A * S.s0;
      N1_ += A * s1;
      M2_ -= z * A * s2;
      const double pp = A * S.s1;
      const double qq = A * S.s2 * ef1;
      const double rr = A * (S.s2 * ef2 + 0.5 * S.s3 * ef1 * ef1);
      sp_ += pp, szp_ += z * pp, sz2p_ += z * z * pp;
      sq_ += qq, szq_ += z * qq, sz2q_ += z * z * qq;
      szr_ += z * rr, sz2r_ += z * z * rr;
    }
    const auto& sl = ctx.springs;
    ka_ = sl.k_smooth / sl.delta_t;
    kw_ = sl.k_smooth / sl.delta_p;
    ta_ = std::tanh(ka_ * (load_ * ctx.ground.Ug - u[0]));
    tw_ = std::tanh(kw_ * (load_ * ctx.ground.Wg - w[0]));
    Tu_ = sl.Tu, Pu_ = sl.Pu;
    a_[0] = a0, a_[1] = a1, a_[2] = a2;
    e_[0] = e0, e_[1] = e1, e_[2] = e2;
    const double R1 = N1_ + Tu_ * ta_;
    const double R2 = 2.0 * M2_ - (N1_ * b0_ + N0_ * c0_) - Pu_ * tw_;
    return {R1 * r1s_, R2 * r2s_};
  }

  void adjoint(double r1bar, double r2bar, double* ubar, double* wbar) const {
    const double R1b = r1bar * r1s_;
    const double R2b = r2bar * r2s_;
    const double N1b = R1b - R2b * b0_;
    const double N0b = -R2b * c0_;
    const double M2b = 2.0 * R2b;
    double b0b = -R2b * N1_;
    double c0b = -R2b * N0_;
    // Fiber strains -> centroid strain jet e and curvature jet c.
    const double e0b = N0b * sp_ + N1b * sq_ - M2b * szr_;
    const double e1b = N1b * sp_ - M2b * szq_;
    const double e2b = -M2b * szp_;
    c0b += -(N0b * szp_ + N1b * szq_ - M2b * sz2r_);
    const double c1b = -(N1b * szp_ - M2b * sz2q_);
    const double c2b = M2b * sz2p_;
    // e = eps0 + a + b^2 / 2 truncated at order 2.
    b0b += e0b * b0_ + e1b * b1_ + e2b * b2_;
    const double b1b = e1b * b0_ + e2b * b1_;
    const double b2b = e2b * b0_;
    ubar[0] += -R1b * Tu_ * ka_ * (1.0 - ta_ * ta_);
    wbar[0] += R2b * Pu_ * kw_ * (1.0 - tw_ * tw_);
    ubar[1] += e0b;
    ubar[2] += 2.0 * e1b;
    ubar[3] += 3.0 * e2b;
    wbar[1] += b0b;
    wbar[2] += 2.0 * b1b + 2.0 * c0b;
    wbar[3] += 3.0 * b2b + 6.0 * c1b;
    wbar[4] += 12.0 * c2b;
  }

 private:
  const PipeProblem& p_;
  double r1s_, r2s_, load_;
  double a_[3]{}, e_[3]{};
  double b0_ = 0, b1_ = 0, b2_ = 0, c0_ = 0, c1_ = 0, c2_ = 0;
  double N0_ = 0, N1_ = 0, M2_ = 0;
  double sp_ = 0, szp_ = 0, sz2p_ = 0, sq_ = 0, szq_ = 0, sz2q_ = 0, szr_ = 0, sz2r_ = 0;
  double ka_ = 0, kw_ = 0, ta_ = 0, tw_ = 0, Tu_ = 0, Pu_ = 0;
};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorKind::io, "truncated weight file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::io, "truncated weight file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

Mat normalized_matrix(const std::vector<NormalizedInput>& pts, std::size_t begin, std::size_t end) {
  Mat z(6, static_cast<Eigen::Index>(end - begin));
  for (std::size_t j = begin; j < end; ++j) {
    for (int r = 0; r < 6; ++r) z(r, static_cast<Eigen::Index>(j - begin)) = pts[j][static_cast<std::size_t>(r)];
  }
  return z;
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkParams

std::vector<int> make_layer_sizes(int hidden_layers, int neurons) {
  if (hidden_layers < 1 || neurons < 1) {
    throw Error(ErrorKind::invalid_argument, "need at least one hidden layer with one neuron");
  }
  std::vector<int> s{6};
  for (int i = 0; i < hidden_layers; ++i) s.push_back(neurons);
  s.push_back(2);
  return s;
}

NetworkParams NetworkParams::zeros(std::vector<int> sizes, const ParameterBox& box, double length) {
  NetworkParams n;
  n.layer_sizes = std::move(sizes);
  n.box = box;
  n.length = length;
  for (std::size_t l = 0; l + 1 < n.layer_sizes.size(); ++l) {
    n.W.push_back(Mat::Zero(n.layer_sizes[l + 1], n.layer_sizes[l]));
    n.b.push_back(Eigen::VectorXd::Zero(n.layer_sizes[l + 1]));
  }
  n.validate();
  return n;
}

NetworkParams NetworkParams::xavier(std::vector<int> sizes, const ParameterBox& box, double length,
                                   std::uint64_t seed) {
  NetworkParams n = zeros(std::move(sizes), box, length);
  n.seed = seed;
  std::mt19937_64 g(seed);
  for (auto& W : n.W) {
    const double a = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = a * (2.0 * uniform01(g) - 1.0);
    }
  }
  return n;
}

std::size_t NetworkParams::num_params() const {
  std::size_t s = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    s += static_cast<std::size_t>(layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1]);
  }
  return s;
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> t;
  t.reserve(num_params());
  for (std::size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index r = 0; r < W[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < W[l].cols(); ++c) t.push_back(W[l](r, c));
    }
    for (Eigen::Index r = 0; r < b[l].size(); ++r) t.push_back(b[l](r));
  }
  return t;
}

void NetworkParams::unflatten(std::span<const double> theta) {
  if (theta.size() != num_params()) throw Error(ErrorKind::shape_mismatch, "parameter vector size");
  std::size_t k = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index r = 0; r < W[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < W[l].cols(); ++c) W[l](r, c) = theta[k++];
    }
    for (Eigen::Index r = 0; r < b[l].size(); ++r) b[l](r) = theta[k++];
  }
}

void NetworkParams::validate() const {
  if (layer_sizes.size() < 2 || layer_sizes.front() != 6 || layer_sizes.back() != 2) {
    throw Error(ErrorKind::shape_mismatch, "network must map 6 inputs to 2 outputs");
  }
  if (W.size() + 1 != layer_sizes.size() || b.size() != W.size()) {
    throw Error(ErrorKind::shape_mismatch, "layer count does not match layer sizes");
  }
  for (std::size_t l = 0; l < W.size(); ++l) {
    if (W[l].rows() != layer_sizes[l + 1] || W[l].cols() != layer_sizes[l] || b[l].size() != layer_sizes[l + 1]) {
      throw Error(ErrorKind::shape_mismatch, "layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (!W[l].allFinite() || !b[l].allFinite()) {
      throw Error(ErrorKind::non_finite, "layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
  if (!(length > 0.0) || !(u_scale > 0.0) || !(w_scale > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "length and output scales must be positive");
  }
  box.validate();
}

std::array<double, 2> forward(const NetworkParams& net, double x, const ScenarioSample& s) {
  const auto z = net.normalize(x, s);
  Eigen::VectorXd h(6);
  for (int i = 0; i < 6; ++i) h(i) = z[static_cast<std::size_t>(i)];
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    Eigen::VectorXd a = net.W[l] * h + net.b[l];
    h = (l + 1 < net.W.size()) ? Eigen::VectorXd(a.array().tanh()) : a;
  }
  return {h(0) * net.u_scale, h(1) * net.w_scale};
}

// ---------------------------------------------------------------------------
// Collocation

CollocationSet sample_collocation(int n_interior, int n_boundary, const ParameterBox& box, double L,
                                  std::uint64_t seed) {
  if (n_interior < 1 || n_boundary < 1) {
    throw Error(ErrorKind::invalid_argument, "collocation counts must be >= 1");
  }
  box.validate();
  std::mt19937_64 g(seed);
  CollocationSet set;
  set.seed = seed;
  std::array<double, 6> lo{0.0}, hi{L};
  for (int p = 0; p < kNumParams; ++p) {
    lo[static_cast<std::size_t>(p + 1)] = box.lo[static_cast<std::size_t>(p)];
    hi[static_cast<std::size_t>(p + 1)] = box.hi[static_cast<std::size_t>(p)];
  }
  set.interior.resize(6, n_interior);
  for (int d = 0; d < 6; ++d) {
    const auto perm = permutation(g, n_interior);
    for (int i = 0; i < n_interior; ++i) {
      const double u = (perm[static_cast<std::size_t>(i)] + uniform01(g)) / n_interior;
      set.interior(d, i) = lo[static_cast<std::size_t>(d)] + (hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)]) * u;
    }
  }
  set.boundary.resize(6, n_boundary);
  for (int i = 0; i < n_boundary; ++i) set.boundary(0, i) = (i % 2 == 0) ? 0.0 : L;
  for (int d = 1; d < 6; ++d) {
    const auto perm = permutation(g, n_boundary);
    for (int i = 0; i < n_boundary; ++i) {
      const double u = (perm[static_cast<std::size_t>(i)] + uniform01(g)) / n_boundary;
      set.boundary(d, i) = lo[static_cast<std::size_t>(d)] + (hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)]) * u;
    }
  }
  return set;
}

std::vector<ScenarioSample> latin_hypercube(int n, const ParameterBox& box, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "sample count must be >= 1");
  box.validate();
  std::mt19937_64 g(seed);
  std::vector<ScenarioSample> out(static_cast<std::size_t>(n));
  for (int p = 0; p < kNumParams; ++p) {
    const auto perm = permutation(g, n);
    const double lo = box.lo[static_cast<std::size_t>(p)], hi = box.hi[static_cast<std::size_t>(p)];
    for (int i = 0; i < n; ++i) {
      const double u = (perm[static_cast<std::size_t>(i)] + uniform01(g)) / n;
      out[static_cast<std::size_t>(i)].set(p, lo + (hi - lo) * u);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss

namespace {

ScenarioSample sample_from_column(const Eigen::Matrix<double, 6, Eigen::Dynamic>& m, Eigen::Index j) {
  ScenarioSample s;
  for (int p = 0; p < kNumParams; ++p) s.set(p, m(p + 1, j));
  return s;
}

}  // namespace

LossEvaluator::LossEvaluator(const PipeProblem& problem, const CollocationSet& set, const ParameterBox& box,
                             const LossOptions& opts, int threads)
    : problem_(problem), opts_(opts), threads_(threads) {
  if (set.n_interior() < 1 || set.n_boundary() < 1) {
    throw Error(ErrorKind::invalid_argument, "collocation set is empty");
  }
  if (opts.nondimensional) {
    const auto ref = make_spring_law(box.midpoint().soil, problem.spec().D, problem.spec().soil);
    tu_ref_ = ref.Tu;
    pu_ref_ = ref.Pu;
  }
  const double L = problem.length();
  interior_.reserve(static_cast<std::size_t>(set.n_interior()));
  for (Eigen::Index j = 0; j < set.interior.cols(); ++j) {
    const double x = set.interior(0, j);
    const auto s = sample_from_column(set.interior, j);
    interior_.push_back({normalize_inputs(x, s, box, L), make_point_context(x, s, problem, opts.ramp_width)});
  }
  boundary_.reserve(static_cast<std::size_t>(set.n_boundary()));
  for (Eigen::Index j = 0; j < set.boundary.cols(); ++j) {
    boundary_.push_back(normalize_inputs(set.boundary(0, j), sample_from_column(set.boundary, j), box, L));
  }
}

double LossEvaluator::objective(const LossTerms& t) const {
  return opts_.weights[0] * t.L1 + opts_.weights[1] * t.L2 + opts_.weights[2] * t.LBC;
}

LossTerms LossEvaluator::evaluate(const NetworkParams& net, std::span<double> grad) const {
  const bool want_grad = !grad.empty();
  const std::size_t np = net.num_params();
  if (want_grad && grad.size() != np) throw Error(ErrorKind::shape_mismatch, "gradient buffer size");
  const double c1 = 2.0 / net.length;
  const double r1s = 1.0 / tu_ref_, r2s = 1.0 / pu_ref_;
  const int ni = static_cast<int>(interior_.size());
  const int nb = static_cast<int>(boundary_.size());
  const int chunks_i = (ni + kChunk - 1) / kChunk;
  const int chunks_b = (nb + kChunk - 1) / kChunk;
  const int chunks = chunks_i + chunks_b;
  const double wi1 = opts_.weights[0] / ni, wi2 = opts_.weights[1] / ni, wbc = opts_.weights[2] / nb;

  struct Partial {
    double s1 = 0, s2 = 0, sb = 0;
    std::vector<double> g;
    std::string bad;
  };
  std::vector<Partial> parts(static_cast<std::size_t>(chunks));

  parallel_for(chunks, threads_, [&](int ci) {
    Partial& P = parts[static_cast<std::size_t>(ci)];
    if (want_grad) P.g.assign(np, 0.0);
    if (ci < chunks_i) {
      const std::size_t begin = static_cast<std::size_t>(ci) * kChunk;
      const std::size_t end = std::min<std::size_t>(begin + kChunk, interior_.size());
      Batch<4> B;
      B.n = static_cast<int>(end - begin);
      B.c1 = c1;
      B.z.resize(6, B.n);
      for (std::size_t j = begin; j < end; ++j) {
        for (int r = 0; r < 6; ++r) B.z(r, static_cast<Eigen::Index>(j - begin)) = interior_[j].z[static_cast<std::size_t>(r)];
      }
      forward_batch<4>(net, B);
      std::vector<Mat> ybar(5, Mat::Zero(2, B.n));
      PointPhysics phys(problem_, r1s, r2s, opts_.load_factor);
      for (int j = 0; j < B.n; ++j) {
        double u[5], w[5];
        for (int k = 0; k < 5; ++k) {
          u[k] = net.u_scale * B.y[static_cast<std::size_t>(k)](0, j);
          w[k] = net.w_scale * B.y[static_cast<std::size_t>(k)](1, j);
        }
        const auto& pt = interior_[begin + static_cast<std::size_t>(j)];
        const auto r = phys.eval(u, w, pt.ctx);
        if (!std::isfinite(r.r1) || !std::isfinite(r.r2)) {
          if (P.bad.empty()) {
            std::ostringstream msg;
            msg << "non-finite residual at interior point " << (begin + static_cast<std::size_t>(j)) << " (x = " << pt.ctx.x
                << ")";
            P.bad = msg.str();
          }
          continue;
        }
        P.s1 += r.r1 * r.r1;
        P.s2 += r.r2 * r.r2;
        if (want_grad) {
          double ub[5] = {0, 0, 0, 0, 0}, wb[5] = {0, 0, 0, 0, 0};
          phys.adjoint(2.0 * wi1 * r.r1, 2.0 * wi2 * r.r2, ub, wb);
          for (int k = 0; k < 5; ++k) {
            ybar[static_cast<std::size_t>(k)](0, j) = net.u_scale * ub[k];
            ybar[static_cast<std::size_t>(k)](1, j) = net.w_scale * wb[k];
          }
        }
      }
      if (want_grad) backward_batch<4>(net, B, std::move(ybar), P.g);
    } else {
      const std::size_t begin = static_cast<std::size_t>(ci - chunks_i) * kChunk;
      const std::size_t end = std::min<std::size_t>(begin + kChunk, boundary_.size());
      Batch<1> B;
      B.n = static_cast<int>(end - begin);
      B.c1 = c1;
      B.z = normalized_matrix(boundary_, begin, end);
      forward_batch<1>(net, B);
      std::vector<Mat> ybar(2, Mat::Zero(2, B.n));
      for (int j = 0; j < B.n; ++j) {
        const double yu = B.y[0](0, j), yw = B.y[0](1, j), dw = B.y[1](1, j) / c1;
        const double e = yu * yu + yw * yw + dw * dw;
        if (!std::isfinite(e) && P.bad.empty()) {
          P.bad = "non-finite boundary loss at boundary point " + std::to_string(begin + static_cast<std::size_t>(j));
        }
        P.sb += e;
        if (want_grad) {
          ybar[0](0, j) = 2.0 * wbc * yu;
          ybar[0](1, j) = 2.0 * wbc * yw;
          ybar[1](1, j) = 2.0 * wbc * dw / c1;
        }
      }
      if (want_grad) backward_batch<1>(net, B, std::move(ybar), P.g);
    }
  });

  LossTerms t;
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  for (const auto& P : parts) {
    if (!P.bad.empty()) throw Error(ErrorKind::non_finite, P.bad);
    t.L1 += P.s1;
    t.L2 += P.s2;
    t.LBC += P.sb;
    if (want_grad) {
      for (std::size_t i = 0; i < np; ++i) grad[i] += P.g[i];
    }
  }
  t.L1 /= ni;
  t.L2 /= ni;
  t.LBC /= nb;
  t.total = t.L1 + t.L2 + t.LBC;
  return t;
}

LossTerms loss_total(const NetworkParams& net, const CollocationSet& set, const PipeProblem& problem,
                     const LossOptions& opts) {
  return LossEvaluator(problem, set, net.box, opts).evaluate(net);
}

LossTerms loss_total_reference(const NetworkParams& net, const CollocationSet& set, const PipeProblem& problem,
                               const LossOptions& opts, std::span<double> grad) {
  using ad::Jet;
  using ad::Var;
  double tu = 1.0, pu = 1.0;
  if (opts.nondimensional) {
    const auto ref = make_spring_law(net.box.midpoint().soil, problem.spec().D, problem.spec().soil);
    tu = ref.Tu;
    pu = ref.Pu;
  }
  const double L = net.length;
  const double c1 = 2.0 / L;
  LossTerms terms;
  auto loss = [&](std::span<const Var> theta) -> Var {
    Var s1(0.0), s2(0.0), sb(0.0);
    for (Eigen::Index j = 0; j < set.interior.cols(); ++j) {
      const double x = set.interior(0, j);
      const auto s = sample_from_column(set.interior, j);
      const auto z = normalize_inputs(x, s, net.box, L);
      std::array<Jet<Var, 4>, 6> zj;
      zj[0] = Jet<Var, 4>::variable(Var(z[0]), Var(c1));
      for (int i = 1; i < 6; ++i) zj[static_cast<std::size_t>(i)] = Jet<Var, 4>(Var(z[static_cast<std::size_t>(i)]));
      const auto uw = forward<Var>(net, theta, zj);
      auto ctx = make_point_context(x, s, problem, opts.ramp_width);
      ctx.ground.Ug *= opts.load_factor;
      ctx.ground.Wg *= opts.load_factor;
      const auto r = residuals(ctx, uw[0], uw[1], problem);
      const Var r1 = r.R1 / tu, r2 = r.R2 / pu;
      s1 = s1 + r1 * r1;
      s2 = s2 + r2 * r2;
    }
    for (Eigen::Index j = 0; j < set.boundary.cols(); ++j) {
      const auto s = sample_from_column(set.boundary, j);
      const auto z = normalize_inputs(set.boundary(0, j), s, net.box, L);
      std::array<Jet<Var, 1>, 6> zj;
      zj[0] = Jet<Var, 1>::variable(Var(z[0]), Var(c1));
      for (int i = 1; i < 6; ++i) zj[static_cast<std::size_t>(i)] = Jet<Var, 1>(Var(z[static_cast<std::size_t>(i)]));
      const auto uw = forward<Var>(net, theta, zj);
      const Var yu = uw[0][0] / net.u_scale, yw = uw[1][0] / net.w_scale, dw = uw[1][1] / (net.w_scale * c1);
      sb = sb + yu * yu + yw * yw + dw * dw;
    }
    const double ni = static_cast<double>(set.n_interior()), nb = static_cast<double>(set.n_boundary());
    terms.L1 = s1.value() / ni;
    terms.L2 = s2.value() / ni;
    terms.LBC = sb.value() / nb;
    terms.total = terms.L1 + terms.L2 + terms.LBC;
    return s1 * (opts.weights[0] / ni) + s2 * (opts.weights[1] / ni) + sb * (opts.weights[2] / nb);
  };
  const auto theta = net.flatten();
  const auto g = ad::grad(loss, theta);
  if (!grad.empty()) {
    if (grad.size() != g.gradient.size()) throw Error(ErrorKind::shape_mismatch, "gradient buffer size");
    std::copy(g.gradient.begin(), g.gradient.end(), grad.begin());
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(const NetworkParams& theta0, LossEvaluator& loss, const TrainOptions& opts) {
  theta0.validate();
  if (opts.load_stages < 1 || opts.stage_iterations < 0) {
    throw Error(ErrorKind::invalid_argument, "load_stages must be >= 1 and stage_iterations >= 0");
  }
  const auto t0 = std::chrono::steady_clock::now();
  NetworkParams work = theta0;
  std::vector<double> last_x;
  LossTerms last_terms;
  auto objective = [&](std::span<const double> x, std::span<double> g) {
    work.unflatten(x);
    LossTerms t;
    try {
      t = loss.evaluate(work, g);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::non_finite) throw;
      return static_cast<double>(INFINITY);
    }
    last_x.assign(x.begin(), x.end());
    last_terms = t;
    return loss.objective(t);
  };
  TrainReport rep;
  int base = 0;
  double lambda = 1.0;
  auto on_log = [&](int it, std::span<const double> x, double) {
    LossTerms t;
    if (last_x.size() == x.size() && std::equal(x.begin(), x.end(), last_x.begin())) {
      t = last_terms;
    } else {
      work.unflatten(x);
      t = loss.evaluate(work);
    }
    const int global = base + it;
    if (!rep.history.empty() && rep.history.back().iteration == global) rep.history.pop_back();
    rep.history.push_back({global, lambda, t});
  };
  std::vector<double> x = theta0.flatten();
  OptimizeResult res;
  for (int k = 1; k <= opts.load_stages; ++k) {
    lambda = static_cast<double>(k) / opts.load_stages;
    loss.set_load_factor(lambda);
    OptimizerConfig cfg = opts.optimizer;
    if (k > 1) cfg.adam_steps = 0;
    if (k < opts.load_stages) cfg.max_iterations = std::min(cfg.max_iterations, opts.stage_iterations);
    last_x.clear();
    res = minimize(objective, x, cfg, on_log);
    rep.evaluations += res.evaluations;
    base += res.iterations;
    x = res.x;
    if (res.reason == StopReason::non_finite) break;
  }
  TrainResult out{theta0, {}};
  out.params.unflatten(res.x);
  rep.iterations = base;
  rep.reason = res.reason;
  rep.best_objective = res.f;
  rep.terminal = rep.history.empty() ? loss.evaluate(out.params) : rep.history.back().terms;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report = std::move(rep);
  return out;
}

void write_loss_history_csv(std::ostream& os, const TrainReport& r) {
  os << "iteration,load_factor,L1,L2,LBC,total\n";
  const auto prec = os.precision(17);
  for (const auto& h : r.history) {
    os << h.iteration << ',' << h.load_factor << ',' << h.terms.L1 << ',' << h.terms.L2 << ',' << h.terms.LBC << ',' << h.terms.total << '\n';
  }
  os.precision(prec);
}

// ---------------------------------------------------------------------------
// Prediction

namespace {

// Jets of order 2 in x on the uniform grid; columns are grid nodes.
Batch<2> grid_batch(const NetworkParams& net, const ScenarioSample& s, const PipeProblem& problem, int n_grid) {
  if (n_grid < 2) throw Error(ErrorKind::invalid_argument, "need at least two grid nodes");
  const double L = problem.length();
  Batch<2> B;
  B.n = n_grid;
  B.c1 = 2.0 / net.length;
  B.z.resize(6, n_grid);
  for (int i = 0; i < n_grid; ++i) {
    const double x = L * i / (n_grid - 1);
    const auto z = net.normalize(x, s);
    for (int r = 0; r < 6; ++r) B.z(r, i) = z[static_cast<std::size_t>(r)];
  }
  forward_batch<2>(net, B);
  return B;
}

void check_compatible(const NetworkParams& net, const PipeProblem& problem) {
  if (std::abs(net.length - problem.length()) > 1e-12 * problem.length()) {
    throw Error(ErrorKind::invalid_argument, "network was trained for a different pipe length");
  }
}

}  // namespace

StrainExtremes predict_strain_extremes(const NetworkParams& net, const ScenarioSample& s, const PipeProblem& problem,
                                       int n_grid) {
  check_compatible(net, problem);
  const auto B = grid_batch(net, s, problem, n_grid);
  const double zm = problem.grid().z_max();
  const double eps0 = problem.eps_initial();
  StrainExtremes e{-INFINITY, INFINITY};
  for (int i = 0; i < n_grid; ++i) {
    const double ux = net.u_scale * B.y[1](0, i);
    const double wx = net.w_scale * B.y[1](1, i);
    const double wxx = 2.0 * net.w_scale * B.y[2](1, i);
    const double base = eps0 + ux + 0.5 * wx * wx;
    const double a = base - zm * wxx, b = base + zm * wxx;
    e.tensile = std::max({e.tensile, a, b});
    e.compressive = std::min({e.compressive, a, b});
  }
  return e;
}

std::vector<StrainExtremes> predict_strain_extremes(const NetworkParams& net, std::span<const ScenarioSample> samples,
                                                    const PipeProblem& problem, int n_grid, int threads) {
  std::vector<StrainExtremes> out(samples.size());
  parallel_for(static_cast<int>(samples.size()), threads, [&](int i) {
    out[static_cast<std::size_t>(i)] = predict_strain_extremes(net, samples[static_cast<std::size_t>(i)], problem, n_grid);
  });
  return out;
}

FieldSolution predict_fields(const NetworkParams& net, const ScenarioSample& s, const PipeProblem& problem,
                             int n_grid) {
  check_compatible(net, problem);
  const auto B = grid_batch(net, s, problem, n_grid);
  FieldSolution f;
  const auto n = static_cast<std::size_t>(n_grid);
  for (auto* v : {&f.x, &f.u, &f.w, &f.u_x, &f.w_x, &f.w_xx, &f.N, &f.M, &f.eps_top, &f.eps_bottom}) v->resize(n);
  const double zm = problem.grid().z_max();
  f.z_extreme = zm;
  f.eps_max_tensile = -INFINITY;
  f.eps_min_compressive = INFINITY;
  for (int i = 0; i < n_grid; ++i) {
    const auto si = static_cast<std::size_t>(i);
    f.x[si] = problem.length() * i / (n_grid - 1);
    f.u[si] = net.u_scale * B.y[0](0, i);
    f.w[si] = net.w_scale * B.y[0](1, i);
    f.u_x[si] = net.u_scale * B.y[1](0, i);
    f.w_x[si] = net.w_scale * B.y[1](1, i);
    f.w_xx[si] = 2.0 * net.w_scale * B.y[2](1, i);
    const double e = problem.eps_initial() + f.u_x[si] + 0.5 * f.w_x[si] * f.w_x[si];
    const auto st = section_tangent(e, f.w_xx[si], problem.grid(), problem.law());
    f.N[si] = st.N;
    f.M[si] = st.M;
    f.eps_top[si] = e - zm * f.w_xx[si];
    f.eps_bottom[si] = e + zm * f.w_xx[si];
    f.eps_max_tensile = std::max({f.eps_max_tensile, f.eps_top[si], f.eps_bottom[si]});
    f.eps_min_compressive = std::min({f.eps_min_compressive, f.eps_top[si], f.eps_bottom[si]});
  }
  f.converged = true;
  return f;
}

// ---------------------------------------------------------------------------
// Weight file

void write_weights(std::ostream& os, const NetworkParams& net) {
  net.validate();
  os.write("GPRA", 4);
  write_u32(os, kWeightFormatVersion);
  write_u32(os, static_cast<std::uint32_t>(net.layer_sizes.size()));
  for (int s : net.layer_sizes) write_u32(os, static_cast<std::uint32_t>(s));
  write_f64(os, 0.0);
  write_f64(os, net.length);
  for (int p = 0; p < kNumParams; ++p) {
    write_f64(os, net.box.lo[static_cast<std::size_t>(p)]);
    write_f64(os, net.box.hi[static_cast<std::size_t>(p)]);
  }
  write_f64(os, net.u_scale);
  write_f64(os, net.w_scale);
  write_u64(os, net.seed);
  write_u64(os, net.problem_digest);
  const auto theta = net.flatten();
  write_u64(os, theta.size());
  for (double v : theta) write_f64(os, v);
  if (!os) throw Error(ErrorKind::io, "failed writing weight file");
}

NetworkParams read_weights(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "GPRA") throw Error(ErrorKind::io, "not a GPRA weight file");
  const auto version = read_u32(is);
  if (version != kWeightFormatVersion) {
    throw Error(ErrorKind::io, "unsupported weight file version " + std::to_string(version));
  }
  const auto nl = read_u32(is);
  if (nl < 2 || nl > 64) throw Error(ErrorKind::io, "implausible layer count");
  std::vector<int> sizes(nl);
  for (auto& s : sizes) {
    s = static_cast<int>(read_u32(is));
    if (s < 1 || s > 100000) throw Error(ErrorKind::io, "implausible layer size");
  }
  const double x_lo = read_f64(is);
  const double length = read_f64(is);
  if (x_lo != 0.0) throw Error(ErrorKind::io, "x normalisation must start at 0");
  ParameterBox box;
  for (int p = 0; p < kNumParams; ++p) {
    box.lo[static_cast<std::size_t>(p)] = read_f64(is);
    box.hi[static_cast<std::size_t>(p)] = read_f64(is);
  }
  NetworkParams net = NetworkParams::zeros(sizes, box, length);
  net.u_scale = read_f64(is);
  net.w_scale = read_f64(is);
  net.seed = read_u64(is);
  net.problem_digest = read_u64(is);
  const auto count = read_u64(is);
  if (count != net.num_params()) throw Error(ErrorKind::io, "parameter count does not match layer sizes");
  std::vector<double> theta(count);
  for (auto& v : theta) v = read_f64(is);
  net.unflatten(theta);
  net.validate();
  return net;
}

void save_weights(const std::filesystem::path& path, const NetworkParams& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  write_weights(os, net);
}

NetworkParams load_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path.string());
  return read_weights(is);
}

std::uint64_t weights_digest(const NetworkParams& net) {
  std::ostringstream os(std::ios::binary);
  write_weights(os, net);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace gpra
