/// @file pergrid.hpp
/// @brief Periodic 3-D lattice, field storage, and discrete differential /
/// integral calculus with exact summation-by-parts.
///
/// All derivative operators are second-order centered differences on a
/// collocated periodic grid. The centered stencil is skew-adjoint under the
/// volume-weighted inner product and commutes with itself across axes, which
/// gives exact discrete integration by parts and exact curl preservation.
/// Reductions use a fixed deterministic pairwise order regardless of the
/// worker count, so every norm and energy series is bitwise reproducible.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polytherm {

/// Uniform periodic lattice on the 3-torus [0,L1)x[0,L2)x[0,L3).
struct GridSpec {
  std::array<int, 3> n{0, 0, 0};            ///< points per axis, each >= 4
  std::array<double, 3> length{0., 0., 0.}; ///< period per axis
  std::array<double, 3> dx{0., 0., 0.};     ///< spacing, dx[a] = length[a]/n[a]

  GridSpec() = default;
  GridSpec(std::array<int, 3> n_, std::array<double, 3> length_);

  std::size_t points() const {
    return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]);
  }
  double cell_volume() const { return dx[0] * dx[1] * dx[2]; }

  /// Flattened index, fastest along axis 0.
  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) +
           std::size_t(n[0]) * (std::size_t(j) + std::size_t(n[1]) * k);
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const int i = int(idx % std::size_t(n[0]));
    idx /= std::size_t(n[0]);
    const int j = int(idx % std::size_t(n[1]));
    const int k = int(idx / std::size_t(n[1]));
    return {i, j, k};
  }
  /// Node position along axis a (0-based) for lattice index i.
  double node(int a, int i) const { return dx[a] * i; }
  std::array<double, 3> position(std::size_t idx) const {
    const auto c = coords(idx);
    return {node(0, c[0]), node(1, c[1]), node(2, c[2])};
  }

  bool operator==(const GridSpec&) const = default;
};

/// Worker count for pointwise loops. Reductions are always evaluated in a
/// fixed serial pairwise order, so results do not depend on this setting.
int worker_count();
void set_worker_count(int w);

/// Runs body(lo, hi) over a partition of [0, n); serial when workers == 1.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

namespace detail {

/// Deterministic pairwise reduction of term(i) over [lo, hi).
template <class Term>
double pairwise_sum(std::size_t lo, std::size_t hi, const Term& term) {
  if (hi - lo <= 16) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

} // namespace detail

/// Grid function with NC real components per node, stored node-major.
template <int NC>
class Field {
 public:
  static constexpr int components = NC;

  Field() = default;
  explicit Field(const GridSpec& g) : grid_(g), v_(g.points() * NC, 0.0) {}

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  std::size_t points() const { return grid_.points(); }

  double& operator()(std::size_t p, int c) { return v_[p * NC + c]; }
  double operator()(std::size_t p, int c) const { return v_[p * NC + c]; }
  double& operator[](std::size_t flat) { return v_[flat]; }
  double operator[](std::size_t flat) const { return v_[flat]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  void fill(double x) { v_.assign(v_.size(), x); }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool operator==(const Field&) const = default;

 private:
  GridSpec grid_;
  std::vector<double> v_;
};

using ScalarField = Field<1>;
using VectorField = Field<3>;
using TensorField = Field<9>; ///< row-major T(i,a) = comp 3*i + a
using ExtField = Field<19>;   ///< F (9, row-major), zeta (9, row-major), w (1)

/// Extended-variable component layout, used consistently everywhere
/// including file output.
inline constexpr int kExtF = 0;     ///< F block start
inline constexpr int kExtZeta = 9;  ///< zeta block start
inline constexpr int kExtW = 18;    ///< w component
inline constexpr int kExtComps = 19;

template <int NC>
Field<NC> make_field(const GridSpec& g,
                     const std::function<std::array<double, NC>(
                         const std::array<double, 3>&)>& f) {
  Field<NC> out(g);
  const std::size_t np = g.points();
  for (std::size_t p = 0; p < np; ++p) {
    const auto val = f(g.position(p));
    for (int c = 0; c < NC; ++c) out(p, c) = val[c];
  }
  return out;
}

template <int NC>
void require_same_grid(const Field<NC>& a, const Field<NC>& b,
                       const char* what) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

// ---------------------------------------------------------------------------
// In-place vector algebra (used by the Krylov loops).

template <int NC>
void axpy(double alpha, const Field<NC>& x, Field<NC>& y) {
  require_same_grid(x, y, "axpy");
  const std::size_t m = x.size();
  for (std::size_t i = 0; i < m; ++i) y[i] += alpha * x[i];
}

template <int NC>
void scale(Field<NC>& x, double alpha) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= alpha;
}

/// out = a + alpha * b
template <int NC>
Field<NC> lincomb(const Field<NC>& a, double alpha, const Field<NC>& b) {
  require_same_grid(a, b, "lincomb");
  Field<NC> out = a;
  axpy(alpha, b, out);
  return out;
}

// ---------------------------------------------------------------------------
// Differential operators.

/// Second-order centered periodic difference along `axis` in 1..3, applied
/// componentwise: D_a f(x) = (f(x + dx_a e_a) - f(x - dx_a e_a)) / (2 dx_a).
template <int NC>
Field<NC> diff(const Field<NC>& f, int axis) {
  if (axis < 1 || axis > 3)
    throw std::out_of_range("diff: axis must be in 1..3");
  const int a = axis - 1;
  const GridSpec& g = f.grid();
  Field<NC> out(g);
  const double inv2dx = 1.0 / (2.0 * g.dx[a]);
  const int n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];

  parallel_for(std::size_t(n2), [&](std::size_t klo, std::size_t khi) {
    std::array<int, 3> c{};
    for (int k = int(klo); k < int(khi); ++k) {
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n0; ++i) {
          c = {i, j, k};
          std::array<int, 3> cp = c, cm = c;
          cp[a] = (c[a] + 1 == g.n[a]) ? 0 : c[a] + 1;
          cm[a] = (c[a] == 0) ? g.n[a] - 1 : c[a] - 1;
          const std::size_t p = g.index(i, j, k);
          const std::size_t pp = g.index(cp[0], cp[1], cp[2]);
          const std::size_t pm = g.index(cm[0], cm[1], cm[2]);
          for (int cc = 0; cc < NC; ++cc)
            out(p, cc) = (f(pp, cc) - f(pm, cc)) * inv2dx;
        }
      }
    }
  });
  return out;
}

/// (gradient v)_{ia} = D_a v_i.
TensorField gradient(const VectorField& v);

/// (divergence T)_i = sum_a D_a T_{ia}; exact negative adjoint of gradient.
VectorField divergence(const TensorField& T);

// ---------------------------------------------------------------------------
// Reductions. All use the fixed pairwise order over node index.

/// vol * sum over nodes.
double integrate(const ScalarField& f);

/// vol * sum over nodes and components of f*g.
template <int NC>
double inner(const Field<NC>& f, const Field<NC>& g) {
  require_same_grid(f, g, "inner");
  const std::size_t np = f.points();
  const double s = detail::pairwise_sum(0, np, [&](std::size_t p) {
    double d = 0.0;
    for (int c = 0; c < NC; ++c) d += f(p, c) * g(p, c);
    return d;
  });
  return f.grid().cell_volume() * s;
}

template <int NC>
double l2_norm(const Field<NC>& f) {
  return std::sqrt(inner(f, f));
}

template <int NC>
double max_abs(const Field<NC>& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
  return m;
}

/// sqrt(||v||^2 + ||grad v||^2), the discrete W^{1,2} norm.
double w1_norm(const VectorField& v);

/// max over (i, a<b) of || D_a F_{ib} - D_b F_{ia} ||_{L2}; zero to roundoff
/// whenever F is a discrete gradient.
double curl_residual(const TensorField& F);

template <int NC>
void require_finite_field(const Field<NC>& f, const char* what) {
  if (!f.all_finite())
    throw std::runtime_error(std::string(what) + ": non-finite field entries");
}

} // namespace polytherm
