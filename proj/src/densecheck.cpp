#include "polytherm/densecheck.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace polytherm::densecheck {

namespace {

int eps(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

/// dPhi^B/dF_{ia} at one node, straight from the epsilon formulas.
std::array<std::array<std::array<double, 3>, 3>, 19>
dphi_naive(const double* F) {
  std::array<std::array<std::array<double, 3>, 3>, 19> out{};
  for (int j = 0; j < 3; ++j)
    for (int b = 0; b < 3; ++b)
      out[std::size_t(3 * j + b)][std::size_t(j)][std::size_t(b)] = 1.0;
  for (int k = 0; k < 3; ++k)
    for (int g = 0; g < 3; ++g)
      for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 3; ++a) {
          double s = 0.0;
          for (int j = 0; j < 3; ++j)
            for (int b = 0; b < 3; ++b)
              s += eps(i, j, k) * eps(a, b, g) * F[3 * j + b];
          out[std::size_t(9 + 3 * k + g)][std::size_t(i)][std::size_t(a)] = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int b = 0; b < 3; ++b)
          for (int k = 0; k < 3; ++k)
            for (int g = 0; g < 3; ++g)
              s += 0.5 * eps(i, j, k) * eps(a, b, g) * F[3 * j + b] *
                   F[3 * k + g];
      out[18][std::size_t(i)][std::size_t(a)] = s;
    }
  return out;
}

} // namespace

std::vector<double> assemble_constraint_matrix(const DenseGrid& g,
                                               const std::vector<double>& F0) {
  const int np = g.points();
  if (int(F0.size()) != 9 * np)
    throw std::invalid_argument("assemble_constraint_matrix: bad F0 size");
  const int rows = 19 * np, cols = 3 * np;
  std::vector<double> A(std::size_t(rows) * std::size_t(cols), 0.0);

  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const int p = g.index(i, j, k);
        for (int axis = 0; axis < 3; ++axis) {
          std::array<int, 3> cp{i, j, k}, cm{i, j, k};
          cp[std::size_t(axis)] = (cp[std::size_t(axis)] + 1) % g.n[std::size_t(axis)];
          cm[std::size_t(axis)] =
              (cm[std::size_t(axis)] + g.n[std::size_t(axis)] - 1) % g.n[std::size_t(axis)];
          const int qp = g.index(cp[0], cp[1], cp[2]);
          const int qm = g.index(cm[0], cm[1], cm[2]);
          const double w = 1.0 / (2.0 * g.dx[std::size_t(axis)]);
          const auto dp_p = dphi_naive(F0.data() + 9 * qp);
          const auto dp_m = dphi_naive(F0.data() + 9 * qm);
          for (int B = 0; B < 19; ++B)
            for (int vi = 0; vi < 3; ++vi) {
              const std::size_t row = std::size_t(19 * p + B);
              A[row * std::size_t(cols) + std::size_t(3 * qp + vi)] +=
                  w * dp_p[std::size_t(B)][std::size_t(vi)][std::size_t(axis)];
              A[row * std::size_t(cols) + std::size_t(3 * qm + vi)] -=
                  w * dp_m[std::size_t(B)][std::size_t(vi)][std::size_t(axis)];
            }
        }
      }
  return A;
}

std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  if (a.size() != n * n) throw std::invalid_argument("dense_solve: bad shape");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == 0.0)
      throw std::runtime_error("dense_solve: singular matrix");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    const double d = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t rr = n; rr-- > 0;) {
    double s = b[rr];
    for (std::size_t c = rr + 1; c < n; ++c) s -= a[rr * n + c] * x[c];
    x[rr] = s / a[rr * n + rr];
  }
  return x;
}

std::vector<double> dense_quadratic_step(const DenseGrid& g,
                                         const std::vector<double>& F0,
                                         const std::vector<double>& xi0,
                                         const std::vector<double>& v0,
                                         double h) {
  const int np = g.points();
  const std::size_t rows = std::size_t(19) * std::size_t(np);
  const std::size_t cols = std::size_t(3) * std::size_t(np);
  if (xi0.size() != rows || v0.size() != cols)
    throw std::invalid_argument("dense_quadratic_step: bad input sizes");

  const std::vector<double> A = assemble_constraint_matrix(g, F0);

  // M = I + h^2 A^T A, rhs = v0 - h A^T xi0.
  std::vector<double> M(cols * cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) M[c * cols + c] = 1.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* Ar = A.data() + r * cols;
    for (std::size_t c1 = 0; c1 < cols; ++c1) {
      if (Ar[c1] == 0.0) continue;
      const double f = h * h * Ar[c1];
      for (std::size_t c2 = 0; c2 < cols; ++c2) M[c1 * cols + c2] += f * Ar[c2];
    }
  }
  std::vector<double> rhs = v0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* Ar = A.data() + r * cols;
    const double f = h * xi0[r];
    if (f == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) rhs[c] -= f * Ar[c];
  }
  return dense_solve(std::move(M), std::move(rhs));
}

} // namespace polytherm::densecheck
