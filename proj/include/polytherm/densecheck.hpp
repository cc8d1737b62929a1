/// @file densecheck.hpp
/// @brief Naive reference implementations for cross-checking the variational
/// step on tiny grids: an independently coded centered-difference stencil,
/// epsilon-tensor dPhi, dense assembly of the reduced Euler-Lagrange system
/// for the quadratic surrogate energy, and a dense Gaussian solve.
///
/// Nothing here calls the production operators; the point is an independent
/// route to the same numbers. Layout conventions (node-major storage, node
/// index i + n0*(j + n1*k), row-major tensors, F/zeta/w extended ordering)
/// are shared by contract.

#pragma once

#include <array>
#include <vector>

namespace polytherm::densecheck {

struct DenseGrid {
  std::array<int, 3> n{};
  std::array<double, 3> dx{};
  int points() const { return n[0] * n[1] * n[2]; }
  int index(int i, int j, int k) const { return i + n[0] * (j + n[1] * k); }
};

/// Dense (19 np) x (3 np) matrix of the constraint map
/// (A v)^B(p) = sum_a D_a( dPhi^B/dF_{ia}(F0) v_i )(p), assembled entry by
/// entry from the stencil. F0 is node-major with 9 comps per node.
std::vector<double> assemble_constraint_matrix(const DenseGrid& g,
                                               const std::vector<double>& F0);

/// Gaussian elimination with partial pivoting; a is n x n row-major,
/// b length n; returns x.
std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b);

/// Direct dense solution of the reduced Euler-Lagrange system of one
/// variational step under the quadratic surrogate e_hat = |xi|^2/2 +
/// eta^2/2 + delta eta:
///     (I + h^2 A^T A) v = v0 - h A^T xi0.
/// v0: 3 comps/node, xi0: 19 comps/node; returns v with 3 comps/node.
std::vector<double> dense_quadratic_step(const DenseGrid& g,
                                         const std::vector<double>& F0,
                                         const std::vector<double>& xi0,
                                         const std::vector<double>& v0,
                                         double h);

} // namespace polytherm::densecheck
