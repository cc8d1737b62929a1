/// @file nulllag.hpp
/// @brief Algebra of the null-Lagrangian vector Phi(F) = (F, cof F, det F),
/// its F-derivative, and residual diagnostics for the Piola and transport
/// identities.

#pragma once

#include <array>

#include "polytherm/pergrid.hpp"

namespace polytherm {

using Vec3 = std::array<double, 3>;

/// 3x3 real matrix, row-major: (i, a) -> m[3*i + a].
struct Mat3 {
  std::array<double, 9> m{};

  double& operator()(int i, int a) { return m[3 * i + a]; }
  double operator()(int i, int a) const { return m[3 * i + a]; }

  static Mat3 identity() {
    Mat3 I;
    I(0, 0) = I(1, 1) = I(2, 2) = 1.0;
    return I;
  }
  static Mat3 diagonal(double a, double b, double c) {
    Mat3 D;
    D(0, 0) = a;
    D(1, 1) = b;
    D(2, 2) = c;
    return D;
  }
  double frobenius() const {
    double s = 0.0;
    for (double x : m) s += x * x;
    return std::sqrt(s);
  }
  bool operator==(const Mat3&) const = default;
};

/// Extended variable at a point: F (9, row-major), zeta (9, row-major), w.
using ExtVec = std::array<double, kExtComps>;

/// Permutation symbol epsilon_{ijk}, indices 0-based.
inline int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

/// Cofactor matrix, (cof F)_{ia} = (1/2) eps_{ijk} eps_{abc} F_{jb} F_{kc}.
Mat3 cof(const Mat3& F);

/// det F = (1/3) (cof F)_{ia} F_{ia}.
double det(const Mat3& F);

/// Phi(F) = (F, cof F, det F) with the F block first.
ExtVec phi(const Mat3& F);

/// Pairing table of the augmented flux: entry (B, a) holds
/// sum_i dPhi^B/dF_{ia}(F0) v_i.
using DphiPairing = std::array<std::array<double, 3>, kExtComps>;
DphiPairing dphi_apply(const Mat3& F0, const Vec3& v);

/// Contraction against the i-slot of dPhi:
/// out_i = sum_{B,a} dPhi^B/dF_{ia}(F0) g[B][a].
Vec3 dphi_contract(const Mat3& F0, const DphiPairing& g);

/// Raw derivative dPhi^B/dF_{ia}(F0) as one 3x3 matrix per component B.
std::array<Mat3, kExtComps> dphi_tensor(const Mat3& F0);

// ---------------------------------------------------------------------------
// Field-level operations.

Mat3 mat_at(const TensorField& F, std::size_t p);
ExtVec ext_at(const ExtField& xi, std::size_t p);
void set_mat(TensorField& F, std::size_t p, const Mat3& M);
void set_ext(ExtField& xi, std::size_t p, const ExtVec& v);

/// Pointwise cofactor / determinant / Phi of a tensor field.
TensorField cof_field(const TensorField& F);
ScalarField det_field(const TensorField& F);
ExtField phi_field(const TensorField& F);

/// The augmented-flux divergence (A v)^B = sum_a D_a( dPhi^B/dF_{ia}(F0) v_i ).
/// Its F block reduces exactly to gradient(v).
ExtField phi_flux_divergence(const TensorField& F0, const VectorField& v);

/// Exact discrete adjoint of phi_flux_divergence under inner(.,.):
/// (A* m)_i = - sum_{B,a} dPhi^B/dF_{ia}(F0) D_a m^B.
VectorField phi_flux_adjoint(const TensorField& F0, const ExtField& m);

/// Discrete L2 norms of sum_a D_a( dPhi^B/dF_{ia}(F) ) per component B.
/// Exactly zero on the F block; zero to roundoff on the cof block whenever
/// F is a discrete gradient.
std::array<double, kExtComps> piola_residual(const TensorField& F);

struct TransportResiduals {
  double cof_res = 0.0; ///< L2 norm of d_t(cof F) - div(eps eps F v) block
  double det_res = 0.0; ///< L2 norm of d_t(det F) - div(cof F v)
};

/// Residuals of the transport identities between two consecutive states,
/// with the flux evaluated at (F0, v1).
TransportResiduals transport_residual(const TensorField& F0,
                                      const TensorField& F1,
                                      const VectorField& v1, double h);

} // namespace polytherm
