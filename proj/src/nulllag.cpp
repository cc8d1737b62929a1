#include "polytherm/nulllag.hpp"

namespace polytherm {

Mat3 cof(const Mat3& F) {
  Mat3 C;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      // eps_{ijk} eps_{abc} F_{jb} F_{kc} over the two cyclic completions
      C(i, a) = F(j, b) * F(k, c) - F(j, c) * F(k, b);
    }
  }
  return C;
}

double det(const Mat3& F) {
  const Mat3 C = cof(F);
  double s = 0.0;
  for (int t = 0; t < 9; ++t) s += C.m[t] * F.m[t];
  return s / 3.0;
}

ExtVec phi(const Mat3& F) {
  ExtVec out{};
  const Mat3 C = cof(F);
  for (int t = 0; t < 9; ++t) {
    out[kExtF + t] = F.m[t];
    out[kExtZeta + t] = C.m[t];
  }
  out[kExtW] = det(F);
  return out;
}

DphiPairing dphi_apply(const Mat3& F0, const Vec3& v) {
  DphiPairing out{};
  // F block: dPhi^{(j,b)}/dF_{ia} = delta_{ij} delta_{ab}
  for (int j = 0; j < 3; ++j)
    for (int b = 0; b < 3; ++b) out[3 * j + b][b] = v[j];
  // cof block: dPhi^{(k,g)}/dF_{ia} = eps_{ijk} eps_{abg} F0_{jb}
  for (int k = 0; k < 3; ++k) {
    const int i1 = (k + 1) % 3, i2 = (k + 2) % 3; // eps_{i j k} nonzero pairs
    for (int g = 0; g < 3; ++g) {
      const int a1 = (g + 1) % 3, a2 = (g + 2) % 3;
      // eps_{i1 i2 k} = eps_{a1 a2 g} = +1, antisymmetric completions
      out[kExtZeta + 3 * k + g][a1] =
          F0(i2, a2) * v[i1] - F0(i1, a2) * v[i2];
      out[kExtZeta + 3 * k + g][a2] =
          F0(i1, a1) * v[i2] - F0(i2, a1) * v[i1];
    }
  }
  // det row: cof(F0)_{ia} v_i
  const Mat3 C = cof(F0);
  for (int a = 0; a < 3; ++a)
    out[kExtW][a] = C(0, a) * v[0] + C(1, a) * v[1] + C(2, a) * v[2];
  return out;
}

Vec3 dphi_contract(const Mat3& F0, const DphiPairing& g) {
  Vec3 out{0.0, 0.0, 0.0};
  // F block
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) out[i] += g[3 * i + a][a];
  // cof block
  for (int k = 0; k < 3; ++k) {
    const int i1 = (k + 1) % 3, i2 = (k + 2) % 3;
    for (int gg = 0; gg < 3; ++gg) {
      const int a1 = (gg + 1) % 3, a2 = (gg + 2) % 3;
      const double* row = g[kExtZeta + 3 * k + gg].data();
      out[i1] += F0(i2, a2) * row[a1] - F0(i2, a1) * row[a2];
      out[i2] += F0(i1, a1) * row[a2] - F0(i1, a2) * row[a1];
    }
  }
  // det row
  const Mat3 C = cof(F0);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) out[i] += C(i, a) * g[kExtW][a];
  return out;
}

std::array<Mat3, kExtComps> dphi_tensor(const Mat3& F0) {
  std::array<Mat3, kExtComps> out{};
  for (int j = 0; j < 3; ++j)
    for (int b = 0; b < 3; ++b) out[3 * j + b](j, b) = 1.0;
  for (int k = 0; k < 3; ++k) {
    const int i1 = (k + 1) % 3, i2 = (k + 2) % 3;
    for (int g = 0; g < 3; ++g) {
      const int a1 = (g + 1) % 3, a2 = (g + 2) % 3;
      Mat3& M = out[kExtZeta + 3 * k + g];
      M(i1, a1) = F0(i2, a2);
      M(i1, a2) = -F0(i2, a1);
      M(i2, a1) = -F0(i1, a2);
      M(i2, a2) = F0(i1, a1);
    }
  }
  out[kExtW] = cof(F0);
  return out;
}

Mat3 mat_at(const TensorField& F, std::size_t p) {
  Mat3 M;
  for (int t = 0; t < 9; ++t) M.m[t] = F(p, t);
  return M;
}

ExtVec ext_at(const ExtField& xi, std::size_t p) {
  ExtVec v;
  for (int c = 0; c < kExtComps; ++c) v[c] = xi(p, c);
  return v;
}

void set_mat(TensorField& F, std::size_t p, const Mat3& M) {
  for (int t = 0; t < 9; ++t) F(p, t) = M.m[t];
}

void set_ext(ExtField& xi, std::size_t p, const ExtVec& v) {
  for (int c = 0; c < kExtComps; ++c) xi(p, c) = v[c];
}

TensorField cof_field(const TensorField& F) {
  TensorField out(F.grid());
  const std::size_t np = F.points();
  parallel_for(np, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) set_mat(out, p, cof(mat_at(F, p)));
  });
  return out;
}

ScalarField det_field(const TensorField& F) {
  ScalarField out(F.grid());
  const std::size_t np = F.points();
  parallel_for(np, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) out(p, 0) = det(mat_at(F, p));
  });
  return out;
}

ExtField phi_field(const TensorField& F) {
  ExtField out(F.grid());
  const std::size_t np = F.points();
  parallel_for(np, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) set_ext(out, p, phi(mat_at(F, p)));
  });
  return out;
}

namespace {

/// Pointwise pairing table as a 57-component field, layout (p, 3*B + a).
Field<57> flux_table(const TensorField& F0, const VectorField& v) {
  if (!(F0.grid() == v.grid()))
    throw std::invalid_argument("phi flux: grid mismatch");
  Field<57> flux(F0.grid());
  const std::size_t np = F0.points();
  parallel_for(np, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const DphiPairing tab =
          dphi_apply(mat_at(F0, p), Vec3{v(p, 0), v(p, 1), v(p, 2)});
      for (int B = 0; B < kExtComps; ++B)
        for (int a = 0; a < 3; ++a) flux(p, 3 * B + a) = tab[B][a];
    }
  });
  return flux;
}

} // namespace

ExtField phi_flux_divergence(const TensorField& F0, const VectorField& v) {
  const Field<57> flux = flux_table(F0, v);
  ExtField out(F0.grid());
  for (int axis = 1; axis <= 3; ++axis) {
    const Field<57> d = diff(flux, axis);
    const int a = axis - 1;
    const std::size_t np = out.points();
    for (std::size_t p = 0; p < np; ++p)
      for (int B = 0; B < kExtComps; ++B) out(p, B) += d(p, 3 * B + a);
  }
  return out;
}

VectorField phi_flux_adjoint(const TensorField& F0, const ExtField& m) {
  if (!(F0.grid() == m.grid()))
    throw std::invalid_argument("phi flux adjoint: grid mismatch");
  const std::array<ExtField, 3> dm = {diff(m, 1), diff(m, 2), diff(m, 3)};
  VectorField out(F0.grid());
  const std::size_t np = F0.points();
  parallel_for(np, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      DphiPairing g{};
      for (int B = 0; B < kExtComps; ++B)
        for (int a = 0; a < 3; ++a) g[B][a] = dm[a](p, B);
      const Vec3 r = dphi_contract(mat_at(F0, p), g);
      for (int i = 0; i < 3; ++i) out(p, i) = -r[i];
    }
  });
  return out;
}

std::array<double, kExtComps> piola_residual(const TensorField& F) {
  std::array<double, kExtComps> out{};
  const GridSpec& g = F.grid();
  const std::size_t np = F.points();

  // F block: dPhi/dF is the constant identity pairing.
  for (int B = 0; B < 9; ++B) {
    TensorField P(g);
    const int j = B / 3, b = B % 3;
    for (std::size_t p = 0; p < np; ++p) P(p, 3 * j + b) = 1.0;
    out[B] = l2_norm(divergence(P));
  }

  // cof block: dPhi^{(k,g)}/dF_{ia} = eps_{ijk} eps_{abg} F_{jb}.
  for (int k = 0; k < 3; ++k) {
    const int i1 = (k + 1) % 3, i2 = (k + 2) % 3;
    for (int gg = 0; gg < 3; ++gg) {
      const int a1 = (gg + 1) % 3, a2 = (gg + 2) % 3;
      TensorField P(g);
      for (std::size_t p = 0; p < np; ++p) {
        const Mat3 M = mat_at(F, p);
        P(p, 3 * i1 + a1) = M(i2, a2);
        P(p, 3 * i1 + a2) = -M(i2, a1);
        P(p, 3 * i2 + a1) = -M(i1, a2);
        P(p, 3 * i2 + a2) = M(i1, a1);
      }
      out[kExtZeta + 3 * k + gg] = l2_norm(divergence(P));
    }
  }

  // det row: dPhi^det/dF = cof F.
  out[kExtW] = l2_norm(divergence(cof_field(F)));
  return out;
}

TransportResiduals transport_residual(const TensorField& F0,
                                      const TensorField& F1,
                                      const VectorField& v1, double h) {
  if (!(F0.grid() == F1.grid()))
    throw std::invalid_argument("transport_residual: grid mismatch");
  if (!(h > 0.0)) throw std::invalid_argument("transport_residual: h <= 0");
  const ExtField Av = phi_flux_divergence(F0, v1);
  const TensorField C0 = cof_field(F0), C1 = cof_field(F1);
  const ScalarField w0 = det_field(F0), w1 = det_field(F1);

  TensorField rc(F0.grid());
  ScalarField rd(F0.grid());
  const std::size_t np = F0.points();
  for (std::size_t p = 0; p < np; ++p) {
    for (int t = 0; t < 9; ++t)
      rc(p, t) = (C1(p, t) - C0(p, t)) / h - Av(p, kExtZeta + t);
    rd(p, 0) = (w1(p, 0) - w0(p, 0)) / h - Av(p, kExtW);
  }
  return {l2_norm(rc), l2_norm(rd)};
}

} // namespace polytherm
