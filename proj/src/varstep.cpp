#include "polytherm/varstep.hpp"

#include <cmath>
#include <limits>

namespace polytherm {

TensorField State::deformation_gradient() const {
  TensorField F(grid());
  for (std::size_t p = 0; p < xi.points(); ++p)
    for (int t9 = 0; t9 < 9; ++t9) F(p, t9) = xi(p, kExtF + t9);
  return F;
}

TensorField State::zeta() const {
  TensorField Z(grid());
  for (std::size_t p = 0; p < xi.points(); ++p)
    for (int t9 = 0; t9 < 9; ++t9) Z(p, t9) = xi(p, kExtZeta + t9);
  return Z;
}

ScalarField State::w() const {
  ScalarField W(grid());
  for (std::size_t p = 0; p < xi.points(); ++p) W(p, 0) = xi(p, kExtW);
  return W;
}

State make_state(const Mat3& y_lin, const VectorField& y, const VectorField& v,
                 const ScalarField& eta, double t) {
  if (!(y.grid() == v.grid()) || !(y.grid() == eta.grid()))
    throw std::invalid_argument("make_state: grid mismatch");
  State U;
  U.y_lin = y_lin;
  U.y = y;
  U.v = v;
  U.eta = eta;
  U.t = t;

  TensorField F = gradient(y);
  for (std::size_t p = 0; p < F.points(); ++p)
    for (int t9 = 0; t9 < 9; ++t9) F(p, t9) += y_lin.m[t9];
  U.xi = ExtField(y.grid());
  for (std::size_t p = 0; p < F.points(); ++p)
    set_ext(U.xi, p, phi(mat_at(F, p)));
  return U;
}

StateValidation validate(const State& U) {
  StateValidation rep;
  const TensorField F = U.deformation_gradient();
  rep.curl_residual = curl_residual(F);
  rep.f_norm = l2_norm(F);
  rep.eta_min = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < U.eta.points(); ++p)
    rep.eta_min = std::min(rep.eta_min, U.eta(p, 0));
  rep.gradient_ok = rep.curl_residual <= 1e-12 * rep.f_norm;
  rep.eta_ok = rep.eta_min >= 0.0;
  return rep;
}

ScalarField entropy_update(const ExtField& xi0, const ScalarField& eta0,
                           const ScalarField& r, double h,
                           const EnergyModel& model) {
  if (!(xi0.grid() == eta0.grid()) || !(xi0.grid() == r.grid()))
    throw std::invalid_argument("entropy_update: grid mismatch");
  if (!(h > 0.0)) throw std::invalid_argument("entropy_update: h <= 0");
  ScalarField eta(eta0.grid());
  const std::size_t np = eta0.points();
  for (std::size_t p = 0; p < np; ++p) {
    const double theta0 = model.theta(ext_at(xi0, p), eta0(p, 0));
    eta(p, 0) = eta0(p, 0) + h * (r(p, 0) / theta0);
    if (!(eta(p, 0) >= 0.0))
      throw StepDomainError("entropy_update: eta would become negative; "
                            "reduce h or the heat sink");
  }
  return eta;
}

ExtField constraint_apply(const TensorField& F0, const VectorField& v, double h,
                          const ExtField& xi0) {
  const ExtField rate = phi_flux_divergence(F0, v);
  ExtField xi = xi0;
  const std::size_t m = xi.size();
  for (std::size_t i = 0; i < m; ++i) xi[i] += h * rate[i];
  return xi;
}

VectorField constraint_adjoint(const TensorField& F0, const ExtField& m) {
  return phi_flux_adjoint(F0, m);
}

double total_energy(const State& U, const EnergyModel& model) {
  const ScalarField e = energy_density(model, U.xi, U.eta);
  return 0.5 * inner(U.v, U.v) + integrate(e);
}

namespace {

/// Reduced-objective workspace for one step: eta1 is frozen, xi(v) is affine.
struct ReducedProblem {
  const TensorField& F0;
  const ExtField& xi0;
  const ScalarField& eta1;
  const VectorField& v0;
  const EnergyModel& model;
  double h;

  ExtField xi_of(const VectorField& v) const {
    return constraint_apply(F0, v, h, xi0);
  }

  double objective(const VectorField& v, ExtField& xi_out) const {
    xi_out = xi_of(v);
    const VectorField dv = lincomb(v, -1.0, v0);
    return 0.5 * inner(dv, dv) +
           integrate(energy_density(model, xi_out, eta1));
  }

  /// grad G = (v - v0) + h A* e_xi(xi(v), eta1)
  VectorField gradient_at(const VectorField& v, const ExtField& xi_v) const {
    ExtField e_xi;
    ScalarField theta;
    energy_gradients(model, xi_v, eta1, e_xi, theta);
    VectorField g = phi_flux_adjoint(F0, e_xi);
    scale(g, h);
    axpy(1.0, v, g);
    axpy(-1.0, v0, g);
    return g;
  }

  /// H dv = dv + h^2 A* ( e_xixi(xi_v, eta1) (A dv) )
  VectorField hessian_apply(const VectorField& dv, const ExtField& xi_v) const {
    const ExtField a_dv = phi_flux_divergence(F0, dv);
    const ExtField e_a = energy_hess_xi(model, xi_v, eta1, a_dv);
    VectorField out = phi_flux_adjoint(F0, e_a);
    scale(out, h * h);
    axpy(1.0, dv, out);
    return out;
  }
};

/// Conjugate gradients on the SPD reduced Hessian; fixed deterministic
/// reductions make the iteration bitwise reproducible.
int conjugate_gradient(const ReducedProblem& prob, const ExtField& xi_v,
                       const VectorField& rhs, VectorField& x, double rel_tol,
                       int max_iter) {
  x = VectorField(rhs.grid()); // zero initial guess
  VectorField res = rhs;
  VectorField dir = res;
  double rr = inner(res, res);
  const double target = rel_tol * rel_tol * rr;
  int it = 0;
  while (it < max_iter && rr > target && rr > 0.0) {
    const VectorField hd = prob.hessian_apply(dir, xi_v);
    const double dhd = inner(dir, hd);
    if (!(dhd > 0.0))
      throw StepSolveError("inner CG: curvature is not positive");
    const double alpha = rr / dhd;
    axpy(alpha, dir, x);
    axpy(-alpha, hd, res);
    const double rr_new = inner(res, res);
    const double beta = rr_new / rr;
    scale(dir, beta);
    axpy(1.0, res, dir);
    rr = rr_new;
    ++it;
  }
  return it;
}

} // namespace

std::pair<State, StepReport> solve_step(const State& U0, const ScalarField& r,
                                        const StepConfig& cfg,
                                        const EnergyModel& model,
                                        const VectorField* v_init,
                                        StepTrace* trace) {
  if (!(cfg.h > 0.0)) throw std::invalid_argument("solve_step: h <= 0");
  require_finite_field(U0.xi, "solve_step: xi0");
  require_finite_field(U0.v, "solve_step: v0");

  const double h = cfg.h;
  const TensorField F0 = U0.deformation_gradient();
  const ScalarField eta1 = entropy_update(U0.xi, U0.eta, r, h, model);

  const ReducedProblem prob{F0, U0.xi, eta1, U0.v, model, h};

  VectorField v = v_init ? *v_init : U0.v;
  ExtField xi_v;
  double G = prob.objective(v, xi_v);
  const double tol = cfg.newton_tol * (l2_norm(U0.v) + 1.0);

  StepReport rep;
  rep.energy_before = total_energy(U0, model);

  bool converged = false;
  for (int it = 0; it <= cfg.newton_max; ++it) {
    const VectorField g = prob.gradient_at(v, xi_v);
    const double gnorm = l2_norm(g);
    if (trace) {
      trace->objective.push_back(G);
      trace->grad_norm.push_back(gnorm);
    }
    rep.grad_norm_final = gnorm;
    if (gnorm <= tol) {
      converged = true;
      break;
    }
    if (it == cfg.newton_max) break;

    VectorField dv;
    VectorField rhs = g;
    scale(rhs, -1.0);
    const int cg_iters =
        conjugate_gradient(prob, xi_v, rhs, dv, cfg.cg_tol, cfg.cg_max);
    rep.cg_iters_total += cg_iters;
    if (trace) trace->cg_iters.push_back(cg_iters);

    const double slope = inner(g, dv); // < 0 for an SPD Hessian
    // Below this scale the objective cannot resolve the predicted decrease;
    // accept the full Newton step rather than stall in the backtracking.
    const double fp_floor =
        16.0 * std::numeric_limits<double>::epsilon() * (std::abs(G) + 1.0);
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < cfg.backtrack_max; ++bt) {
      const VectorField v_try = lincomb(v, step, dv);
      ExtField xi_try;
      double G_try;
      try {
        G_try = prob.objective(v_try, xi_try);
      } catch (const ConstitutiveDomainError&) {
        step *= cfg.backtrack_factor; // trial point left the model domain
        continue;
      }
      const bool sufficient = G_try <= G + cfg.armijo_c * step * slope;
      const bool at_fp_floor =
          std::abs(slope) * step <= fp_floor && G_try <= G + fp_floor;
      if (std::isfinite(G_try) && (sufficient || at_fp_floor)) {
        v = v_try;
        xi_v = std::move(xi_try);
        G = G_try;
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted)
      throw StepSolveError("solve_step: line search failed to make progress");
    if (trace) trace->step_length.push_back(step);
    rep.newton_iters = it + 1;
  }
  if (!converged)
    throw StepSolveError(
        "solve_step: Newton did not reach tolerance within newton_max "
        "iterations (h too large or model ill-conditioned)");

  State U1;
  U1.y_lin = U0.y_lin;
  U1.y = lincomb(U0.y, h, v);
  U1.v = v;
  U1.xi = constraint_apply(F0, v, h, U0.xi);
  U1.eta = eta1;
  U1.t = U0.t + h;
  require_finite_field(U1.xi, "solve_step: xi1");

  rep.energy_after = total_energy(U1, model);
  rep.eta_min = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < eta1.points(); ++p)
    rep.eta_min = std::min(rep.eta_min, eta1(p, 0));

  // Relative energy I(U0 | U1) and the dissipation-lemma margin with
  // c = min(1, c_e).
  {
    ExtField e_xi;
    ScalarField theta1;
    energy_gradients(model, U1.xi, U1.eta, e_xi, theta1);

    const VectorField dv = lincomb(U0.v, -1.0, U1.v);
    const ExtField dxi = lincomb(U0.xi, -1.0, U1.xi);
    const ScalarField deta = lincomb(U0.eta, -1.0, U1.eta);
    const ScalarField e0 = energy_density(model, U0.xi, U0.eta);
    const ScalarField e1 = energy_density(model, U1.xi, U1.eta);
    ScalarField rel(U0.grid());
    for (std::size_t p = 0; p < rel.points(); ++p) {
      double s = e0(p, 0) - e1(p, 0) - theta1(p, 0) * deta(p, 0);
      for (int c = 0; c < kExtComps; ++c) s -= e_xi(p, c) * dxi(p, c);
      rel(p, 0) = s;
    }
    rep.relative_energy = 0.5 * inner(dv, dv) + integrate(rel);

    const double c_diss = std::min(1.0, model.meta().convexity);
    const double delta_sq =
        inner(dv, dv) + inner(dxi, dxi) + inner(deta, deta);
    ScalarField heat(U0.grid());
    for (std::size_t p = 0; p < heat.points(); ++p) {
      const double theta0 = model.theta(ext_at(U0.xi, p), U0.eta(p, 0));
      heat(p, 0) = theta1(p, 0) * r(p, 0) / theta0;
    }
    rep.dissipation_margin = rep.energy_before - rep.energy_after -
                             c_diss * delta_sq - h * integrate(heat);

    // Discrete Euler-Lagrange residual ||(v-v0)/h - div(e_xi . dPhi(F0))||.
    TensorField stress(U0.grid());
    for (std::size_t p = 0; p < stress.points(); ++p) {
      const Mat3 Fp = mat_at(F0, p);
      const ExtVec ex = ext_at(e_xi, p);
      Mat3 S{};
      // F block
      for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 3; ++a) S(i, a) = ex[kExtF + 3 * i + a];
      // cof block: e_zeta^{(k,g)} * eps_{ijk} eps_{abg} F_{jb}
      for (int k = 0; k < 3; ++k) {
        const int i1 = (k + 1) % 3, i2 = (k + 2) % 3;
        for (int g = 0; g < 3; ++g) {
          const int a1 = (g + 1) % 3, a2 = (g + 2) % 3;
          const double z = ex[kExtZeta + 3 * k + g];
          S(i1, a1) += z * Fp(i2, a2);
          S(i1, a2) -= z * Fp(i2, a1);
          S(i2, a1) -= z * Fp(i1, a2);
          S(i2, a2) += z * Fp(i1, a1);
        }
      }
      // det row: e_w * cof(F0)
      const Mat3 C = cof(Fp);
      for (int t9 = 0; t9 < 9; ++t9) S.m[t9] += ex[kExtW] * C.m[t9];
      set_mat(stress, p, S);
    }
    const VectorField div_stress = divergence(stress);
    VectorField el = lincomb(U1.v, -1.0, U0.v);
    scale(el, 1.0 / h);
    axpy(-1.0, div_stress, el);
    rep.el_residual = l2_norm(el);
  }

  return {std::move(U1), rep};
}

double reduced_objective(const State& U0, const ScalarField& r,
                         const StepConfig& cfg, const EnergyModel& model,
                         const VectorField& v) {
  const TensorField F0 = U0.deformation_gradient();
  const ScalarField eta1 = entropy_update(U0.xi, U0.eta, r, cfg.h, model);
  const ReducedProblem prob{F0, U0.xi, eta1, U0.v, model, cfg.h};
  ExtField xi_v;
  return prob.objective(v, xi_v);
}

VectorField reduced_gradient(const State& U0, const ScalarField& r,
                             const StepConfig& cfg, const EnergyModel& model,
                             const VectorField& v) {
  const TensorField F0 = U0.deformation_gradient();
  const ScalarField eta1 = entropy_update(U0.xi, U0.eta, r, cfg.h, model);
  const ReducedProblem prob{F0, U0.xi, eta1, U0.v, model, cfg.h};
  return prob.gradient_at(v, prob.xi_of(v));
}

double feasibility_residual(const State& U0, const State& U1, double h) {
  const ExtField expected =
      constraint_apply(U0.deformation_gradient(), U1.v, h, U0.xi);
  double worst = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i)
    worst = std::max(worst, std::abs(U1.xi[i] - expected[i]));
  return worst;
}

double state_delta_sq(const State& U0, const State& U1) {
  const VectorField dv = lincomb(U1.v, -1.0, U0.v);
  const ExtField dxi = lincomb(U1.xi, -1.0, U0.xi);
  const ScalarField deta = lincomb(U1.eta, -1.0, U0.eta);
  return inner(dv, dv) + inner(dxi, dxi) + inner(deta, deta);
}

double heat_supply_integral(const State& U0, const State& U1,
                            const ScalarField& r, double h,
                            const EnergyModel& model) {
  ScalarField heat(U0.grid());
  for (std::size_t p = 0; p < heat.points(); ++p) {
    const double theta0 = model.theta(ext_at(U0.xi, p), U0.eta(p, 0));
    const double theta1 = model.theta(ext_at(U1.xi, p), U1.eta(p, 0));
    heat(p, 0) = theta1 * r(p, 0) / theta0;
  }
  return h * integrate(heat);
}

double entropy_identity_residual(const State& U0, const State& U1,
                                 const ScalarField& r, double h,
                                 const EnergyModel& model) {
  double worst = 0.0;
  for (std::size_t p = 0; p < U0.eta.points(); ++p) {
    const double theta0 = model.theta(ext_at(U0.xi, p), U0.eta(p, 0));
    const double s = r(p, 0) / theta0;
    const double num = std::abs((U1.eta(p, 0) - U0.eta(p, 0)) - h * s);
    const double den =
        std::abs(U1.eta(p, 0)) + std::abs(U0.eta(p, 0)) + std::abs(h * s);
    if (den > 0.0) worst = std::max(worst, num / den);
    else worst = std::max(worst, num);
  }
  return worst;
}

} // namespace polytherm
