/// @file varstep.hpp
/// @brief One time step of the variational scheme: explicit entropy update,
/// affine constraint elimination, and Newton-Krylov solution of the reduced
/// strictly convex minimization in the velocity.
///
/// The constrained problem
///     min  1/2 ||v - v0||^2 + int e_hat(xi, eta)
///     s.t. (xi - xi0)/h = A v,   (eta - eta0)/h = r / theta_hat(xi0, eta0)
/// has affine constraints that are explicit in (xi, eta), so it reduces to an
/// unconstrained strictly convex problem in v alone. Feasibility of the
/// returned state is exact by construction, and F stays a discrete gradient
/// because the F block of A v is exactly gradient(v).

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "polytherm/constitutive.hpp"
#include "polytherm/nulllag.hpp"
#include "polytherm/pergrid.hpp"

namespace polytherm {

struct StepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Entropy update left the constitutive domain (eta < 0 at some node).
struct StepDomainError : StepError {
  using StepError::StepError;
};
/// Newton failed to reach tolerance within the iteration budget.
struct StepSolveError : StepError {
  using StepError::StepError;
};

/// Discrete unknown at one time level. The motion is y(x) = y_lin * x + y(x)
/// with y_lin a constant matrix (the torus average of the deformation
/// gradient; y = x is not a periodic field) and y the periodic displacement.
struct State {
  Mat3 y_lin = Mat3::identity();
  VectorField y;   ///< periodic part of the motion
  VectorField v;   ///< velocity
  ExtField xi;     ///< extended variable (F, zeta, w)
  ScalarField eta; ///< specific entropy, >= 0 pointwise
  double t = 0.0;

  const GridSpec& grid() const { return xi.grid(); }
  TensorField deformation_gradient() const; ///< F block of xi
  TensorField zeta() const;
  ScalarField w() const;
};

/// Builds xi = (F, cof F, det F) from the discrete gradient of the motion.
State make_state(const Mat3& y_lin, const VectorField& y, const VectorField& v,
                 const ScalarField& eta, double t = 0.0);

struct StateValidation {
  double curl_residual = 0.0;
  double f_norm = 0.0;
  double eta_min = 0.0;
  bool gradient_ok = false; ///< curl residual <= 1e-12 * ||F||
  bool eta_ok = false;
  bool ok() const { return gradient_ok && eta_ok; }
};

StateValidation validate(const State& U);

struct StepConfig {
  double h = 1e-3;          ///< time step, > 0
  double newton_tol = 1e-9; ///< on ||grad G|| relative to ||v0|| + 1
  int newton_max = 50;
  double cg_tol = 1e-10; ///< relative residual of the inner CG solves
  int cg_max = 500;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  int backtrack_max = 40;
};

struct StepReport {
  int newton_iters = 0;
  int cg_iters_total = 0;
  double grad_norm_final = 0.0;
  double el_residual = 0.0; ///< ||(v-v0)/h - div(e_xi . dPhi(F0))||
  double energy_before = 0.0;
  double energy_after = 0.0;
  double relative_energy = 0.0;   ///< I(U0 | U1)
  double dissipation_margin = 0.0; ///< E0 - E1 - c||dU||^2 - heat, c = min(1, c_e)
  double eta_min = 0.0;
};

/// Optional per-iteration instrumentation of the Newton loop.
struct StepTrace {
  std::vector<double> objective;
  std::vector<double> grad_norm;
  std::vector<double> step_length;
  std::vector<int> cg_iters;
};

/// Explicit entropy half of the scheme: eta = eta0 + h r / theta_hat(xi0, eta0).
/// Rejects the step (StepDomainError) if any node would go negative.
ScalarField entropy_update(const ExtField& xi0, const ScalarField& eta0,
                           const ScalarField& r, double h,
                           const EnergyModel& model);

/// xi = xi0 + h sum_a D_a( dPhi^B/dF_{ia}(F0) v_i ).
ExtField constraint_apply(const TensorField& F0, const VectorField& v, double h,
                          const ExtField& xi0);

/// Exact discrete adjoint of the linear map v -> constraint_apply(F0,v,1,0).
VectorField constraint_adjoint(const TensorField& F0, const ExtField& m);

/// One accepted step of the scheme. Throws StepDomainError / StepSolveError.
/// When v_init is given it seeds the Newton iteration (default: v0).
std::pair<State, StepReport> solve_step(const State& U0, const ScalarField& r,
                                        const StepConfig& cfg,
                                        const EnergyModel& model,
                                        const VectorField* v_init = nullptr,
                                        StepTrace* trace = nullptr);

/// Total energy int( |v|^2/2 + e_hat(xi, eta) ).
double total_energy(const State& U, const EnergyModel& model);

/// Reduced objective G(v) = ||v - v0||^2/2 + int e_hat(xi0 + h A v, eta1)
/// and its gradient, with eta1 the explicit entropy update; the quantities
/// Newton minimizes, exposed for property tests and the invariant suite.
double reduced_objective(const State& U0, const ScalarField& r,
                         const StepConfig& cfg, const EnergyModel& model,
                         const VectorField& v);
VectorField reduced_gradient(const State& U0, const ScalarField& r,
                             const StepConfig& cfg, const EnergyModel& model,
                             const VectorField& v);

/// Max-abs residual of the discrete constraint xi1 = xi0 + h A v1; exactly
/// zero for states produced by solve_step.
double feasibility_residual(const State& U0, const State& U1, double h);

/// Worst relative residual of the entropy identity
/// (eta1 - eta0)/h = r/theta_hat(xi0, eta0), normalized on the h-multiplied
/// form (|eta1| + |eta0| + h|r/theta0| per node).
double entropy_identity_residual(const State& U0, const State& U1,
                                 const ScalarField& r, double h,
                                 const EnergyModel& model);

/// ||U1 - U0||^2 = ||dv||^2 + ||dxi||^2 + ||deta||^2 in the grid L2 norms.
double state_delta_sq(const State& U0, const State& U1);

/// h * int theta_hat(xi1, eta1) r / theta_hat(xi0, eta0).
double heat_supply_integral(const State& U0, const State& U1,
                            const ScalarField& r, double h,
                            const EnergyModel& model);

} // namespace polytherm
