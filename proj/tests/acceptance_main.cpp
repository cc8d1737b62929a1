/// @file acceptance_main.cpp
/// @brief End-to-end acceptance suite. Each criterion prints one PASS/FAIL
/// line with the measured quantity and its budget; the exit status is the
/// number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "polytherm/cli.hpp"
#include "polytherm/densecheck.hpp"
#include "polytherm/diagnostics.hpp"

using namespace polytherm;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, double value, double budget,
            const char* sense = "<=") {
  std::printf("[%s] criterion %2d: %-46s (%s %s %.3e, measured %.6e)\n",
              pass ? "PASS" : "FAIL", id, name, pass ? "ok" : "violated",
              sense, budget, value);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

RunConfig wave_config(std::array<int, 3> n, double h, double T) {
  RunConfig cfg;
  cfg.grid_n = n;
  cfg.init.preset = "smooth-wave";
  cfg.step.h = h;
  cfg.T = T;
  return cfg;
}

VectorField random_vector(const GridSpec& g, std::mt19937_64& rng,
                          double amp) {
  std::uniform_real_distribution<double> u(-amp, amp);
  VectorField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

// 1. Equilibrium fixed point: uniform state, r = 0, 100 steps on 8^3.
void criterion_equilibrium() {
  RunConfig cfg;
  cfg.grid_n = {8, 8, 8};
  const auto model = make_model(cfg.model);
  const State init = make_initial_state(cfg);
  StepConfig sc;
  sc.h = 1e-3;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.1, sc, *model);
  double dev = traj.failure ? std::numeric_limits<double>::infinity() : 0.0;
  for (const State& U : traj.states) {
    dev = std::max(dev, max_abs(lincomb(U.v, -1.0, init.v)));
    dev = std::max(dev, max_abs(lincomb(U.xi, -1.0, init.xi)));
    dev = std::max(dev, max_abs(lincomb(U.eta, -1.0, init.eta)));
    dev = std::max(dev, max_abs(lincomb(U.y, -1.0, init.y)));
  }
  report(1, "equilibrium fixed point (100 steps, 8^3)", dev <= 1e-12, dev,
         1e-12);
}

// 2. Quadratic-surrogate oracle: one step vs a dense direct solve on 4^3.
void criterion_dense_oracle() {
  const GridSpec g({4, 4, 4}, {1.0, 1.0, 1.0});
  std::mt19937_64 rng(2024);
  const VectorField y = random_vector(g, rng, 0.05);
  const VectorField v0 = random_vector(g, rng, 0.5);
  ScalarField eta0(g);
  eta0.fill(1.0);
  const State U0 = make_state(Mat3::identity(), y, v0, eta0, 0.0);
  const QuadraticEnergy model(0.1);
  StepConfig sc;
  sc.h = 0.05;
  sc.newton_tol = 1e-12;
  sc.cg_tol = 1e-13;
  sc.cg_max = 2000;
  ScalarField r(g);
  const auto [U1, rep] = solve_step(U0, r, sc, model);
  densecheck::DenseGrid dg{{4, 4, 4}, {0.25, 0.25, 0.25}};
  const std::vector<double> vd = densecheck::dense_quadratic_step(
      dg, U0.deformation_gradient().values(), U0.xi.values(), v0.values(),
      sc.h);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < vd.size(); ++i) {
    num += (U1.v[i] - vd[i]) * (U1.v[i] - vd[i]);
    den += vd[i] * vd[i];
  }
  const double rel = std::sqrt(num / den);
  report(2, "quadratic-surrogate dense oracle (4^3)", rel <= 1e-10, rel,
         1e-10);
}

// 3. Uniqueness: two Newton starts agree on the smooth-wave preset.
void criterion_uniqueness() {
  RunConfig cfg = wave_config({16, 16, 16}, 1e-3, 0.0);
  const auto model = make_model(cfg.model);
  const State U0 = make_initial_state(cfg);
  ScalarField r(U0.grid());
  std::mt19937_64 rng(7);
  VectorField zero(U0.grid());
  VectorField noisy = U0.v;
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += u(rng);
  const auto [Ua, ra] = solve_step(U0, r, cfg.step, *model, &zero);
  const auto [Ub, rb] = solve_step(U0, r, cfg.step, *model, &noisy);
  const double dev =
      l2_norm(lincomb(Ua.v, -1.0, Ub.v)) / (l2_norm(Ua.v) + 1.0);
  report(3, "uniqueness: two Newton starts agree in v", dev <= 1e-9, dev,
         1e-9);
}

// 4/5. Energy dissipation and constraint preservation on the long
// smooth-wave run: 16^3, h = 1e-3, 200 steps, r = 0.
void criterion_dissipation_and_constraints() {
  RunConfig cfg = wave_config({16, 16, 16}, 1e-3, 0.2);
  const auto model = make_model(cfg.model);
  const State init = make_initial_state(cfg);
  const Trajectory traj =
      run(init, zero_heat(init.grid()), cfg.T, cfg.step, *model);
  if (traj.failure) {
    report(4, "energy dissipation (200 steps, 16^3)", false,
           std::numeric_limits<double>::infinity(), 0.0, ">=");
    report(5, "constraint preservation", false,
           std::numeric_limits<double>::infinity(), 0.0);
    return;
  }
  const DissipationCertificate cert = dissipation_certificate(traj, *model);
  bool energy_ok = cert.pass;
  for (int j = 1; j <= traj.steps(); ++j) {
    const double e0 = total_energy(traj.states[std::size_t(j) - 1], *model);
    const double e1 = total_energy(traj.states[std::size_t(j)], *model);
    if (!(e1 <= e0 + cert.tol_d[std::size_t(j) - 1])) energy_ok = false;
  }
  report(4, "energy dissipation + Lemma certificate, c=min(1,c_e)",
         energy_ok, cert.worst_margin, 0.0, ">=");

  double worst_curl = 0.0, worst_feas = 0.0;
  for (const State& U : traj.states) {
    const StateValidation val = validate(U);
    worst_curl =
        std::max(worst_curl, val.curl_residual / std::max(val.f_norm, 1e-300));
  }
  for (int j = 1; j <= traj.steps(); ++j)
    worst_feas = std::max(
        worst_feas, feasibility_residual(traj.states[std::size_t(j) - 1],
                                         traj.states[std::size_t(j)],
                                         traj.h()));
  const bool ok = worst_curl <= 1e-12 && worst_feas == 0.0;
  report(5, "curl residual <= 1e-12 ||F|| and exact feasibility", ok,
         std::max(worst_curl, worst_feas), 1e-12);
}

// 6. Entropy identity on a heated run.
void criterion_entropy_identity() {
  RunConfig cfg = wave_config({16, 16, 16}, 1e-3, 0.02);
  cfg.heat.preset = "bump";
  cfg.heat.amplitude = 0.5;
  const auto model = make_model(cfg.model);
  const State init = make_initial_state(cfg);
  const HeatSupplier heat = make_heat_supplier(cfg);
  const Trajectory traj = run(init, heat, cfg.T, cfg.step, *model);
  double worst = traj.failure ? std::numeric_limits<double>::infinity() : 0.0;
  for (int j = 1; j <= traj.steps(); ++j) {
    const State& U0 = traj.states[std::size_t(j) - 1];
    const ScalarField r = heat(j, U0.t);
    worst = std::max(worst,
                     entropy_identity_residual(
                         U0, traj.states[std::size_t(j)], r, traj.h(), *model));
  }
  report(6, "entropy identity pointwise residual (heated run)",
         worst <= 1e-13, worst, 1e-13);
}

// 7. Derivative consistency of the constitutive model and dPhi.
void criterion_derivatives() {
  const PolyconvexEnergy e;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> u0(0.0, 2.0);
  const double step = 1e-5;
  double worst_grad = 0.0, worst_sym = 0.0, worst_cof = 0.0;
  for (int s = 0; s < 100; ++s) {
    ExtVec xi;
    for (double& x : xi) x = u(rng);
    const double eta = u0(rng);
    const EnergyDerivs d = e.grad(xi, eta);
    for (int c = 0; c < kExtComps; ++c) {
      ExtVec xp = xi, xm = xi;
      xp[std::size_t(c)] += step;
      xm[std::size_t(c)] -= step;
      const double fd = (e.eval(xp, eta) - e.eval(xm, eta)) / (2.0 * step);
      worst_grad = std::max(worst_grad, std::abs(fd - d.e_xi[std::size_t(c)]) /
                                            (1.0 + std::abs(fd)));
    }
    const double fd_eta =
        (e.eval(xi, eta + step) - e.eval(xi, eta - step)) / (2.0 * step);
    worst_grad = std::max(worst_grad,
                          std::abs(fd_eta - d.theta) / (1.0 + std::abs(fd_eta)));

    ExtVec d1, d2, h1, h2;
    for (double& x : d1) x = u(rng);
    for (double& x : d2) x = u(rng);
    double e1 = u(rng), e2 = u(rng), he1 = 0.0, he2 = 0.0;
    e.hess_vec(xi, eta, d1, e1, h1, he1);
    e.hess_vec(xi, eta, d2, e2, h2, he2);
    double p12 = he1 * e2, p21 = he2 * e1, scale = 1.0;
    for (int c = 0; c < kExtComps; ++c) {
      p12 += h1[std::size_t(c)] * d2[std::size_t(c)];
      p21 += h2[std::size_t(c)] * d1[std::size_t(c)];
      scale += std::abs(h1[std::size_t(c)]) + std::abs(h2[std::size_t(c)]);
    }
    worst_sym = std::max(worst_sym, std::abs(p12 - p21) / scale);

    // d det / dF = cof by central differences
    Mat3 F;
    for (double& x : F.m) x = u(rng);
    const Mat3 C = cof(F);
    for (int t = 0; t < 9; ++t) {
      Mat3 Fp = F, Fm = F;
      Fp.m[std::size_t(t)] += step;
      Fm.m[std::size_t(t)] -= step;
      const double fd = (det(Fp) - det(Fm)) / (2.0 * step);
      worst_cof = std::max(worst_cof, std::abs(fd - C.m[std::size_t(t)]) /
                                          (1.0 + std::abs(fd)));
    }
  }
  report(7, "derivative consistency (grad 1e-6, sym 1e-10, cof 1e-6)",
         worst_grad <= 1e-6 && worst_sym <= 1e-10 && worst_cof <= 1e-6,
         std::max({worst_grad, worst_sym * 1e4, worst_cof}), 1e-6);
}

// 8. Drift convergence proxy + interpolant gap bound. The horizon is kept
// short: the drift's h-independent spatial floor accumulates secularly, so
// long runs bury the O(h) signal the study measures.
void criterion_drift() {
  const std::array<double, 3> hs = {4e-3, 2e-3, 1e-3};
  const double T = 0.1;
  std::vector<Trajectory> trajs;
  RunConfig base = wave_config({16, 16, 16}, hs[0], T);
  base.init.amplitude = 0.01;
  base.init.velocity_amplitude = 0.25;
  const auto model = make_model(base.model);
  const State init = make_initial_state(base);
  bool ran = true;
  for (const double h : hs) {
    StepConfig sc = base.step;
    sc.h = h;
    trajs.push_back(run(init, zero_heat(init.grid()), T, sc, *model));
    if (trajs.back().failure) ran = false;
  }
  if (!ran) {
    report(8, "drift convergence proxy", false,
           std::numeric_limits<double>::infinity(), 0.8, ">=");
    return;
  }
  std::vector<const Trajectory*> ptrs;
  for (const Trajectory& t : trajs) ptrs.push_back(&t);
  const DriftCertificate cert = drift_certificate(ptrs);
  const double worst_order = cert.zeta_orders.empty()
                                 ? 0.0
                                 : *std::min_element(cert.zeta_orders.begin(),
                                                     cert.zeta_orders.end());
  std::printf("      drift ||zeta - cof F||(T): %.6e %.6e %.6e  orders %.3f %.3f\n",
              cert.zeta_final[0], cert.zeta_final[1], cert.zeta_final[2],
              cert.zeta_orders[0], cert.zeta_orders[1]);

  bool gap_ok = true;
  double worst_gap_ratio = 0.0;
  for (const Trajectory& traj : trajs) {
    const double gap = interpolant_gap_F(traj);
    const double bound = std::sqrt(traj.h() * stability_bound(traj, *model));
    worst_gap_ratio = std::max(worst_gap_ratio, gap / bound);
    if (!(gap <= bound)) gap_ok = false;
  }
  report(8, "drift order >= 0.8 and gap <= sqrt(hE)",
         cert.pass && gap_ok, worst_order, 0.8, ">=");
  std::printf("      interpolant gap / sqrt(hE) worst ratio: %.3f\n",
              worst_gap_ratio);
}

// 9. Relative-entropy self-convergence vs h/8 references.
void criterion_relative_entropy() {
  const std::array<double, 3> hs = {4e-3, 2e-3, 1e-3};
  const double T = 0.04;
  RunConfig base = wave_config({8, 8, 8}, hs[0], T);
  const auto model = make_model(base.model);
  const State init = make_initial_state(base);
  std::vector<double> maxrel;
  bool envelope_ok = true;
  double fit_residual = 0.0;
  for (const double h : hs) {
    StepConfig sc = base.step;
    sc.h = h;
    const Trajectory traj = run(init, zero_heat(init.grid()), T, sc, *model);
    StepConfig scf = base.step;
    scf.h = h / 8.0;
    const Trajectory fine = run(init, zero_heat(init.grid()), T, scf, *model);
    if (traj.failure || fine.failure) {
      report(9, "relative-entropy self-convergence", false,
             std::numeric_limits<double>::infinity(), 0.8, ">=");
      return;
    }
    const auto ref_at = [&fine](double t) { return interp_linear(fine, t); };
    const RelEntropySeries series =
        relative_entropy_vs_reference(traj, ref_at, *model, 3.0);
    maxrel.push_back(
        *std::max_element(series.value.begin(), series.value.end()));
    envelope_ok = envelope_ok && series.envelope_ok;
    fit_residual = std::max(fit_residual, series.max_log_residual);
  }
  const auto orders = observed_orders(maxrel);
  const double worst =
      *std::min_element(orders.begin(), orders.end());
  std::printf("      max_t I_rel: %.6e %.6e %.6e  orders %.3f %.3f  fit residual %.3f\n",
              maxrel[0], maxrel[1], maxrel[2], orders[0], orders[1],
              fit_residual);
  report(9, "relative-entropy order >= 0.8 under fitted envelope",
         worst >= 0.8 && envelope_ok, worst, 0.8, ">=");
}

// 10. Piola residual order on frozen analytic gradients. The wave vector is
// anisotropic: for equal k_a dx_a the stencil defect cancels identically
// under the epsilon antisymmetrization, leaving only machine noise.
void criterion_piola() {
  std::vector<double> cof_res, det_res;
  for (const int n : {8, 16, 32}) {
    const GridSpec g({n, n, n}, {1.0, 1.0, 1.0});
    const TensorField F = analytic_cross_gradient(g, 0.05, {1, 1, 2});
    const auto res = piola_residual(F);
    double c2 = 0.0;
    for (int b = kExtZeta; b < kExtW; ++b)
      c2 += res[std::size_t(b)] * res[std::size_t(b)];
    cof_res.push_back(std::sqrt(c2));
    det_res.push_back(res[kExtW]);
  }
  const auto oc = observed_orders(cof_res);
  const auto od = observed_orders(det_res);
  const double worst = std::min(
      {oc[0], oc[1], od[0], od[1]});
  report(10, "Piola residual order >= 1.8 (8->16->32)", worst >= 1.8, worst,
         1.8, ">=");
}

// 11. Bound-lemma probes: finite and stable under sample doubling, M = 3.
void criterion_bound_probes() {
  const PolyconvexEnergy model;
  const BoundProbeStability st = bound_probes_stable(model, 3.0, 800, 2026);
  const double worst =
      std::max({st.doubled.coercive_far, st.doubled.coercive_near,
                st.doubled.flux_stress, st.doubled.rel_stress,
                st.doubled.rel_theta, st.doubled.flux_velocity,
                st.doubled.theta_ratio});
  std::printf("      probe maxima: far %.3e near %.3e C1 %.3e C2 %.3e C3 %.3e C4 %.3e C5 %.3e\n",
              st.doubled.coercive_far, st.doubled.coercive_near,
              st.doubled.flux_stress, st.doubled.rel_stress,
              st.doubled.rel_theta, st.doubled.flux_velocity,
              st.doubled.theta_ratio);
  report(11, "bound-lemma ratios finite and doubling-stable (M=3)", st.pass,
         worst, std::numeric_limits<double>::infinity());
}

} // namespace

int main() {
  std::printf("polytherm acceptance suite\n");
  criterion_equilibrium();
  criterion_dense_oracle();
  criterion_uniqueness();
  criterion_dissipation_and_constraints();
  criterion_entropy_identity();
  criterion_derivatives();
  criterion_drift();
  criterion_relative_entropy();
  criterion_piola();
  criterion_bound_probes();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
