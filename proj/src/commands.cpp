#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>

#include "polytherm/cli.hpp"
#include "polytherm/densecheck.hpp"

namespace polytherm {

namespace {

namespace fs = std::filesystem;

struct CheckTable {
  struct Row {
    std::string name;
    double value;
    double budget;
    bool pass;
  };
  std::vector<Row> rows;

  void add(const std::string& name, double value, double budget, bool pass) {
    rows.push_back({name, value, budget, pass});
  }
  /// pass iff |value| <= budget
  void add_below(const std::string& name, double value, double budget) {
    add(name, value, budget, std::abs(value) <= budget);
  }
  /// pass iff value >= budget
  void add_above(const std::string& name, double value, double budget) {
    add(name, value, budget, value >= budget);
  }

  bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const Row& r) { return r.pass; });
  }

  void print(std::ostream& log) const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-44s %13s %13s %s\n", "check",
                  "value", "budget", "status");
    log << buf;
    for (const Row& r : rows) {
      std::snprintf(buf, sizeof buf, "  %-44s %13.4e %13.4e %s\n",
                    r.name.c_str(), r.value, r.budget,
                    r.pass ? "PASS" : "FAIL");
      log << buf;
    }
  }
};

VectorField random_vector_field(const GridSpec& g, std::mt19937_64& rng,
                                double amp = 1.0) {
  std::uniform_real_distribution<double> u(-amp, amp);
  VectorField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

template <int NC>
Field<NC> random_field(const GridSpec& g, std::mt19937_64& rng,
                       double amp = 1.0) {
  std::uniform_real_distribution<double> u(-amp, amp);
  Field<NC> f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

} // namespace

// ---------------------------------------------------------------------------

int cmd_run(const RunConfig& cfg, std::ostream& log) {
  set_worker_count(cfg.workers);
  const auto model = make_model(cfg.model);
  const State init = make_initial_state(cfg);
  const HeatSupplier heat = make_heat_supplier(cfg);

  Trajectory traj = run(init, heat, cfg.T, cfg.step, *model);

  fs::create_directories(cfg.out_dir);
  write_energy_csv(traj, *model, cfg.out_dir + "/energy.csv");
  write_drift_csv(traj, cfg.out_dir + "/drift.csv");
  write_solver_csv(traj, cfg.out_dir + "/solver.csv");
  checkpoint_save(traj, cfg.out_dir + "/checkpoint.bin");

  if (traj.failure) {
    std::ofstream fail(cfg.out_dir + "/failure.txt", std::ios::trunc);
    fail << "step " << traj.failure->step << ": " << traj.failure->what
         << "\n";
    log << "run FAILED at step " << traj.failure->step << ": "
        << traj.failure->what << "\n";
    log << "partial outputs written to " << cfg.out_dir << "\n";
    return 3;
  }

  CheckTable table;
  const DissipationCertificate diss =
      dissipation_certificate(traj, *model);
  table.add("dissipation margin (worst, +tol_d)", diss.worst_margin, 0.0,
            diss.pass);

  double worst_curl = 0.0, worst_feas = 0.0;
  double worst_eta = std::numeric_limits<double>::infinity();
  bool curl_ok = true;
  for (const State& U : traj.states) {
    const StateValidation v = validate(U);
    worst_curl = std::max(worst_curl,
                          v.curl_residual / std::max(v.f_norm, 1e-300));
    worst_eta = std::min(worst_eta, v.eta_min);
    curl_ok = curl_ok && v.gradient_ok;
  }
  table.add("curl residual / ||F|| (worst)", worst_curl, 1e-12, curl_ok);

  double worst_entropy = 0.0;
  for (int j = 1; j <= traj.steps(); ++j) {
    const State& U0 = traj.states[std::size_t(j) - 1];
    const State& U1 = traj.states[std::size_t(j)];
    worst_feas =
        std::max(worst_feas, feasibility_residual(U0, U1, traj.h()));
    const ScalarField r = heat(j, U0.t);
    worst_entropy = std::max(
        worst_entropy, entropy_identity_residual(U0, U1, r, traj.h(), *model));
  }
  table.add_below("constraint feasibility residual (worst)", worst_feas, 0.0);
  table.add_below("entropy identity residual (worst, rel)", worst_entropy,
                  1e-13);
  table.add("eta_min over trajectory", worst_eta, 0.0, worst_eta >= 0.0);

  table.print(log);
  log << (table.all_pass() ? "run: all certificates PASS\n"
                           : "run: certificate FAILURE\n");
  return table.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------

int cmd_check(unsigned long long seed, int workers, std::ostream& log) {
  set_worker_count(workers);
  std::mt19937_64 rng(seed);
  CheckTable table;

  const GridSpec g({8, 8, 8}, {1.0, 1.25, 0.75});

  { // summation-by-parts: skew-adjointness of D_a
    const ScalarField f = random_field<1>(g, rng);
    const ScalarField q = random_field<1>(g, rng);
    double worst = 0.0;
    for (int axis = 1; axis <= 3; ++axis) {
      const double lhs = inner(diff(f, axis), q) + inner(f, diff(q, axis));
      worst = std::max(worst, std::abs(lhs) / (l2_norm(f) * l2_norm(q)));
    }
    table.add_below("grid: skew-adjointness of D_a", worst, 1e-12);
  }
  { // commutation of stencils
    const ScalarField f = random_field<1>(g, rng);
    double worst = 0.0;
    for (int a = 1; a <= 3; ++a)
      for (int b = a + 1; b <= 3; ++b) {
        const ScalarField ab = diff(diff(f, a), b);
        const ScalarField ba = diff(diff(f, b), a);
        worst = std::max(worst, l2_norm(lincomb(ab, -1.0, ba)) /
                                    std::max(l2_norm(ab), 1e-300));
      }
    table.add_below("grid: commutation D_a D_b = D_b D_a", worst, 1e-12);
  }
  { // divergence theorem and grad/div adjointness
    const TensorField T = random_field<9>(g, rng);
    const VectorField u = random_vector_field(g, rng);
    ScalarField div_dot_one(g);
    const VectorField d = divergence(T);
    for (std::size_t p = 0; p < d.points(); ++p)
      div_dot_one(p, 0) = d(p, 0) + d(p, 1) + d(p, 2);
    table.add_below("grid: divergence theorem", integrate(div_dot_one),
                    1e-12 * (1.0 + l2_norm(T)));
    const double adj = inner(divergence(T), u) + inner(T, gradient(u));
    table.add_below("grid: <div T, u> + <T, grad u>",
                    adj / (l2_norm(T) * l2_norm(u)), 1e-12);
  }
  { // cof / det identities at random matrices
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_ct = 0.0, worst_det = 0.0;
    for (int s = 0; s < 64; ++s) {
      Mat3 F;
      for (double& x : F.m) x = u(rng);
      const Mat3 C = cof(F);
      const double dF = det(F);
      // standard cofactor expansion as the independent route
      const double d2 = F(0, 0) * (F(1, 1) * F(2, 2) - F(1, 2) * F(2, 1)) -
                        F(0, 1) * (F(1, 0) * F(2, 2) - F(1, 2) * F(2, 0)) +
                        F(0, 2) * (F(1, 0) * F(2, 1) - F(1, 1) * F(2, 0));
      worst_det = std::max(worst_det,
                           std::abs(dF - d2) / std::max(1.0, std::abs(d2)));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double s2 = 0.0;
          for (int k = 0; k < 3; ++k) s2 += C(k, i) * F(k, j);
          worst_ct = std::max(worst_ct, std::abs(s2 - (i == j ? dF : 0.0)) /
                                            std::max(1.0, std::abs(dF)));
        }
    }
    table.add_below("nulllag: cof(F)^T F = det F I", worst_ct, 1e-12);
    table.add_below("nulllag: det vs cofactor expansion", worst_det, 1e-13);
  }
  { // dPhi finite-difference oracle
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    const double step = 1e-5;
    for (int s = 0; s < 16; ++s) {
      Mat3 F0;
      Vec3 v;
      for (double& x : F0.m) x = u(rng);
      for (double& x : v) x = u(rng);
      const DphiPairing tab = dphi_apply(F0, v);
      for (int a = 0; a < 3; ++a) {
        // direction G_{ia} = v_i delta_{a, fixed}: contract dPhi along i
        Mat3 Gp = F0, Gm = F0;
        for (int i = 0; i < 3; ++i) {
          Gp(i, a) += step * v[i];
          Gm(i, a) -= step * v[i];
        }
        const ExtVec pp = phi(Gp), pm = phi(Gm);
        for (int B = 0; B < kExtComps; ++B) {
          const double fd = (pp[B] - pm[B]) / (2.0 * step);
          worst = std::max(worst, std::abs(fd - tab[B][a]) /
                                      (1.0 + std::abs(fd)));
        }
      }
    }
    table.add_below("nulllag: dPhi vs finite differences", worst, 1e-6);
  }
  { // Piola residual structure for a discrete gradient
    std::mt19937_64 rng2(seed ^ 0x9e3779b97f4a7c15ULL);
    const VectorField y = random_vector_field(g, rng2, 0.05);
    TensorField F = gradient(y);
    for (std::size_t p = 0; p < F.points(); ++p)
      for (int i = 0; i < 3; ++i) F(p, 3 * i + i) += 1.0;
    const auto res = piola_residual(F);
    double f_block = 0.0, cof_block = 0.0;
    for (int B = 0; B < 9; ++B) f_block = std::max(f_block, res[std::size_t(B)]);
    for (int B = 9; B < 18; ++B)
      cof_block = std::max(cof_block, res[std::size_t(B)]);
    table.add_below("nulllag: Piola residual, F block (exact)", f_block, 0.0);
    table.add_below("nulllag: Piola residual, cof block (discrete grad)",
                    cof_block, 1e-10);
  }
  { // constitutive hypothesis checks
    const PolyconvexEnergy model;
    const HypothesisReport ok = check_hypotheses(model, 400, seed);
    table.add("constitutive: default polyconvex model hypotheses",
              ok.hess_min - ok.convexity, 0.0, ok.passed());
    const NonconvexProbeEnergy bad;
    const HypothesisReport flagged = check_hypotheses(bad, 400, seed);
    table.add("constitutive: nonconvex probe flagged", flagged.hess_min, 0.0,
              !flagged.hessian_ok() && flagged.hess_min < 0.0);
  }
  { // gradient and Hessian consistency of the default polyconvex model
    const PolyconvexEnergy model;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> u0(0.0, 2.0);
    double worst_g = 0.0, worst_sym = 0.0;
    const double step = 1e-5;
    for (int s = 0; s < 100; ++s) {
      ExtVec xi;
      for (double& x : xi) x = 2.0 * u(rng);
      const double eta = u0(rng);
      const EnergyDerivs d = model.grad(xi, eta);
      for (int c = 0; c < kExtComps; ++c) {
        ExtVec xp = xi, xm = xi;
        xp[c] += step;
        xm[c] -= step;
        const double fd =
            (model.eval(xp, eta) - model.eval(xm, eta)) / (2.0 * step);
        worst_g = std::max(worst_g,
                           std::abs(fd - d.e_xi[c]) / (1.0 + std::abs(fd)));
      }
      const double fd_eta =
          (model.eval(xi, eta + step) - model.eval(xi, eta - step)) /
          (2.0 * step);
      worst_g = std::max(worst_g,
                         std::abs(fd_eta - d.theta) / (1.0 + std::abs(fd_eta)));
      // Hessian symmetry through two random directions
      ExtVec d1, d2, h1, h2;
      for (double& x : d1) x = u(rng);
      for (double& x : d2) x = u(rng);
      double e1 = u(rng), e2 = u(rng), he1 = 0.0, he2 = 0.0;
      model.hess_vec(xi, eta, d1, e1, h1, he1);
      model.hess_vec(xi, eta, d2, e2, h2, he2);
      double p12 = he1 * e2, p21 = he2 * e1, scale = 1.0;
      for (int c = 0; c < kExtComps; ++c) {
        p12 += h1[c] * d2[c];
        p21 += h2[c] * d1[c];
        scale += std::abs(h1[c]) + std::abs(h2[c]);
      }
      worst_sym = std::max(worst_sym, std::abs(p12 - p21) / scale);
    }
    table.add_below("constitutive: grad vs finite differences", worst_g, 1e-6);
    table.add_below("constitutive: Hessian action symmetry", worst_sym, 1e-10);
  }
  { // exact adjoint identity of the constraint map
    const VectorField v = random_vector_field(g, rng);
    const ExtField m = random_field<kExtComps>(g, rng);
    const VectorField y = random_vector_field(g, rng, 0.05);
    TensorField F0 = gradient(y);
    for (std::size_t p = 0; p < F0.points(); ++p)
      for (int i = 0; i < 3; ++i) F0(p, 3 * i + i) += 1.0;
    const double lhs = inner(phi_flux_divergence(F0, v), m);
    const double rhs = inner(v, phi_flux_adjoint(F0, m));
    const double scale = std::abs(lhs) + std::abs(rhs) + 1.0;
    table.add_below("varstep: adjoint identity <Av,m> = <v,A*m>",
                    (lhs - rhs) / scale, 1e-12);
  }
  { // equilibrium fixed point
    RunConfig cfg;
    cfg.grid_n = {4, 4, 4};
    cfg.T = 0.02;
    cfg.step.h = 1e-3;
    const auto model = make_model(cfg.model);
    const State init = make_initial_state(cfg);
    const Trajectory traj =
        run(init, zero_heat(init.grid()), cfg.T, cfg.step, *model);
    double dev = 0.0;
    if (traj.failure) dev = std::numeric_limits<double>::infinity();
    else {
      const State& last = traj.states.back();
      dev = std::max(
          {max_abs(lincomb(last.v, -1.0, init.v)),
           max_abs(lincomb(last.xi, -1.0, init.xi)),
           max_abs(lincomb(last.eta, -1.0, init.eta)),
           max_abs(lincomb(last.y, -1.0, init.y))});
    }
    table.add_below("varstep: equilibrium fixed point (20 steps)", dev, 1e-12);
  }
  { // quadratic-surrogate dense oracle on 4^3
    const GridSpec g4({4, 4, 4}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng3(seed ^ 0xc2b2ae3d27d4eb4fULL);
    const VectorField y = random_vector_field(g4, rng3, 0.05);
    const VectorField v0 = random_vector_field(g4, rng3, 0.5);
    ScalarField eta0(g4);
    eta0.fill(1.0);
    const State U0 = make_state(Mat3::identity(), y, v0, eta0, 0.0);
    const QuadraticEnergy quad;
    StepConfig sc;
    sc.h = 0.05;
    sc.newton_tol = 1e-12;
    sc.cg_tol = 1e-13;
    sc.cg_max = 2000;
    ScalarField r(g4);
    const auto [U1, rep] = solve_step(U0, r, sc, quad);

    densecheck::DenseGrid dg{{4, 4, 4}, {0.25, 0.25, 0.25}};
    const std::vector<double> vd = densecheck::dense_quadratic_step(
        dg, U0.deformation_gradient().values(), U0.xi.values(), v0.values(),
        sc.h);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < vd.size(); ++i) {
      num += (U1.v[i] - vd[i]) * (U1.v[i] - vd[i]);
      den += vd[i] * vd[i];
    }
    table.add_below("varstep: dense oracle, quadratic surrogate",
                    std::sqrt(num / den), 1e-10);
  }
  { // uniqueness of the minimizer: two Newton starts agree
    RunConfig cfg;
    cfg.grid_n = {8, 8, 8};
    cfg.init.preset = "smooth-wave";
    cfg.T = 0.0;
    const auto model = make_model(cfg.model);
    const State U0 = make_initial_state(cfg);
    StepConfig sc = cfg.step;
    sc.h = 2e-3;
    ScalarField r(U0.grid());
    VectorField zero_guess(U0.grid());
    VectorField noisy = U0.v;
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += u(rng);
    const auto [Ua, ra] = solve_step(U0, r, sc, *model, &zero_guess);
    const auto [Ub, rb] = solve_step(U0, r, sc, *model, &noisy);
    const double dev =
        l2_norm(lincomb(Ua.v, -1.0, Ub.v)) / (l2_norm(Ua.v) + 1.0);
    table.add_below("varstep: uniqueness (two Newton starts)", dev, 1e-9);
  }

  table.print(log);
  log << (table.all_pass() ? "check: all invariants PASS\n"
                           : "check: invariant FAILURE\n");
  return table.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------

namespace {

struct StudyRow {
  std::string quantity;
  int level = 0;
  double param = 0.0;
  double value = 0.0;
  std::string verdict; ///< empty for data rows
};

void write_study_csv(const std::vector<StudyRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "quantity,level,param,value,verdict\n";
  char buf[64];
  for (const StudyRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.param);
    out << r.quantity << "," << r.level << "," << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << buf << "," << r.verdict << "\n";
  }
}

} // namespace

int cmd_study(const RunConfig& cfg, std::ostream& log) {
  set_worker_count(cfg.workers);
  if (cfg.study.levels < 3)
    throw ConfigError("study: at least 3 refinement levels required");
  const auto model = make_model(cfg.model);
  const State init = make_initial_state(cfg);
  const HeatSupplier heat = make_heat_supplier(cfg);

  std::vector<StudyRow> rows;
  bool all_pass = true;

  // h-refinement runs.
  std::vector<Trajectory> trajs;
  for (int lvl = 0; lvl < cfg.study.levels; ++lvl) {
    StepConfig sc = cfg.step;
    sc.h = cfg.study.base_h / std::pow(2.0, lvl);
    log << "study: level " << lvl << " h = " << sc.h << "\n";
    Trajectory traj = run(init, heat, cfg.study.T, sc, *model);
    if (traj.failure)
      throw std::runtime_error("study: run failed at level " +
                               std::to_string(lvl) + ": " +
                               traj.failure->what);
    trajs.push_back(std::move(traj));
  }

  std::vector<const Trajectory*> ptrs;
  for (const Trajectory& t : trajs) ptrs.push_back(&t);
  const DriftCertificate drift = drift_certificate(ptrs);
  for (int lvl = 0; lvl < cfg.study.levels; ++lvl) {
    rows.push_back({"zeta_drift_T", lvl, drift.h[std::size_t(lvl)],
                    drift.zeta_final[std::size_t(lvl)], ""});
    rows.push_back({"w_drift_T", lvl, drift.h[std::size_t(lvl)],
                    drift.w_final[std::size_t(lvl)], ""});
  }
  if (drift.exact) {
    rows.push_back({"zeta_drift_order", 0, 0.0, 0.0, "exact"});
  } else {
    for (std::size_t i = 0; i < drift.zeta_orders.size(); ++i)
      rows.push_back({"zeta_drift_order", int(i), 0.0, drift.zeta_orders[i],
                      drift.zeta_orders[i] >= 0.8 ? "PASS" : "FAIL"});
  }
  all_pass = all_pass && drift.pass;

  // Interpolant gap bound per level.
  for (int lvl = 0; lvl < cfg.study.levels; ++lvl) {
    const Trajectory& traj = trajs[std::size_t(lvl)];
    const double gap = interpolant_gap_F(traj);
    const double bound =
        std::sqrt(traj.h() * stability_bound(traj, *model));
    const bool ok = gap <= bound;
    rows.push_back({"interpolant_gap", lvl, traj.h(), gap, ok ? "PASS" : "FAIL"});
    rows.push_back({"interpolant_gap_bound", lvl, traj.h(), bound, ""});
    all_pass = all_pass && ok;
  }

  // Relative-entropy self-convergence against h/ref_refine references.
  {
    std::vector<double> maxrel;
    for (int lvl = 0; lvl < cfg.study.levels; ++lvl) {
      StepConfig sc = cfg.step;
      sc.h = cfg.study.base_h / std::pow(2.0, lvl) / cfg.study.ref_refine;
      log << "study: reference run h = " << sc.h << "\n";
      const Trajectory fine = run(init, heat, cfg.study.T, sc, *model);
      if (fine.failure)
        throw std::runtime_error("study: reference run failed");
      const auto ref_at = [&fine](double t) { return interp_linear(fine, t); };
      const RelEntropySeries series = relative_entropy_vs_reference(
          trajs[std::size_t(lvl)], ref_at, *model, cfg.reference.M);
      const double worst =
          *std::max_element(series.value.begin(), series.value.end());
      maxrel.push_back(worst);
      rows.push_back({"rel_entropy_max", lvl, trajs[std::size_t(lvl)].h(),
                      worst, ""});
      rows.push_back({"rel_entropy_fit_C2", lvl, trajs[std::size_t(lvl)].h(),
                      series.C2, ""});
      // Envelope fit is reported, not gated: the study verdict is the
      // observed convergence order; a self-convergence series grows from
      // zero and need not hug a single exponential.
      rows.push_back({"rel_entropy_fit_residual", lvl,
                      trajs[std::size_t(lvl)].h(), series.max_log_residual,
                      series.envelope_ok ? "under" : "exceeded"});
    }
    const double rel_floor = 1e3 * std::numeric_limits<double>::epsilon();
    if (*std::max_element(maxrel.begin(), maxrel.end()) <= rel_floor) {
      rows.push_back({"rel_entropy_order", 0, 0.0, 0.0, "exact"});
    } else {
      const std::vector<double> orders = observed_orders(maxrel);
      for (std::size_t i = 0; i < orders.size(); ++i) {
        const bool ok = orders[i] >= 0.8;
        rows.push_back({"rel_entropy_order", int(i), 0.0, orders[i],
                        ok ? "PASS" : "FAIL"});
        all_pass = all_pass && ok;
      }
    }
  }

  // Piola residual dx-refinement on frozen analytic gradients. The wave
  // vector is fixed anisotropic: equal k_a dx_a make the stencil defect
  // cancel identically under the epsilon antisymmetrization.
  {
    std::vector<double> cof_res, det_res;
    for (int lvl = 0; lvl < 3; ++lvl) {
      const int n = cfg.study.piola_grids[std::size_t(lvl)];
      const GridSpec pg({n, n, n}, cfg.grid_length);
      const TensorField F =
          analytic_cross_gradient(pg, cfg.init.amplitude, {1, 1, 2});
      const auto res = piola_residual(F);
      double cof2 = 0.0;
      for (int b = kExtZeta; b < kExtW; ++b) cof2 += res[std::size_t(b)] * res[std::size_t(b)];
      cof_res.push_back(std::sqrt(cof2));
      det_res.push_back(res[kExtW]);
      rows.push_back({"piola_cof", lvl, double(n), cof_res.back(), ""});
      rows.push_back({"piola_det", lvl, double(n), det_res.back(), ""});
    }
    for (std::size_t lvl = 0; lvl + 1 < 3; ++lvl) {
      if (cfg.study.piola_grids[lvl + 1] != 2 * cfg.study.piola_grids[lvl])
        throw ConfigError("study: piola_grids must double per level");
    }
    const auto oc = observed_orders(cof_res);
    const auto od = observed_orders(det_res);
    for (std::size_t i = 0; i < oc.size(); ++i) {
      const bool ok = oc[i] >= 1.8 && od[i] >= 1.8;
      rows.push_back({"piola_cof_order", int(i), 0.0, oc[i],
                      ok ? "PASS" : "FAIL"});
      rows.push_back({"piola_det_order", int(i), 0.0, od[i], ""});
      all_pass = all_pass && ok;
    }
  }

  fs::create_directories(cfg.out_dir);
  write_study_csv(rows, cfg.out_dir + "/study.csv");
  for (const StudyRow& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-26s level %d  param %-12.6g value %-14.6g %s\n",
                  r.quantity.c_str(), r.level, r.param, r.value,
                  r.verdict.c_str());
    log << buf;
  }
  log << (all_pass ? "study: all verdicts PASS\n" : "study: verdict FAILURE\n");
  return all_pass ? 0 : 1;
}

int cmd_energy_report(const std::string& checkpoint_path,
                      const std::string& out_dir, std::ostream& log) {
  const Trajectory traj = checkpoint_load(checkpoint_path);
  const auto model = make_model(traj.model);
  fs::create_directories(out_dir);
  write_energy_csv(traj, *model, out_dir + "/energy.csv");
  write_drift_csv(traj, out_dir + "/drift.csv");
  write_solver_csv(traj, out_dir + "/solver.csv");
  log << "energy-report: re-emitted ledgers for " << traj.steps()
      << " steps to " << out_dir << "\n";
  return 0;
}

} // namespace polytherm
