/// @file diagnostics.hpp
/// @brief Certificates derived from the scheme's structure: relative energy,
/// dissipation margins, extended-variable drift, relative-entropy comparison
/// against a smooth reference, and the bound-lemma probes.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "polytherm/march.hpp"

namespace polytherm {

/// Relative (total) energy I(A | B): the quadratic Taylor remainder of
/// int( |v|^2/2 + e_hat ) expanded at B and evaluated at A. Nonnegative for
/// convex models.
double relative_energy(const State& A, const State& B,
                       const EnergyModel& model);

/// Pointwise version, used by the bound-lemma probes.
double relative_energy_point(const EnergyModel& model, const Vec3& vA,
                             const ExtVec& xiA, double etaA, const Vec3& vB,
                             const ExtVec& xiB, double etaB);

/// Copy of U with (zeta, w) replaced by (cof F, det F); the relative-entropy
/// comparison of the convergence theorem uses only Phi-consistent values.
State phi_consistent(const State& U);

// ---------------------------------------------------------------------------
// Dissipation certificate.

struct DissipationCertificate {
  std::vector<double> margin; ///< E_{j-1} - E_j - c||dU||^2 - heat_j
  std::vector<double> tol_d;  ///< declared discretization tolerance per step
  double c = 0.0;             ///< min(1, c_e)
  bool pass = false;          ///< all margins >= -tol_d
  double worst_margin = 0.0;
};

/// Evaluates the per-step dissipation inequality with c = min(1, c_e) and
/// tol_d = kappa h dx^2 (1 + max|e_xi|) ||v||_{W1}.
DissipationCertificate dissipation_certificate(const Trajectory& traj,
                                               const EnergyModel& model,
                                               double kappa = 10.0);

/// Energy-derived bound E with sum_j ||U^j - U^{j-1}||^2 <= E (from the
/// dissipation lemma: relative energy >= c/2 ||dU||^2).
double stability_bound(const Trajectory& traj, const EnergyModel& model);

/// sqrt( (h/3) sum_j ||F^j - F^{j-1}||^2 ), the exact L2(Q_T) gap between the
/// piecewise-linear and piecewise-constant interpolants of the F block.
double interpolant_gap_F(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Drift ledger and certificate.

struct DriftRow {
  int step = 0;
  double t = 0.0;
  double zeta_drift = 0.0; ///< ||zeta - cof F||_{L2}
  double w_drift = 0.0;    ///< ||w - det F||_{L2}
  double curl = 0.0;       ///< curl residual of the F block
  double piola_cof = 0.0;  ///< combined cof-block Piola residual
  double piola_det = 0.0;  ///< det-block Piola residual
  double transport_cof = 0.0; ///< zero for step 0
  double transport_det = 0.0;
};

std::vector<DriftRow> drift_ledger(const Trajectory& traj,
                                   bool with_piola = true);

struct DriftCertificate {
  std::vector<double> h;          ///< per level
  std::vector<double> zeta_final; ///< ||zeta - cof F||(T) per level
  std::vector<double> w_final;
  std::vector<double> zeta_orders; ///< log2 ratios between consecutive levels
  std::vector<double> w_orders;
  bool exact = false; ///< all drifts at machine level
  bool pass = false;  ///< observed order >= 0.8 (or exact)
};

/// Requires >= 3 trajectories at h, h/2, h/4 with identical grid and initial
/// data.
DriftCertificate drift_certificate(std::span<const Trajectory* const> levels);

// ---------------------------------------------------------------------------
// Relative entropy against a time-sampled smooth reference.

struct RelEntropySeries {
  std::vector<double> t;
  std::vector<double> value; ///< I_rel(t_j)
  double C1 = 0.0;           ///< fitted envelope C1 exp(C2 t)
  double C2 = 0.0;
  double max_log_residual = 0.0;
  double rms_log_residual = 0.0;
  int n_fit = 0;
  bool envelope_ok = false; ///< all fitted points under 2 C1 exp(C2 t)
};

/// ref_at(t) must supply a Phi-consistent state on the same grid taking
/// values in Gamma_M; throws std::domain_error otherwise.
RelEntropySeries relative_entropy_vs_reference(
    const Trajectory& traj, const std::function<State(double)>& ref_at,
    const EnergyModel& model, double M);

/// Least-squares fit of log(values) = log(C1) + C2 t over entries above
/// `threshold`; used by the Gronwall-envelope check.
struct EnvelopeFit {
  double C1 = 0.0, C2 = 0.0;
  double max_log_residual = 0.0, rms_log_residual = 0.0;
  int n = 0;
};
EnvelopeFit fit_exponential_envelope(std::span<const double> t,
                                     std::span<const double> v,
                                     double threshold);

/// Observed convergence orders log2(e_i / e_{i+1}) for levels whose parameter
/// halves each time.
std::vector<double> observed_orders(std::span<const double> errors);

// ---------------------------------------------------------------------------
// Bound-lemma probes (the constants of the convergence theorem).

struct PointVals {
  Vec3 v{};
  Mat3 F;
  double eta = 0.0;
};

struct ProbePair {
  PointVals num;
  PointVals ref; ///< must satisfy |F|,|v|,eta <= M
};

struct BoundProbeReport {
  int used = 0;
  int excluded = 0;       ///< exact-coincidence samples (I_rel ~ 0)
  double R = 0.0;         ///< split between the near and far coercivity branches
  double coercive_far = 0.0;   ///< max (|F|^p + eta^ell + |v|^2) / I_rel, far branch
  double coercive_near = 0.0;  ///< max |(Phi,eta,v) - ref|^2 / I_rel, near branch
  double coercive_far_rel = 0.0; ///< max (|dF|^p + |deta|^ell + |dv|^2) / I_rel, far branch
  double flux_stress = 0.0;    ///< C1 ratio: |dPhi' . d e_xi| / I_rel
  double rel_stress = 0.0;     ///< C2 ratio: |e_xi relative quantity| / I_rel
  double rel_theta = 0.0;      ///< C3 ratio: |theta relative quantity| / I_rel
  double flux_velocity = 0.0;  ///< C4 ratio: |dPhi' (v - vbar)| / I_rel
  double theta_ratio = 0.0;    ///< C5 ratio: |(1/th - 1/thbar)(th - thbar)| / I_rel
  bool finite() const;
};

BoundProbeReport bound_probes(std::span<const ProbePair> samples,
                              const EnergyModel& model, double M,
                              double R = -1.0);

/// Deterministic sample generator mixing near-reference, bounded, and
/// large-magnitude states against references inside Gamma_M.
std::vector<ProbePair> make_probe_pairs(int count, double M,
                                        unsigned long long seed);

struct BoundProbeStability {
  BoundProbeReport base;
  BoundProbeReport doubled;
  bool pass = false; ///< all maxima finite and stable under sample doubling
};

BoundProbeStability bound_probes_stable(const EnergyModel& model, double M,
                                        int count, unsigned long long seed,
                                        double growth_factor = 1.25);

} // namespace polytherm
