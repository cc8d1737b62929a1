/// @file constitutive.hpp
/// @brief Internal-energy contract e_hat(xi, eta) with first/second
/// derivatives, the default strictly convex model, and numerical verification
/// of the convexity / growth / temperature-floor hypotheses.

#pragma once

#include <map>
#include <memory>
#include <string>

#include "polytherm/nulllag.hpp"
#include "polytherm/pergrid.hpp"

namespace polytherm {

/// Thrown when an evaluation point leaves the constitutive domain
/// (eta < 0; the domain of e_hat is R^19 x [0, inf)).
struct ConstitutiveDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnergyMeta {
  double p = 4.0;   ///< growth exponent of the F block (fixed by |F|^4)
  double q = 2.0;   ///< zeta exponent, >= 2
  double rho = 2.0; ///< w exponent, > 1
  double ell = 2.0; ///< eta exponent, > 1
  double convexity = 1.0;   ///< c_e with hess >= c_e * I on the test domain
  double theta_floor = 0.1; ///< delta with theta_hat >= delta for eta >= 0
  bool convexity_global = true; ///< false: c_e valid on bounded sets only
};

struct EnergyDerivs {
  ExtVec e_xi{}; ///< d e_hat / d xi
  double theta = 0.0; ///< theta_hat = d e_hat / d eta
};

/// Constitutive contract. Implementations must be immutable after
/// construction; all evaluations are pure and thread-safe.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual double eval(const ExtVec& xi, double eta) const = 0;
  virtual EnergyDerivs grad(const ExtVec& xi, double eta) const = 0;
  /// Hessian action: (d_xi, d_eta) -> (hess * d)_xi, (hess * d)_eta.
  virtual void hess_vec(const ExtVec& xi, double eta, const ExtVec& dxi,
                        double deta, ExtVec& out_dxi,
                        double& out_deta) const = 0;
  virtual EnergyMeta meta() const = 0;
  virtual std::string name() const = 0;

  double theta(const ExtVec& xi, double eta) const { return grad(xi, eta).theta; }

 protected:
  static void require_domain(double eta) {
    if (!(eta >= 0.0))
      throw ConstitutiveDomainError("energy model: eta < 0 is outside the "
                                    "constitutive domain");
  }
};

/// e_hat = |F|^4 + |F|^2 + bz (1+|z|^2)^{q/2} + bw (1+w^2)^{rho/2}
///         + be (1+eta^2)^{ell/2} + delta * eta.
///
/// With the default exponents q = rho = ell = 2 the Hessian satisfies
/// hess >= 2 min(1, bz, bw, be) * I globally on eta >= 0. For exponents
/// below 2 the reported convexity constant is only valid on a bounded set
/// (|z|, |w|, eta <= domain_bound) and the model flags that in its metadata.
class PolyconvexEnergy final : public EnergyModel {
 public:
  struct Params {
    double beta_zeta = 1.0;
    double beta_w = 1.0;
    double beta_eta = 1.0;
    double delta = 0.1;
    double q = 2.0;
    double rho = 2.0;
    double ell = 2.0;
    double domain_bound = 16.0; ///< convexity certification radius if q/rho/ell < 2
  };

  PolyconvexEnergy() : PolyconvexEnergy(Params{}) {}
  explicit PolyconvexEnergy(Params prm);

  double eval(const ExtVec& xi, double eta) const override;
  EnergyDerivs grad(const ExtVec& xi, double eta) const override;
  void hess_vec(const ExtVec& xi, double eta, const ExtVec& dxi, double deta,
                ExtVec& out_dxi, double& out_deta) const override;
  EnergyMeta meta() const override { return meta_; }
  std::string name() const override { return "polyconvex"; }
  const Params& params() const { return prm_; }

 private:
  Params prm_;
  EnergyMeta meta_;
};

/// Quadratic surrogate e_hat = |xi|^2 / 2 + eta^2 / 2 + delta * eta.
/// Turns the variational step into a linear SPD system; used as an oracle.
class QuadraticEnergy final : public EnergyModel {
 public:
  explicit QuadraticEnergy(double delta = 0.1) : delta_(delta) {}

  double eval(const ExtVec& xi, double eta) const override;
  EnergyDerivs grad(const ExtVec& xi, double eta) const override;
  void hess_vec(const ExtVec& xi, double eta, const ExtVec& dxi, double deta,
                ExtVec& out_dxi, double& out_deta) const override;
  EnergyMeta meta() const override;
  std::string name() const override { return "quadratic"; }
  double delta() const { return delta_; }

 private:
  double delta_;
};

/// Deliberately non-convex probe e_hat = |F|^2 - |z|^2 + eta^2/2 + delta*eta,
/// used to verify that the hypothesis checker flags convexity failures.
class NonconvexProbeEnergy final : public EnergyModel {
 public:
  explicit NonconvexProbeEnergy(double delta = 0.1) : delta_(delta) {}

  double eval(const ExtVec& xi, double eta) const override;
  EnergyDerivs grad(const ExtVec& xi, double eta) const override;
  void hess_vec(const ExtVec& xi, double eta, const ExtVec& dxi, double deta,
                ExtVec& out_dxi, double& out_deta) const override;
  EnergyMeta meta() const override;
  std::string name() const override { return "nonconvex-probe"; }

 private:
  double delta_;
};

/// Serializable model selection (checkpoint header, run configuration).
struct ModelSpec {
  std::string name = "polyconvex";
  std::map<std::string, double> params;
};

std::unique_ptr<EnergyModel> make_model(const ModelSpec& spec);
ModelSpec spec_of(const EnergyModel& model);

// ---------------------------------------------------------------------------
// Hypothesis verification (report-only).

struct HypothesisReport {
  int samples = 0;
  double growth_upper = 0.0;  ///< max e_hat / (S + 1), S = |F|^p+|z|^q+|w|^rho+|eta|^ell
  double growth_lower = 0.0;  ///< min e_hat / (S + 1) over large-S samples
  double theta_sublinear = 0.0; ///< max theta_hat / (S + 1) over large samples
  double dual_growth = 0.0;   ///< max dual-exponent gradient expression / (S + 1), bounded samples
  double dual_growth_large = 0.0; ///< same ratio on the large-magnitude ladder (informational)
  double theta_min = 0.0;     ///< min theta_hat over samples
  double hess_min = 0.0;      ///< min Rayleigh quotient d'Hd / |d|^2
  double theta_floor = 0.0;   ///< delta from metadata
  double convexity = 0.0;     ///< c_e from metadata

  bool growth_ok() const { return growth_lower > 0.0 && std::isfinite(growth_upper); }
  bool theta_ok() const { return theta_min >= theta_floor * (1.0 - 1e-12); }
  bool hessian_ok() const { return hess_min >= convexity * (1.0 - 1e-6); }
  bool dual_ok() const { return std::isfinite(dual_growth); }
  bool passed() const {
    return growth_ok() && theta_ok() && hessian_ok() && dual_ok() &&
           theta_sublinear < 0.5;
  }
};

/// Samples bounded and large-magnitude points and verifies the growth
/// conditions, the temperature floor, and Hessian positivity. Report-only.
HypothesisReport check_hypotheses(const EnergyModel& model, int sample_count,
                                  unsigned long long seed = 12345);

// ---------------------------------------------------------------------------
// Field-level evaluation helpers.

/// Pointwise e_hat(xi, eta) as a scalar field.
ScalarField energy_density(const EnergyModel& m, const ExtField& xi,
                           const ScalarField& eta);

/// Pointwise gradient: fills e_xi (19 comps) and theta.
void energy_gradients(const EnergyModel& m, const ExtField& xi,
                      const ScalarField& eta, ExtField& e_xi_out,
                      ScalarField& theta_out);

/// Pointwise xi-block Hessian action with d_eta = 0.
ExtField energy_hess_xi(const EnergyModel& m, const ExtField& xi,
                        const ScalarField& eta, const ExtField& dxi);

} // namespace polytherm
