#include "polytherm/constitutive.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace polytherm {

namespace {

double sq_norm(const double* x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

/// Smallest Hessian eigenvalue of b(1+s)^{e/2} restricted to |x|^2 <= B^2.
/// For e >= 2 the minimum sits at the origin (b*e); for e < 2 the radial
/// eigenvalue decreases outward and the minimum sits on the boundary.
double power_term_convexity(double b, double e, double bound) {
  if (e >= 2.0) return b * e;
  const double s = bound * bound;
  return b * e * std::pow(1.0 + s, 0.5 * e - 2.0) * (1.0 + (e - 1.0) * s);
}

} // namespace

PolyconvexEnergy::PolyconvexEnergy(Params prm) : prm_(prm) {
  if (!(prm_.beta_zeta > 0.0 && prm_.beta_w > 0.0 && prm_.beta_eta > 0.0))
    throw std::invalid_argument("PolyconvexEnergy: beta coefficients must be > 0");
  if (!(prm_.delta > 0.0))
    throw std::invalid_argument("PolyconvexEnergy: delta must be > 0");
  if (!(prm_.q >= 2.0))
    throw std::invalid_argument("PolyconvexEnergy: q must satisfy q >= 2");
  if (!(prm_.rho > 1.0 && prm_.ell > 1.0))
    throw std::invalid_argument("PolyconvexEnergy: rho and ell must be > 1");
  meta_.p = 4.0;
  meta_.q = prm_.q;
  meta_.rho = prm_.rho;
  meta_.ell = prm_.ell;
  meta_.theta_floor = prm_.delta;
  meta_.convexity_global = prm_.q >= 2.0 && prm_.rho >= 2.0 && prm_.ell >= 2.0;
  const double cz = power_term_convexity(prm_.beta_zeta, prm_.q, prm_.domain_bound);
  const double cw = power_term_convexity(prm_.beta_w, prm_.rho, prm_.domain_bound);
  const double ce = power_term_convexity(prm_.beta_eta, prm_.ell, prm_.domain_bound);
  meta_.convexity = std::min({2.0, cz, cw, ce});
}

double PolyconvexEnergy::eval(const ExtVec& xi, double eta) const {
  require_domain(eta);
  const double sF = sq_norm(xi.data() + kExtF, 9);
  const double sZ = sq_norm(xi.data() + kExtZeta, 9);
  const double w = xi[kExtW];
  return sF * sF + sF + prm_.beta_zeta * std::pow(1.0 + sZ, 0.5 * prm_.q) +
         prm_.beta_w * std::pow(1.0 + w * w, 0.5 * prm_.rho) +
         prm_.beta_eta * std::pow(1.0 + eta * eta, 0.5 * prm_.ell) +
         prm_.delta * eta;
}

EnergyDerivs PolyconvexEnergy::grad(const ExtVec& xi, double eta) const {
  require_domain(eta);
  EnergyDerivs d;
  const double sF = sq_norm(xi.data() + kExtF, 9);
  const double sZ = sq_norm(xi.data() + kExtZeta, 9);
  const double w = xi[kExtW];
  const double fF = 4.0 * sF + 2.0;
  const double fZ =
      prm_.beta_zeta * prm_.q * std::pow(1.0 + sZ, 0.5 * prm_.q - 1.0);
  for (int t = 0; t < 9; ++t) {
    d.e_xi[kExtF + t] = fF * xi[kExtF + t];
    d.e_xi[kExtZeta + t] = fZ * xi[kExtZeta + t];
  }
  d.e_xi[kExtW] =
      prm_.beta_w * prm_.rho * std::pow(1.0 + w * w, 0.5 * prm_.rho - 1.0) * w;
  d.theta = prm_.beta_eta * prm_.ell *
                std::pow(1.0 + eta * eta, 0.5 * prm_.ell - 1.0) * eta +
            prm_.delta;
  return d;
}

void PolyconvexEnergy::hess_vec(const ExtVec& xi, double eta, const ExtVec& dxi,
                           double deta, ExtVec& out_dxi,
                           double& out_deta) const {
  require_domain(eta);
  const double sF = sq_norm(xi.data() + kExtF, 9);
  const double sZ = sq_norm(xi.data() + kExtZeta, 9);
  const double w = xi[kExtW];

  double FdF = 0.0, ZdZ = 0.0;
  for (int t = 0; t < 9; ++t) {
    FdF += xi[kExtF + t] * dxi[kExtF + t];
    ZdZ += xi[kExtZeta + t] * dxi[kExtZeta + t];
  }
  const double fF = 4.0 * sF + 2.0;
  const double q = prm_.q;
  const double gz1 = prm_.beta_zeta * q * std::pow(1.0 + sZ, 0.5 * q - 1.0);
  const double gz2 =
      prm_.beta_zeta * q * (q - 2.0) * std::pow(1.0 + sZ, 0.5 * q - 2.0);
  for (int t = 0; t < 9; ++t) {
    out_dxi[kExtF + t] = fF * dxi[kExtF + t] + 8.0 * FdF * xi[kExtF + t];
    out_dxi[kExtZeta + t] =
        gz1 * dxi[kExtZeta + t] + gz2 * ZdZ * xi[kExtZeta + t];
  }
  const double rho = prm_.rho;
  const double hw =
      prm_.beta_w * rho *
      (std::pow(1.0 + w * w, 0.5 * rho - 1.0) +
       (rho - 2.0) * std::pow(1.0 + w * w, 0.5 * rho - 2.0) * w * w);
  out_dxi[kExtW] = hw * dxi[kExtW];
  const double ell = prm_.ell;
  const double ke =
      prm_.beta_eta * ell *
      (std::pow(1.0 + eta * eta, 0.5 * ell - 1.0) +
       (ell - 2.0) * std::pow(1.0 + eta * eta, 0.5 * ell - 2.0) * eta * eta);
  out_deta = ke * deta;
}

double QuadraticEnergy::eval(const ExtVec& xi, double eta) const {
  require_domain(eta);
  return 0.5 * sq_norm(xi.data(), kExtComps) + 0.5 * eta * eta + delta_ * eta;
}

EnergyDerivs QuadraticEnergy::grad(const ExtVec& xi, double eta) const {
  require_domain(eta);
  EnergyDerivs d;
  d.e_xi = xi;
  d.theta = eta + delta_;
  return d;
}

void QuadraticEnergy::hess_vec(const ExtVec& xi, double eta, const ExtVec& dxi,
                               double deta, ExtVec& out_dxi,
                               double& out_deta) const {
  require_domain(eta);
  (void)xi;
  out_dxi = dxi;
  out_deta = deta;
}

EnergyMeta QuadraticEnergy::meta() const {
  EnergyMeta m;
  m.p = 2.0;
  m.q = 2.0;
  m.rho = 2.0;
  m.ell = 2.0;
  m.convexity = 1.0;
  m.theta_floor = delta_;
  m.convexity_global = true;
  return m;
}

double NonconvexProbeEnergy::eval(const ExtVec& xi, double eta) const {
  require_domain(eta);
  return sq_norm(xi.data() + kExtF, 9) - sq_norm(xi.data() + kExtZeta, 9) +
         0.5 * eta * eta + delta_ * eta;
}

EnergyDerivs NonconvexProbeEnergy::grad(const ExtVec& xi, double eta) const {
  require_domain(eta);
  EnergyDerivs d;
  for (int t = 0; t < 9; ++t) {
    d.e_xi[kExtF + t] = 2.0 * xi[kExtF + t];
    d.e_xi[kExtZeta + t] = -2.0 * xi[kExtZeta + t];
  }
  d.e_xi[kExtW] = 0.0;
  d.theta = eta + delta_;
  return d;
}

void NonconvexProbeEnergy::hess_vec(const ExtVec& xi, double eta,
                                    const ExtVec& dxi, double deta,
                                    ExtVec& out_dxi, double& out_deta) const {
  require_domain(eta);
  (void)xi;
  for (int t = 0; t < 9; ++t) {
    out_dxi[kExtF + t] = 2.0 * dxi[kExtF + t];
    out_dxi[kExtZeta + t] = -2.0 * dxi[kExtZeta + t];
  }
  out_dxi[kExtW] = 0.0;
  out_deta = deta;
}

EnergyMeta NonconvexProbeEnergy::meta() const {
  EnergyMeta m;
  m.convexity = 1.0; // deliberately wrong claim; the checker must refute it
  m.theta_floor = delta_;
  return m;
}

namespace {
double param_or(const ModelSpec& s, const std::string& key, double fallback) {
  const auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}
} // namespace

std::unique_ptr<EnergyModel> make_model(const ModelSpec& spec) {
  if (spec.name == "polyconvex") {
    PolyconvexEnergy::Params prm;
    prm.beta_zeta = param_or(spec, "beta_zeta", prm.beta_zeta);
    prm.beta_w = param_or(spec, "beta_w", prm.beta_w);
    prm.beta_eta = param_or(spec, "beta_eta", prm.beta_eta);
    prm.delta = param_or(spec, "delta", prm.delta);
    prm.q = param_or(spec, "q", prm.q);
    prm.rho = param_or(spec, "rho", prm.rho);
    prm.ell = param_or(spec, "ell", prm.ell);
    prm.domain_bound = param_or(spec, "domain_bound", prm.domain_bound);
    return std::make_unique<PolyconvexEnergy>(prm);
  }
  if (spec.name == "quadratic")
    return std::make_unique<QuadraticEnergy>(param_or(spec, "delta", 0.1));
  if (spec.name == "nonconvex-probe")
    return std::make_unique<NonconvexProbeEnergy>(param_or(spec, "delta", 0.1));
  throw std::invalid_argument("unknown energy model: " + spec.name);
}

ModelSpec spec_of(const EnergyModel& model) {
  ModelSpec s;
  s.name = model.name();
  if (const auto* pe = dynamic_cast<const PolyconvexEnergy*>(&model)) {
    const auto& p = pe->params();
    s.params = {{"beta_zeta", p.beta_zeta}, {"beta_w", p.beta_w},
                {"beta_eta", p.beta_eta},   {"delta", p.delta},
                {"q", p.q},                 {"rho", p.rho},
                {"ell", p.ell},             {"domain_bound", p.domain_bound}};
  } else if (const auto* qe = dynamic_cast<const QuadraticEnergy*>(&model)) {
    s.params = {{"delta", qe->delta()}};
  }
  return s;
}

HypothesisReport check_hypotheses(const EnergyModel& model, int sample_count,
                                  unsigned long long seed) {
  if (sample_count < 1)
    throw std::invalid_argument("check_hypotheses: sample count must be >= 1");
  const EnergyMeta meta = model.meta();
  HypothesisReport rep;
  rep.samples = sample_count;
  rep.theta_floor = meta.theta_floor;
  rep.convexity = meta.convexity;
  rep.growth_lower = std::numeric_limits<double>::infinity();
  rep.theta_min = std::numeric_limits<double>::infinity();
  rep.hess_min = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const bool dual_defined = meta.p > 3.0;

  auto probe = [&](const ExtVec& xi, double eta, bool large) {
    const double nF = std::sqrt(sq_norm(xi.data() + kExtF, 9));
    const double nZ = std::sqrt(sq_norm(xi.data() + kExtZeta, 9));
    const double w = std::abs(xi[kExtW]);
    const double S = std::pow(nF, meta.p) + std::pow(nZ, meta.q) +
                     std::pow(w, meta.rho) + std::pow(eta, meta.ell);
    const double e = model.eval(xi, eta);
    const EnergyDerivs d = model.grad(xi, eta);
    rep.growth_upper = std::max(rep.growth_upper, e / (S + 1.0));
    if (S > 100.0) {
      rep.growth_lower = std::min(rep.growth_lower, e / (S + 1.0));
      rep.theta_sublinear = std::max(rep.theta_sublinear, d.theta / (S + 1.0));
    }
    rep.theta_min = std::min(rep.theta_min, d.theta);
    if (dual_defined) {
      const double gF = std::sqrt(sq_norm(d.e_xi.data() + kExtF, 9));
      const double gZ = std::sqrt(sq_norm(d.e_xi.data() + kExtZeta, 9));
      const double gw = std::abs(d.e_xi[kExtW]);
      const double dual = std::pow(gF, meta.p / (meta.p - 1.0)) +
                          std::pow(gZ, meta.p / (meta.p - 2.0)) +
                          std::pow(gw, meta.p / (meta.p - 3.0));
      if (large)
        rep.dual_growth_large = std::max(rep.dual_growth_large, dual / (S + 1.0));
      else
        rep.dual_growth = std::max(rep.dual_growth, dual / (S + 1.0));
    }
    // Rayleigh quotient along a random direction.
    ExtVec dir{}, hx{};
    double deta = u11(rng), heta = 0.0;
    for (double& x : dir) x = u11(rng);
    model.hess_vec(xi, eta, dir, deta, hx, heta);
    double quad = heta * deta, nrm = deta * deta;
    for (int c = 0; c < kExtComps; ++c) {
      quad += hx[c] * dir[c];
      nrm += dir[c] * dir[c];
    }
    rep.hess_min = std::min(rep.hess_min, quad / nrm);
  };

  // Canonical directions at a fixed bounded point, so block-wise convexity
  // failures cannot hide from the random sampling.
  {
    ExtVec xi{};
    for (double& x : xi) x = 0.5;
    for (int c = 0; c <= kExtComps; ++c) {
      ExtVec dir{}, hx{};
      double deta = (c == kExtComps) ? 1.0 : 0.0, heta = 0.0;
      if (c < kExtComps) dir[c] = 1.0;
      model.hess_vec(xi, 1.0, dir, deta, hx, heta);
      double quad = heta * deta;
      for (int t = 0; t < kExtComps; ++t) quad += hx[t] * dir[t];
      rep.hess_min = std::min(rep.hess_min, quad);
    }
  }

  for (int s = 0; s < sample_count; ++s) {
    ExtVec xi{};
    const bool large = (s % 2 == 1);
    const double mag = large ? std::pow(10.0, 0.5 + 2.5 * u01(rng)) : 3.0;
    for (double& x : xi) x = mag * u11(rng);
    const double eta = (s % 7 == 0) ? 0.0 : mag * u01(rng);
    probe(xi, eta, large);
  }
  if (!std::isfinite(rep.growth_lower)) rep.growth_lower = 0.0;
  if (!std::isfinite(rep.theta_min)) rep.theta_min = 0.0;
  return rep;
}

namespace {
void require_eta_domain(const ScalarField& eta) {
  for (std::size_t p = 0; p < eta.points(); ++p)
    if (!(eta(p, 0) >= 0.0))
      throw ConstitutiveDomainError(
          "energy evaluation: eta < 0 at a grid point");
}
} // namespace

ScalarField energy_density(const EnergyModel& m, const ExtField& xi,
                           const ScalarField& eta) {
  if (!(xi.grid() == eta.grid()))
    throw std::invalid_argument("energy_density: grid mismatch");
  require_eta_domain(eta);
  ScalarField out(xi.grid());
  parallel_for(xi.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      out(p, 0) = m.eval(ext_at(xi, p), eta(p, 0));
  });
  return out;
}

void energy_gradients(const EnergyModel& m, const ExtField& xi,
                      const ScalarField& eta, ExtField& e_xi_out,
                      ScalarField& theta_out) {
  if (!(xi.grid() == eta.grid()))
    throw std::invalid_argument("energy_gradients: grid mismatch");
  require_eta_domain(eta);
  e_xi_out = ExtField(xi.grid());
  theta_out = ScalarField(xi.grid());
  parallel_for(xi.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const EnergyDerivs d = m.grad(ext_at(xi, p), eta(p, 0));
      set_ext(e_xi_out, p, d.e_xi);
      theta_out(p, 0) = d.theta;
    }
  });
}

ExtField energy_hess_xi(const EnergyModel& m, const ExtField& xi,
                        const ScalarField& eta, const ExtField& dxi) {
  if (!(xi.grid() == eta.grid()) || !(xi.grid() == dxi.grid()))
    throw std::invalid_argument("energy_hess_xi: grid mismatch");
  require_eta_domain(eta);
  ExtField out(xi.grid());
  parallel_for(xi.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      ExtVec hx{};
      double heta = 0.0;
      m.hess_vec(ext_at(xi, p), eta(p, 0), ext_at(dxi, p), 0.0, hx, heta);
      set_ext(out, p, hx);
    }
  });
  return out;
}

} // namespace polytherm
