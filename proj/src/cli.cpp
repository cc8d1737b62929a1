#include "polytherm/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace polytherm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigLine {
  int number = 0;
  std::string section;
  std::string key;
  std::vector<std::string> tokens;
};

[[noreturn]] void fail_at(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const ConfigLine& ln, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail_at(ln.number, "expected a number for key '" + ln.key + "', got '" +
                           tok + "'");
  }
}

int to_int(const ConfigLine& ln, const std::string& tok) {
  const double v = to_double(ln, tok);
  const int i = int(llround(v));
  if (std::abs(v - double(i)) > 0.0)
    fail_at(ln.number, "expected an integer for key '" + ln.key + "'");
  return i;
}

void want_tokens(const ConfigLine& ln, std::size_t n) {
  if (ln.tokens.size() != n)
    fail_at(ln.number, "key '" + ln.key + "' expects " + std::to_string(n) +
                           " value(s)");
}

double one_double(const ConfigLine& ln) {
  want_tokens(ln, 1);
  return to_double(ln, ln.tokens[0]);
}

int one_int(const ConfigLine& ln) {
  want_tokens(ln, 1);
  return to_int(ln, ln.tokens[0]);
}

std::string one_word(const ConfigLine& ln) {
  want_tokens(ln, 1);
  return ln.tokens[0];
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& name) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {
          "grid", "model", "init", "heat", "time",
          "solver", "output", "study", "reference"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        fail_at(line_no, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(line_no, "expected 'key = value'");
    ConfigLine ln;
    ln.number = line_no;
    ln.section = section;
    ln.key = trim(line.substr(0, eq));
    std::istringstream vals(line.substr(eq + 1));
    std::string tok;
    while (vals >> tok) ln.tokens.push_back(tok);
    if (ln.key.empty() || ln.tokens.empty())
      fail_at(line_no, "expected 'key = value'");

    if (section == "grid") {
      if (ln.key == "n") {
        want_tokens(ln, 3);
        for (int a = 0; a < 3; ++a) cfg.grid_n[a] = to_int(ln, ln.tokens[a]);
      } else if (ln.key == "length") {
        want_tokens(ln, 3);
        for (int a = 0; a < 3; ++a)
          cfg.grid_length[a] = to_double(ln, ln.tokens[a]);
      } else
        fail_at(line_no, "unknown key '" + ln.key + "' in [grid]");
    } else if (section == "model") {
      if (ln.key == "name") {
        cfg.model.name = one_word(ln);
      } else if (ln.key == "beta_zeta" || ln.key == "beta_w" ||
                 ln.key == "beta_eta" || ln.key == "delta" || ln.key == "q" ||
                 ln.key == "rho" || ln.key == "ell" ||
                 ln.key == "domain_bound") {
        cfg.model.params[ln.key] = one_double(ln);
      } else
        fail_at(line_no, "unknown key '" + ln.key + "' in [model]");
    } else if (section == "init") {
      if (ln.key == "preset") cfg.init.preset = one_word(ln);
      else if (ln.key == "pattern") cfg.init.pattern = one_word(ln);
      else if (ln.key == "amplitude") cfg.init.amplitude = one_double(ln);
      else if (ln.key == "velocity_amplitude")
        cfg.init.velocity_amplitude = one_double(ln);
      else if (ln.key == "wave_k") {
        want_tokens(ln, 3);
        for (int a = 0; a < 3; ++a)
          cfg.init.wave_k[a] = to_int(ln, ln.tokens[a]);
      } else if (ln.key == "eta0") cfg.init.eta0 = one_double(ln);
      else if (ln.key == "eta_amplitude")
        cfg.init.eta_amplitude = one_double(ln);
      else if (ln.key == "offset") cfg.init.offset = one_double(ln);
      else fail_at(line_no, "unknown key '" + ln.key + "' in [init]");
    } else if (section == "heat") {
      if (ln.key == "preset") cfg.heat.preset = one_word(ln);
      else if (ln.key == "value") cfg.heat.value = one_double(ln);
      else if (ln.key == "amplitude") cfg.heat.amplitude = one_double(ln);
      else fail_at(line_no, "unknown key '" + ln.key + "' in [heat]");
    } else if (section == "time") {
      if (ln.key == "T") cfg.T = one_double(ln);
      else if (ln.key == "h") cfg.step.h = one_double(ln);
      else fail_at(line_no, "unknown key '" + ln.key + "' in [time]");
    } else if (section == "solver") {
      if (ln.key == "newton_tol") cfg.step.newton_tol = one_double(ln);
      else if (ln.key == "newton_max") cfg.step.newton_max = one_int(ln);
      else if (ln.key == "cg_tol") cfg.step.cg_tol = one_double(ln);
      else if (ln.key == "cg_max") cfg.step.cg_max = one_int(ln);
      else if (ln.key == "backtrack_factor")
        cfg.step.backtrack_factor = one_double(ln);
      else if (ln.key == "armijo_c") cfg.step.armijo_c = one_double(ln);
      else if (ln.key == "backtrack_max") cfg.step.backtrack_max = one_int(ln);
      else fail_at(line_no, "unknown key '" + ln.key + "' in [solver]");
    } else if (section == "output") {
      if (ln.key == "dir") cfg.out_dir = one_word(ln);
      else if (ln.key == "workers") cfg.workers = one_int(ln);
      else if (ln.key == "seed")
        cfg.seed = (unsigned long long)(one_double(ln));
      else fail_at(line_no, "unknown key '" + ln.key + "' in [output]");
    } else if (section == "study") {
      if (ln.key == "levels") cfg.study.levels = one_int(ln);
      else if (ln.key == "base_h") cfg.study.base_h = one_double(ln);
      else if (ln.key == "T") cfg.study.T = one_double(ln);
      else if (ln.key == "ref_refine") cfg.study.ref_refine = one_int(ln);
      else if (ln.key == "piola_grids") {
        want_tokens(ln, 3);
        for (int a = 0; a < 3; ++a)
          cfg.study.piola_grids[a] = to_int(ln, ln.tokens[a]);
      } else
        fail_at(line_no, "unknown key '" + ln.key + "' in [study]");
    } else if (section == "reference") {
      if (ln.key == "preset") cfg.reference.preset = one_word(ln);
      else if (ln.key == "M") cfg.reference.M = one_double(ln);
      else fail_at(line_no, "unknown key '" + ln.key + "' in [reference]");
    } else {
      fail_at(line_no, "key '" + ln.key + "' appears before any section");
    }
  }
  // Cross-field invariants.
  for (int a = 0; a < 3; ++a) {
    if (cfg.grid_n[a] < 4)
      throw ConfigError(name + ": grid n must be >= 4 on every axis");
    if (!(cfg.grid_length[a] > 0.0))
      throw ConfigError(name + ": grid lengths must be positive");
  }
  if (cfg.model.name == "polyconvex") {
    const auto param = [&](const char* k, double dflt) {
      const auto it = cfg.model.params.find(k);
      return it == cfg.model.params.end() ? dflt : it->second;
    };
    if (!(param("q", 2.0) >= 2.0))
      throw ConfigError(name + ": model exponent q must satisfy q >= 2");
    if (!(param("rho", 2.0) > 1.0))
      throw ConfigError(name + ": model exponent rho must satisfy rho > 1");
    if (!(param("ell", 2.0) > 1.0))
      throw ConfigError(name + ": model exponent ell must satisfy ell > 1");
    if (!(param("delta", 0.1) > 0.0))
      throw ConfigError(name + ": model delta must be positive");
  }
  if (!(cfg.step.h > 0.0)) throw ConfigError(name + ": h must be positive");
  if (!(cfg.T >= 0.0)) throw ConfigError(name + ": T must be >= 0");
  const double ratio = cfg.T / cfg.step.h;
  if (std::abs(ratio - llround(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError(name +
                      ": T must be an integer multiple of the time step h");
  if (!(cfg.step.newton_tol > 0.0 && cfg.step.cg_tol > 0.0))
    throw ConfigError(name + ": solver tolerances must be positive");
  if (cfg.workers < 1) throw ConfigError(name + ": workers must be >= 1");
  if (cfg.study.levels < 3)
    cfg.study.levels = 3; // studies always use at least three levels
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Presets.

namespace {

/// Single-coordinate wave pattern: component i depends only on coordinate
/// axes[i]. Every pointwise product in the augmented flux then has factors
/// with disjoint coordinate dependence, so the discrete product rule is exact
/// at t = 0 and the drift diagnostics see the scheme's own O(h) error.
VectorField wave_field(const GridSpec& g, double amp,
                       const std::array<int, 3>& k,
                       const std::array<int, 3>& axes) {
  VectorField out(g);
  for (std::size_t p = 0; p < out.points(); ++p) {
    const auto x = g.position(p);
    for (int i = 0; i < 3; ++i) {
      const int c = axes[std::size_t(i)];
      out(p, i) = amp * std::sin(2.0 * M_PI * k[std::size_t(i)] *
                                 x[std::size_t(c)] / g.length[std::size_t(c)]);
    }
  }
  return out;
}

/// Cross pattern: every component depends on the full phase k . x.
VectorField cross_field(const GridSpec& g, double amp,
                        const std::array<int, 3>& k) {
  static const std::array<double, 3> phases = {0.0, 1.5707963267948966,
                                               3.141592653589793};
  VectorField out(g);
  for (std::size_t p = 0; p < out.points(); ++p) {
    const auto x = g.position(p);
    double phase = 0.0;
    for (int a = 0; a < 3; ++a)
      phase += 2.0 * M_PI * k[std::size_t(a)] * x[std::size_t(a)] /
               g.length[std::size_t(a)];
    for (int i = 0; i < 3; ++i)
      out(p, i) = amp * std::sin(phase + phases[std::size_t(i)]);
  }
  return out;
}

} // namespace

TensorField analytic_cross_gradient(const GridSpec& g, double amplitude,
                                    const std::array<int, 3>& k) {
  static const std::array<double, 3> phases = {0.0, 1.5707963267948966,
                                               3.141592653589793};
  TensorField F(g);
  for (std::size_t p = 0; p < F.points(); ++p) {
    const auto x = g.position(p);
    double phase = 0.0;
    for (int a = 0; a < 3; ++a)
      phase += 2.0 * M_PI * k[std::size_t(a)] * x[std::size_t(a)] /
               g.length[std::size_t(a)];
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a) {
        const double wave_num =
            2.0 * M_PI * k[std::size_t(a)] / g.length[std::size_t(a)];
        F(p, 3 * i + a) = (i == a ? 1.0 : 0.0) +
                          amplitude * wave_num *
                              std::cos(phase + phases[std::size_t(i)]);
      }
  }
  return F;
}

State make_initial_state(const RunConfig& cfg) {
  const GridSpec g = cfg.grid();
  const InitConfig& ic = cfg.init;

  VectorField u(g), v(g);
  if (ic.preset == "equilibrium") {
    // y = x, v = 0, eta = const
  } else if (ic.preset == "smooth-wave" || ic.preset == "offset-drift") {
    if (ic.pattern == "shear") {
      u = wave_field(g, ic.amplitude, ic.wave_k, {1, 2, 0});
      v = wave_field(g, ic.velocity_amplitude, ic.wave_k, {2, 0, 1});
    } else if (ic.pattern == "cross") {
      u = cross_field(g, ic.amplitude, ic.wave_k);
      v = cross_field(g, ic.velocity_amplitude, ic.wave_k);
    } else {
      throw ConfigError("unknown init pattern: " + ic.pattern);
    }
  } else {
    throw ConfigError("unknown init preset: " + ic.preset);
  }

  ScalarField eta(g);
  for (std::size_t p = 0; p < eta.points(); ++p) {
    const auto x = g.position(p);
    eta(p, 0) =
        ic.eta0 + ic.eta_amplitude *
                      std::sin(2.0 * M_PI * x[1] / g.length[1]);
    if (!(eta(p, 0) >= 0.0))
      throw ConfigError("init preset: eta0/eta_amplitude give negative "
                        "entropy on the grid");
  }

  State U = make_state(Mat3::identity(), u, v, eta, 0.0);

  // Amplitude guard: the motion must stay orientation preserving.
  const ScalarField dets = det_field(U.deformation_gradient());
  for (std::size_t p = 0; p < dets.points(); ++p)
    if (!(dets(p, 0) > 0.0))
      throw ConfigError(
          "init preset: det F <= 0 on the grid; reduce the amplitude");

  if (ic.preset == "offset-drift") {
    for (std::size_t p = 0; p < U.xi.points(); ++p) {
      for (int t = 0; t < 9; ++t) U.xi(p, kExtZeta + t) += ic.offset;
      U.xi(p, kExtW) += ic.offset;
    }
  }
  return U;
}

HeatSupplier make_heat_supplier(const RunConfig& cfg) {
  const GridSpec g = cfg.grid();
  const HeatConfig hc = cfg.heat;
  if (hc.preset == "zero") return zero_heat(g);
  if (hc.preset == "constant") {
    return [g, hc](int, double) {
      ScalarField r(g);
      r.fill(hc.value);
      return r;
    };
  }
  if (hc.preset == "bump") {
    return [g, hc](int, double) {
      ScalarField r(g);
      for (std::size_t p = 0; p < r.points(); ++p) {
        const auto x = g.position(p);
        double b = hc.amplitude;
        for (int a = 0; a < 3; ++a)
          b *= 0.5 * (1.0 - std::cos(2.0 * M_PI * x[std::size_t(a)] /
                                     g.length[std::size_t(a)]));
        r(p, 0) = b;
      }
      return r;
    };
  }
  throw ConfigError("unknown heat preset: " + hc.preset);
}

// ---------------------------------------------------------------------------
// CSV ledgers.

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

} // namespace

void write_energy_csv(const Trajectory& traj, const EnergyModel& model,
                      const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "step,t,total,kinetic,internal,relative_energy,dissipation_margin\n";
  for (int j = 0; j < int(traj.states.size()); ++j) {
    const State& U = traj.states[std::size_t(j)];
    const double kinetic = 0.5 * inner(U.v, U.v);
    const double internal = integrate(energy_density(model, U.xi, U.eta));
    const double rel =
        j == 0 ? 0.0 : traj.reports[std::size_t(j) - 1].relative_energy;
    const double margin =
        j == 0 ? 0.0 : traj.reports[std::size_t(j) - 1].dissipation_margin;
    out << j << "," << g17(U.t) << "," << g17(kinetic + internal) << ","
        << g17(kinetic) << "," << g17(internal) << "," << g17(rel) << ","
        << g17(margin) << "\n";
  }
}

void write_drift_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "step,t,zeta_drift,w_drift,curl_residual,piola_cof,piola_det,"
         "transport_cof,transport_det\n";
  for (const DriftRow& r : drift_ledger(traj)) {
    out << r.step << "," << g17(r.t) << "," << g17(r.zeta_drift) << ","
        << g17(r.w_drift) << "," << g17(r.curl) << "," << g17(r.piola_cof)
        << "," << g17(r.piola_det) << "," << g17(r.transport_cof) << ","
        << g17(r.transport_det) << "\n";
  }
}

void write_solver_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "step,t,newton_iters,cg_iters_total,grad_norm_final,el_residual,"
         "eta_min\n";
  for (int j = 1; j <= traj.steps(); ++j) {
    const StepReport& r = traj.reports[std::size_t(j) - 1];
    out << j << "," << g17(traj.states[std::size_t(j)].t) << ","
        << r.newton_iters << "," << r.cg_iters_total << ","
        << g17(r.grad_norm_final) << "," << g17(r.el_residual) << ","
        << g17(r.eta_min) << "\n";
  }
}

} // namespace polytherm
