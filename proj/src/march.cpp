#include "polytherm/march.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace polytherm {

double Trajectory::telescoping_sum() const {
  double s = 0.0;
  for (double d : step_delta_sq) s += d;
  return s;
}

namespace {

int step_count_for(double T, double h) {
  if (T < 0.0) throw std::invalid_argument("run: T must be >= 0");
  const double ratio = T / h;
  const long long n = llround(ratio);
  if (n < 0 || std::abs(ratio - double(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(
        "run: T must be an integer multiple of the time step h");
  return int(n);
}

void march_steps(Trajectory& traj, const HeatSupplier& heat, int n_steps,
                 const EnergyModel& model) {
  for (int j = 0; j < n_steps; ++j) {
    const State& prev = traj.states.back();
    const int step_index = int(traj.reports.size()) + 1;
    try {
      const ScalarField r = heat(step_index, prev.t);
      auto [next, rep] = solve_step(prev, r, traj.cfg, model);
      traj.step_delta_sq.push_back(state_delta_sq(prev, next));
      traj.step_heat.push_back(
          heat_supply_integral(prev, next, r, traj.cfg.h, model));
      traj.reports.push_back(rep);
      traj.states.push_back(std::move(next));
    } catch (const StepError& err) {
      traj.failure = RunFailure{step_index, err.what()};
      return;
    }
  }
}

} // namespace

Trajectory run(const State& init, const HeatSupplier& heat, double T,
               const StepConfig& cfg, const EnergyModel& model) {
  if (!(cfg.h > 0.0)) throw std::invalid_argument("run: h must be > 0");
  const int n = step_count_for(T, cfg.h);
  Trajectory traj;
  traj.model = spec_of(model);
  traj.cfg = cfg;
  traj.states.push_back(init);
  march_steps(traj, heat, n, model);
  return traj;
}

void extend(Trajectory& traj, const HeatSupplier& heat, double extra_T,
            const EnergyModel& model) {
  if (traj.failure)
    throw std::invalid_argument("extend: trajectory has a recorded failure");
  const int n = step_count_for(extra_T, traj.cfg.h);
  march_steps(traj, heat, n, model);
}

namespace {

State lerp_state(const State& a, const State& b, double s) {
  State out = a;
  for (std::size_t i = 0; i < out.y.size(); ++i)
    out.y[i] += s * (b.y[i] - a.y[i]);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] += s * (b.v[i] - a.v[i]);
  for (std::size_t i = 0; i < out.xi.size(); ++i)
    out.xi[i] += s * (b.xi[i] - a.xi[i]);
  for (std::size_t i = 0; i < out.eta.size(); ++i)
    out.eta[i] += s * (b.eta[i] - a.eta[i]);
  out.t = a.t + s * (b.t - a.t);
  return out;
}

void require_time_in_range(const Trajectory& traj, double t) {
  const double T = traj.final_time();
  const double slack = 1e-12 * std::max(1.0, T);
  if (t < -slack || t > T + slack)
    throw std::out_of_range("interpolant: t outside [0, T]");
}

} // namespace

State interp_linear(const Trajectory& traj, double t) {
  require_time_in_range(traj, t);
  const double h = traj.h();
  const int N = traj.steps();
  if (N == 0) return traj.states.front();
  const double ratio = t / h;
  const long long near = llround(ratio);
  if (near >= 0 && near <= N && std::abs(t - double(near) * h) <= 1e-12 * std::max(1.0, t))
    return traj.states[std::size_t(near)];
  const int j = std::min(N - 1, std::max(0, int(std::floor(ratio))));
  const double s = (t - double(j) * h) / h;
  return lerp_state(traj.states[std::size_t(j)], traj.states[std::size_t(j) + 1], s);
}

State interp_constant(const Trajectory& traj, double t) {
  require_time_in_range(traj, t);
  const double h = traj.h();
  const int N = traj.steps();
  if (N == 0 || t <= 1e-12 * std::max(1.0, traj.final_time()))
    return traj.states.front();
  // right-continuous: value U^j on ((j-1)h, jh]
  int j = int(std::ceil(t / h - 1e-12));
  j = std::min(N, std::max(1, j));
  return traj.states[std::size_t(j)];
}

// ---------------------------------------------------------------------------
// Checkpoint format: plain-text header, little-endian f64 blocks, trailing
// FNV-1a 64 checksum over every preceding byte.

namespace {

constexpr char kMagic[] = "POLYTHERM-CKPT 1";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= std::uint64_t(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(char((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

void put_fields(std::string& out, const std::vector<double>& v) {
  for (double d : v) put_f64(out, d);
}

std::string fmt_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  std::uint64_t u64() {
    if (pos + 8 > bytes.size())
      throw CheckpointError("checkpoint: truncated binary section");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i)
      x |= std::uint64_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64_block(std::vector<double>& out, std::size_t count) {
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = f64();
  }
};

} // namespace

void checkpoint_save(const Trajectory& traj, const std::string& path) {
  std::ostringstream head;
  head << kMagic << "\n";
  const GridSpec& g = traj.grid();
  head << "grid_n " << g.n[0] << " " << g.n[1] << " " << g.n[2] << "\n";
  head << "grid_length " << fmt_double(g.length[0]) << " "
       << fmt_double(g.length[1]) << " " << fmt_double(g.length[2]) << "\n";
  head << "ordering ext=F9_rowmajor,zeta9_rowmajor,w1\n";
  head << "model " << traj.model.name << "\n";
  for (const auto& [key, value] : traj.model.params)
    head << "model_param " << key << " " << fmt_double(value) << "\n";
  const StepConfig& c = traj.cfg;
  head << "cfg " << fmt_double(c.h) << " " << fmt_double(c.newton_tol) << " "
       << c.newton_max << " " << fmt_double(c.cg_tol) << " " << c.cg_max << " "
       << fmt_double(c.backtrack_factor) << " " << fmt_double(c.armijo_c)
       << " " << c.backtrack_max << "\n";
  head << "states " << traj.states.size() << "\n";
  head << "reports " << traj.reports.size() << "\n";
  if (traj.failure) {
    std::string msg = traj.failure->what;
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    head << "failure " << traj.failure->step << " " << msg.size() << " " << msg
         << "\n";
  } else {
    head << "failure none\n";
  }
  head << "DATA\n";

  std::string buf = head.str();
  for (const State& U : traj.states) {
    for (double d : U.y_lin.m) put_f64(buf, d);
    put_fields(buf, U.y.values());
    put_fields(buf, U.v.values());
    put_fields(buf, U.xi.values());
    put_fields(buf, U.eta.values());
    put_f64(buf, U.t);
  }
  for (const StepReport& r : traj.reports) {
    put_f64(buf, double(r.newton_iters));
    put_f64(buf, double(r.cg_iters_total));
    put_f64(buf, r.grad_norm_final);
    put_f64(buf, r.el_residual);
    put_f64(buf, r.energy_before);
    put_f64(buf, r.energy_after);
    put_f64(buf, r.relative_energy);
    put_f64(buf, r.dissipation_margin);
    put_f64(buf, r.eta_min);
  }
  for (double d : traj.step_delta_sq) put_f64(buf, d);
  for (double d : traj.step_heat) put_f64(buf, d);
  put_u64(buf, fnv1a64(buf));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open for writing: " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw CheckpointError("checkpoint: write failed: " + path);
}

Trajectory checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  if (buf.size() < sizeof(kMagic) + 8)
    throw CheckpointError("checkpoint: file too short");

  const std::string body = buf.substr(0, buf.size() - 8);
  Reader tail{buf, buf.size() - 8};
  if (tail.u64() != fnv1a64(body))
    throw CheckpointError("checkpoint: checksum mismatch (corrupted file)");

  const std::size_t data_tag = body.find("DATA\n");
  if (data_tag == std::string::npos)
    throw CheckpointError("checkpoint: missing DATA section");
  std::istringstream head(body.substr(0, data_tag));

  std::string line;
  std::getline(head, line);
  if (line != kMagic)
    throw CheckpointError("checkpoint: format-version mismatch: " + line);

  Trajectory traj;
  std::array<int, 3> n{};
  std::array<double, 3> length{};
  std::size_t n_states = 0, n_reports = 0;
  std::optional<RunFailure> failure;
  while (std::getline(head, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "grid_n") ls >> n[0] >> n[1] >> n[2];
    else if (key == "grid_length") ls >> length[0] >> length[1] >> length[2];
    else if (key == "ordering") continue;
    else if (key == "model") ls >> traj.model.name;
    else if (key == "model_param") {
      std::string pk;
      double pv;
      ls >> pk >> pv;
      traj.model.params[pk] = pv;
    } else if (key == "cfg") {
      ls >> traj.cfg.h >> traj.cfg.newton_tol >> traj.cfg.newton_max >>
          traj.cfg.cg_tol >> traj.cfg.cg_max >> traj.cfg.backtrack_factor >>
          traj.cfg.armijo_c >> traj.cfg.backtrack_max;
    } else if (key == "states") ls >> n_states;
    else if (key == "reports") ls >> n_reports;
    else if (key == "failure") {
      std::string tag;
      ls >> tag;
      if (tag != "none") {
        RunFailure f;
        f.step = std::stoi(tag);
        std::size_t len = 0;
        ls >> len;
        std::string rest;
        std::getline(ls, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
        f.what = rest.substr(0, len);
        failure = f;
      }
    } else
      throw CheckpointError("checkpoint: unknown header key: " + key);
    if (!ls) throw CheckpointError("checkpoint: malformed header line: " + line);
  }
  traj.failure = failure;

  const GridSpec grid(n, length);
  Reader rd{buf, data_tag + 5};
  const std::size_t np = grid.points();
  traj.states.reserve(n_states);
  for (std::size_t s = 0; s < n_states; ++s) {
    State U;
    for (double& d : U.y_lin.m) d = rd.f64();
    U.y = VectorField(grid);
    U.v = VectorField(grid);
    U.xi = ExtField(grid);
    U.eta = ScalarField(grid);
    rd.f64_block(U.y.values(), np * 3);
    rd.f64_block(U.v.values(), np * 3);
    rd.f64_block(U.xi.values(), np * std::size_t(kExtComps));
    rd.f64_block(U.eta.values(), np);
    U.t = rd.f64();
    traj.states.push_back(std::move(U));
  }
  traj.reports.reserve(n_reports);
  for (std::size_t s = 0; s < n_reports; ++s) {
    StepReport r;
    r.newton_iters = int(rd.f64());
    r.cg_iters_total = int(rd.f64());
    r.grad_norm_final = rd.f64();
    r.el_residual = rd.f64();
    r.energy_before = rd.f64();
    r.energy_after = rd.f64();
    r.relative_energy = rd.f64();
    r.dissipation_margin = rd.f64();
    r.eta_min = rd.f64();
    traj.reports.push_back(r);
  }
  rd.f64_block(traj.step_delta_sq, n_reports);
  rd.f64_block(traj.step_heat, n_reports);
  if (rd.pos != buf.size() - 8)
    throw CheckpointError("checkpoint: trailing bytes in binary section");
  return traj;
}

} // namespace polytherm
