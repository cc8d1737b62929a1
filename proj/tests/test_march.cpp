#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polytherm/cli.hpp"
#include "polytherm/march.hpp"

using namespace polytherm;

namespace {

State wave_state(std::array<int, 3> n = {8, 8, 8}) {
  RunConfig cfg;
  cfg.grid_n = n;
  cfg.init.preset = "smooth-wave";
  return make_initial_state(cfg);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::temp_directory_path() /
          ("polytherm_test_" + std::to_string(std::rand()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("T = 0 yields the trajectory {init}; non-multiples are rejected") {
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 0.1;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.0, sc, model);
  CHECK(traj.steps() == 0);
  CHECK(traj.states.size() == 1);
  CHECK_THROWS_AS(run(init, zero_heat(init.grid()), 0.35, sc, model),
                  std::invalid_argument);
}

TEST_CASE("uniform equilibrium run stays put for 100 steps") {
  RunConfig cfg;
  cfg.grid_n = {4, 4, 4};
  const State init = make_initial_state(cfg);
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 1e-3;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.1, sc, model);
  REQUIRE(!traj.failure);
  REQUIRE(traj.steps() == 100);
  for (const State& U : traj.states) {
    CHECK(max_abs(lincomb(U.v, -1.0, init.v)) <= 1e-12);
    CHECK(max_abs(lincomb(U.xi, -1.0, init.xi)) <= 1e-12);
    CHECK(max_abs(lincomb(U.eta, -1.0, init.eta)) <= 1e-12);
  }
}

TEST_CASE("step failure is recorded with the partial trajectory") {
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 0.05;
  sc.newton_max = 0;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.2, sc, model);
  REQUIRE(traj.failure.has_value());
  CHECK(traj.failure->step == 1);
  CHECK(traj.states.size() == 1);
}

TEST_CASE("interpolants: nodes, midpoints, continuity convention, range") {
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 1e-3;
  const Trajectory traj = run(init, zero_heat(init.grid()), 5e-3, sc, model);
  REQUIRE(!traj.failure);
  const double h = sc.h;

  // nodes: both interpolants return the stored iterate
  for (int j = 0; j <= traj.steps(); ++j) {
    const double t = j * h;
    CHECK(interp_linear(traj, t).v == traj.states[std::size_t(j)].v);
    CHECK(interp_constant(traj, t).v == traj.states[std::size_t(j)].v);
  }

  // midpoint of an interval: the arithmetic mean of the endpoint states
  const State mid = interp_linear(traj, 2.5 * h);
  for (std::size_t i = 0; i < mid.v.size(); ++i)
    CHECK(mid.v[i] == doctest::Approx(0.5 * (traj.states[2].v[i] +
                                             traj.states[3].v[i]))
                          .epsilon(1e-14)
                          .scale(1.0));

  // right-continuity of the piecewise-constant interpolant
  CHECK(interp_constant(traj, 2.0 * h + 1e-9 * h).v == traj.states[3].v);
  CHECK(interp_constant(traj, 3.0 * h).v == traj.states[3].v);

  CHECK_THROWS_AS(interp_linear(traj, -0.1), std::out_of_range);
  CHECK_THROWS_AS(interp_constant(traj, traj.final_time() + 0.1),
                  std::out_of_range);
}

TEST_CASE("linear interpolant slope equals the divided difference") {
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 1e-3;
  const Trajectory traj = run(init, zero_heat(init.grid()), 3e-3, sc, model);
  REQUIRE(!traj.failure);
  const double h = sc.h;
  const State a = interp_linear(traj, 1.25 * h);
  const State b = interp_linear(traj, 1.75 * h);
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double slope = (b.v[i] - a.v[i]) / (0.5 * h);
    const double expected = (traj.states[2].v[i] - traj.states[1].v[i]) / h;
    CHECK(slope == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("interpolant gap obeys the sqrt(h E / 3) bound") {
  const State init = wave_state({8, 8, 8});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 2e-3;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.02, sc, model);
  REQUIRE(!traj.failure);

  // time quadrature of || linear - constant ||^2 for the F block
  const int sub = 64;
  double quad = 0.0;
  for (int j = 1; j <= traj.steps(); ++j)
    for (int s = 0; s < sub; ++s) {
      const double t = (j - 1 + (s + 0.5) / sub) * sc.h;
      const State lin = interp_linear(traj, t);
      const State con = interp_constant(traj, t);
      const TensorField d = lincomb(lin.deformation_gradient(), -1.0,
                                    con.deformation_gradient());
      quad += inner(d, d) * (sc.h / sub);
    }
  const double gap = std::sqrt(quad);
  const double exact = interpolant_gap_F(traj);
  CHECK(gap <= exact * (1.0 + 1e-3));
  CHECK(gap >= exact * (1.0 - 2e-3));

  double sum_delta = 0.0;
  for (double d : traj.step_delta_sq) sum_delta += d;
  CHECK(exact <= std::sqrt(sc.h * sum_delta / 3.0) * (1.0 + 1e-12));
}

TEST_CASE("checkpoint round trip is byte-identical and checksum-guarded") {
  TempDir tmp;
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 1e-3;
  Trajectory traj = run(init, zero_heat(init.grid()), 4e-3, sc, model);
  REQUIRE(!traj.failure);

  const std::string p1 = tmp.path("a.ckpt");
  const std::string p2 = tmp.path("b.ckpt");
  checkpoint_save(traj, p1);
  const Trajectory loaded = checkpoint_load(p1);
  checkpoint_save(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.states.size() == traj.states.size());
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    CHECK(loaded.states[j].v == traj.states[j].v);
    CHECK(loaded.states[j].xi == traj.states[j].xi);
    CHECK(loaded.states[j].eta == traj.states[j].eta);
    CHECK(loaded.states[j].y == traj.states[j].y);
  }

  // corrupt one payload byte: integrity error
  std::string bytes = slurp(p1);
  bytes[bytes.size() / 2] = char(bytes[bytes.size() / 2] ^ 0x5a);
  std::ofstream out(tmp.path("c.ckpt"), std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.close();
  CHECK_THROWS_AS(checkpoint_load(tmp.path("c.ckpt")), CheckpointError);
  CHECK_THROWS_AS(checkpoint_load(tmp.path("missing.ckpt")), CheckpointError);

  // format-version mismatch is rejected before any payload parsing
  std::string v2 = "POLYTHERM-CKPT 2" + slurp(p1).substr(16);
  // recompute the trailing checksum so only the version differs
  v2.resize(v2.size() - 8);
  {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : v2) {
      hash ^= std::uint64_t(c);
      hash *= 1099511628211ULL;
    }
    for (int i = 0; i < 8; ++i) v2.push_back(char((hash >> (8 * i)) & 0xff));
  }
  std::ofstream out2(tmp.path("v2.ckpt"), std::ios::binary | std::ios::trunc);
  out2.write(v2.data(), std::streamsize(v2.size()));
  out2.close();
  CHECK_THROWS_AS(checkpoint_load(tmp.path("v2.ckpt")), CheckpointError);
}

TEST_CASE("a failure record survives the checkpoint round trip") {
  TempDir tmp;
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 0.05;
  sc.newton_max = 0;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.2, sc, model);
  REQUIRE(traj.failure.has_value());
  checkpoint_save(traj, tmp.path("failed.ckpt"));
  Trajectory loaded = checkpoint_load(tmp.path("failed.ckpt"));
  REQUIRE(loaded.failure.has_value());
  CHECK(loaded.failure->step == traj.failure->step);
  CHECK(loaded.failure->what == traj.failure->what);
  CHECK_THROWS_AS(extend(loaded, zero_heat(init.grid()), 0.05, model),
                  std::invalid_argument);
}

TEST_CASE("restart continues bitwise-identically to an uninterrupted run") {
  TempDir tmp;
  const State init = wave_state({4, 4, 4});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 1e-3;

  const Trajectory full = run(init, zero_heat(init.grid()), 8e-3, sc, model);
  REQUIRE(!full.failure);

  Trajectory half = run(init, zero_heat(init.grid()), 4e-3, sc, model);
  checkpoint_save(half, tmp.path("half.ckpt"));
  Trajectory resumed = checkpoint_load(tmp.path("half.ckpt"));
  const auto model2 = make_model(resumed.model);
  extend(resumed, zero_heat(init.grid()), 4e-3, *model2);
  REQUIRE(!resumed.failure);

  REQUIRE(resumed.states.size() == full.states.size());
  for (std::size_t j = 0; j < full.states.size(); ++j) {
    CHECK(resumed.states[j].v == full.states[j].v);
    CHECK(resumed.states[j].xi == full.states[j].xi);
    CHECK(resumed.states[j].eta == full.states[j].eta);
    CHECK(resumed.states[j].y == full.states[j].y);
  }
}

TEST_CASE("uniform stability bound holds along a smooth run") {
  const State init = wave_state({8, 8, 8});
  const PolyconvexEnergy model;
  StepConfig sc;
  sc.h = 2e-3;
  const Trajectory traj = run(init, zero_heat(init.grid()), 0.05, sc, model);
  REQUIRE(!traj.failure);
  const double E = stability_bound(traj, model);
  CHECK(traj.telescoping_sum() <= E);
  const double e0 = total_energy(traj.states.front(), model);
  for (const State& U : traj.states) {
    const double kin = 0.5 * inner(U.v, U.v);
    const double internal = integrate(energy_density(model, U.xi, U.eta));
    CHECK(kin + internal <= e0 + 1e-6 * (1.0 + std::abs(e0)));
  }
}
