#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "polytherm/cli.hpp"

using namespace polytherm;

namespace {

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
          ("polytherm_cli_" + std::to_string(std::rand()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

constexpr const char* kMinimalConfig = R"(
[grid]
n = 8 8 8
length = 1.0 1.0 1.0

[model]
name = polyconvex

[time]
T = 0.004
h = 0.001
)";

} // namespace

TEST_CASE("minimal config parses with documented defaults") {
  const RunConfig cfg = parse_config_text(kMinimalConfig, "<test>");
  CHECK(cfg.grid_n == std::array<int, 3>{8, 8, 8});
  CHECK(cfg.model.name == "polyconvex");
  CHECK(cfg.init.preset == "equilibrium");
  CHECK(cfg.heat.preset == "zero");
  CHECK(cfg.step.newton_tol == 1e-9);
  CHECK(cfg.step.newton_max == 50);
  CHECK(cfg.step.cg_tol == 1e-10);
  CHECK(cfg.step.cg_max == 500);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.T == 0.004);
  CHECK(cfg.step.h == 0.001);
}

TEST_CASE("unknown keys and sections are rejected with line numbers") {
  const std::string bad_key = "[grid]\nn = 8 8 8\nlenght = 1 1 1\n";
  try {
    parse_config_text(bad_key, "<test>");
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    const std::string what = err.what();
    CHECK(what.find("line 3") != std::string::npos);
    CHECK(what.find("lenght") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[grib]\nn = 8 8 8\n", "<test>"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("n = 8 8 8\n", "<test>"), ConfigError);
  CHECK_THROWS_AS(parse_config("/nonexistent/path/run.cfg"), ConfigError);
}

TEST_CASE("model exponent ranges are enforced") {
  const std::string ell_one = std::string(kMinimalConfig) + "[model]\nell = 1.0\n";
  try {
    parse_config_text(ell_one, "<test>");
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("ell") != std::string::npos);
  }
  const std::string q_low = std::string(kMinimalConfig) + "[model]\nq = 1.9\n";
  CHECK_THROWS_AS(parse_config_text(q_low, "<test>"), ConfigError);
}

TEST_CASE("non-integral step counts are rejected") {
  const std::string bad = R"(
[grid]
n = 8 8 8
length = 1 1 1
[time]
T = 0.35
h = 0.1
)";
  CHECK_THROWS_AS(parse_config_text(bad, "<test>"), ConfigError);
}

TEST_CASE("equilibrium preset: identity gradient, zero velocity") {
  RunConfig cfg;
  cfg.grid_n = {4, 4, 4};
  const State U = make_initial_state(cfg);
  CHECK(max_abs(U.v) == 0.0);
  CHECK(max_abs(U.y) == 0.0);
  for (std::size_t p = 0; p < U.xi.points(); ++p) {
    const ExtVec expected = phi(Mat3::identity());
    for (int c = 0; c < kExtComps; ++c)
      CHECK(U.xi(p, c) == expected[std::size_t(c)]);
    CHECK(U.eta(p, 0) == 1.0);
  }
}

TEST_CASE("smooth-wave preset guards the orientation and entropy signs") {
  RunConfig cfg;
  cfg.grid_n = {8, 8, 8};
  cfg.init.preset = "smooth-wave";
  const State U = make_initial_state(cfg);
  const ScalarField dets = det_field(U.deformation_gradient());
  for (std::size_t p = 0; p < dets.points(); ++p) CHECK(dets(p, 0) > 0.0);
  const StateValidation val = validate(U);
  CHECK(val.ok());

  cfg.init.amplitude = 0.5; // far beyond the det F > 0 guard
  CHECK_THROWS_AS(make_initial_state(cfg), ConfigError);

  cfg.init.amplitude = 0.02;
  cfg.init.eta0 = 0.1;
  cfg.init.eta_amplitude = 0.5;
  CHECK_THROWS_AS(make_initial_state(cfg), ConfigError);
}

TEST_CASE("offset preset shifts the extended components only") {
  RunConfig cfg;
  cfg.grid_n = {4, 4, 4};
  cfg.init.preset = "offset-drift";
  cfg.init.offset = 0.125;
  const State U = make_initial_state(cfg);
  const TensorField F = U.deformation_gradient();
  const TensorField C = cof_field(F);
  const ScalarField W = det_field(F);
  for (std::size_t p = 0; p < F.points(); ++p) {
    for (int t = 0; t < 9; ++t)
      CHECK(U.xi(p, kExtZeta + t) == C(p, t) + 0.125);
    CHECK(U.xi(p, kExtW) == W(p, 0) + 0.125);
  }
}

TEST_CASE("heat presets") {
  RunConfig cfg;
  cfg.grid_n = {4, 4, 4};
  SUBCASE("zero") {
    const ScalarField r = make_heat_supplier(cfg)(1, 0.0);
    CHECK(max_abs(r) == 0.0);
  }
  SUBCASE("constant") {
    cfg.heat.preset = "constant";
    cfg.heat.value = 0.7;
    const ScalarField r = make_heat_supplier(cfg)(1, 0.0);
    for (std::size_t p = 0; p < r.points(); ++p) CHECK(r(p, 0) == 0.7);
  }
  SUBCASE("bump") {
    cfg.heat.preset = "bump";
    cfg.heat.amplitude = 1.0;
    const ScalarField r = make_heat_supplier(cfg)(1, 0.0);
    double mx = 0.0;
    for (std::size_t p = 0; p < r.points(); ++p) {
      CHECK(r(p, 0) >= 0.0);
      mx = std::max(mx, r(p, 0));
    }
    CHECK(mx > 0.5);
  }
  SUBCASE("unknown") {
    cfg.heat.preset = "volcano";
    CHECK_THROWS_AS(make_heat_supplier(cfg), ConfigError);
  }
}

TEST_CASE("cmd_run writes deterministic ledgers and passes certificates") {
  TempDir tmp;
  RunConfig cfg = parse_config_text(kMinimalConfig, "<test>");
  cfg.out_dir = tmp.path("out");
  std::ostringstream log;
  CHECK(cmd_run(cfg, log) == 0);
  CHECK(std::filesystem::exists(cfg.out_dir + "/energy.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir + "/drift.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir + "/solver.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir + "/checkpoint.bin"));
  const std::string first = slurp(cfg.out_dir + "/energy.csv");

  // equilibrium: the total-energy column is constant
  std::istringstream rows(first);
  std::string line;
  std::getline(rows, line); // header
  std::string expected_total;
  while (std::getline(rows, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    const std::string total = line.substr(c2 + 1, c3 - c2 - 1);
    if (expected_total.empty()) expected_total = total;
    CHECK(total == expected_total);
  }

  // byte-identical on rerun
  cfg.out_dir = tmp.path("out2");
  std::ostringstream log2;
  CHECK(cmd_run(cfg, log2) == 0);
  CHECK(slurp(cfg.out_dir + "/energy.csv") == first);
}

TEST_CASE("cmd_run reports oversized steps as failures") {
  TempDir tmp;
  RunConfig cfg = parse_config_text(kMinimalConfig, "<test>");
  cfg.init.preset = "smooth-wave";
  cfg.step.h = 0.5;
  cfg.T = 1.0;
  cfg.step.newton_max = 0;
  cfg.out_dir = tmp.path("fail");
  std::ostringstream log;
  CHECK(cmd_run(cfg, log) == 3);
  CHECK(std::filesystem::exists(cfg.out_dir + "/failure.txt"));
}

TEST_CASE("energy-report re-emits identical ledgers from the checkpoint") {
  TempDir tmp;
  RunConfig cfg = parse_config_text(kMinimalConfig, "<test>");
  cfg.init.preset = "smooth-wave";
  cfg.out_dir = tmp.path("out");
  std::ostringstream log;
  CHECK(cmd_run(cfg, log) == 0);
  CHECK(cmd_energy_report(cfg.out_dir + "/checkpoint.bin", tmp.path("re"),
                          log) == 0);
  CHECK(slurp(tmp.path("re") + "/energy.csv") ==
        slurp(cfg.out_dir + "/energy.csv"));
  CHECK(slurp(tmp.path("re") + "/drift.csv") ==
        slurp(cfg.out_dir + "/drift.csv"));
  CHECK(slurp(tmp.path("re") + "/solver.csv") ==
        slurp(cfg.out_dir + "/solver.csv"));
}

TEST_CASE("cmd_study on the equilibrium preset reports exact verdicts") {
  TempDir tmp;
  RunConfig cfg = parse_config_text(kMinimalConfig, "<test>");
  cfg.grid_n = {4, 4, 4};
  cfg.study.levels = 3;
  cfg.study.base_h = 4e-3;
  cfg.study.T = 0.04;
  cfg.study.ref_refine = 4;
  cfg.study.piola_grids = {8, 16, 32};
  cfg.out_dir = tmp.path("study");
  std::ostringstream log;
  CHECK(cmd_study(cfg, log) == 0);
  REQUIRE(std::filesystem::exists(cfg.out_dir + "/study.csv"));
  const std::string csv = slurp(cfg.out_dir + "/study.csv");
  CHECK(csv.find("exact") != std::string::npos);
  CHECK(csv.find("piola_cof_order") != std::string::npos);
  CHECK(csv.find("FAIL") == std::string::npos);
}

TEST_CASE("cmd_check passes on the default build") {
  std::ostringstream log;
  CHECK(cmd_check(12345, 1, log) == 0);
  CHECK(log.str().find("FAIL") == std::string::npos);
}

TEST_CASE("a sign error in the adjoint is caught by the identity check") {
  // the invariant cmd_check relies on: <A v, m> == <v, A* m>; flip the sign
  // of the adjoint and the identity must fail by a wide margin
  const GridSpec g({6, 6, 6}, {1.0, 1.0, 1.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TensorField F0(g);
  for (std::size_t i = 0; i < F0.size(); ++i) F0[i] = u(rng);
  VectorField v(g);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(rng);
  ExtField m(g);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);

  VectorField broken = constraint_adjoint(F0, m);
  scale(broken, -1.0); // injected sign error
  const double lhs = inner(constraint_apply(F0, v, 1.0, ExtField(g)), m);
  const double rhs = inner(v, broken);
  CHECK(std::abs(lhs - rhs) > 1e-6 * (std::abs(lhs) + std::abs(rhs)));
}
