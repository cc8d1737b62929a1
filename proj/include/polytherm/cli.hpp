/// @file cli.hpp
/// @brief Run configuration, initial-data and heat presets, CSV ledgers, and
/// the command entry points used by the polytherm executable.

#pragma once

#include <iosfwd>
#include <string>

#include "polytherm/diagnostics.hpp"

namespace polytherm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InitConfig {
  std::string preset = "equilibrium"; ///< equilibrium | smooth-wave | offset-drift
  std::string pattern = "shear";      ///< shear | cross (smooth-wave variants)
  double amplitude = 0.02;
  double velocity_amplitude = 0.1;
  std::array<int, 3> wave_k = {1, 1, 1};
  double eta0 = 1.0;
  double eta_amplitude = 0.0;
  double offset = 0.01; ///< extended-variable offset for offset-drift
};

struct HeatConfig {
  std::string preset = "zero"; ///< zero | constant | bump
  double value = 0.0;          ///< constant preset
  double amplitude = 0.0;      ///< bump preset
};

struct StudyConfig {
  int levels = 3;
  double base_h = 4e-3; ///< coarsest level; halved per level
  double T = 0.1;       ///< horizon of the refinement runs
  int ref_refine = 8;   ///< relative-entropy reference runs at h / ref_refine
  std::array<int, 3> piola_grids = {8, 16, 32};
};

struct ReferenceConfig {
  std::string preset = "fine-run"; ///< fine-run | equilibrium
  double M = 3.0;                  ///< Gamma_M bound for the reference
};

struct RunConfig {
  std::array<int, 3> grid_n = {8, 8, 8};
  std::array<double, 3> grid_length = {1.0, 1.0, 1.0};
  ModelSpec model{"polyconvex", {}};
  InitConfig init;
  HeatConfig heat;
  double T = 0.1;
  StepConfig step; ///< step.h is the run's h
  std::string out_dir = "out";
  StudyConfig study;
  ReferenceConfig reference;
  int workers = 1;
  unsigned long long seed = 12345;

  GridSpec grid() const { return GridSpec(grid_n, grid_length); }
};

/// Parses the sectioned key/value configuration format. Unknown sections or
/// keys are errors (no silent defaults for misspellings); messages carry the
/// line number.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& name);

/// Initial-data presets; throws ConfigError when the amplitude guard
/// det F > 0 or eta >= 0 fails on the grid.
State make_initial_state(const RunConfig& cfg);

HeatSupplier make_heat_supplier(const RunConfig& cfg);

/// Analytic deformation gradient of the cross-pattern motion, sampled on the
/// grid (used by the Piola refinement study).
TensorField analytic_cross_gradient(const GridSpec& g, double amplitude,
                                    const std::array<int, 3>& k);

// CSV ledgers; floating point printed with 17 significant digits.
void write_energy_csv(const Trajectory& traj, const EnergyModel& model,
                      const std::string& path);
void write_drift_csv(const Trajectory& traj, const std::string& path);
void write_solver_csv(const Trajectory& traj, const std::string& path);

/// Exit codes: 0 all certificates pass, 1 a certificate failed,
/// 2 configuration error, 3 step failure.
int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_check(unsigned long long seed, int workers, std::ostream& log);
int cmd_study(const RunConfig& cfg, std::ostream& log);
int cmd_energy_report(const std::string& checkpoint_path,
                      const std::string& out_dir, std::ostream& log);

} // namespace polytherm
