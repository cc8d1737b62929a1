/// @file march.hpp
/// @brief Time-marching driver over [0, T], interpolants of the iterates,
/// and bit-exact checkpoint / restart.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polytherm/varstep.hpp"

namespace polytherm {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFailure {
  int step = 0; ///< 1-based index of the failed step
  std::string what;
};

/// Heat supply for step j (1-based), evaluated at the pre-step time t_{j-1}.
using HeatSupplier = std::function<ScalarField(int step, double t_prev)>;

struct Trajectory {
  ModelSpec model;
  StepConfig cfg;
  std::vector<State> states;      ///< states.front() is the initial state
  std::vector<StepReport> reports; ///< one per accepted step
  std::vector<double> step_delta_sq; ///< ||U^j - U^{j-1}||^2 per step
  std::vector<double> step_heat;     ///< h * int theta1 r / theta0 per step
  std::optional<RunFailure> failure;

  double h() const { return cfg.h; }
  int steps() const { return int(states.size()) - 1; }
  double final_time() const { return states.back().t; }
  const GridSpec& grid() const { return states.front().grid(); }

  /// Telescoping sum sum_j ||U^j - U^{j-1}||^2 (the scheme's uniform stability bound).
  double telescoping_sum() const;
};

/// Marches N = T/h steps from init. T must be an integer multiple of h
/// (N = 0 gives the trajectory {init}). A step failure is recorded in
/// `failure` and the partial trajectory is returned.
Trajectory run(const State& init, const HeatSupplier& heat, double T,
               const StepConfig& cfg, const EnergyModel& model);

/// Continues an existing trajectory for extra_T more time.
void extend(Trajectory& traj, const HeatSupplier& heat, double extra_T,
            const EnergyModel& model);

/// Piecewise linear interpolant of the iterates at time t in [0, T].
State interp_linear(const Trajectory& traj, double t);

/// Piecewise constant interpolant, right-continuous: U^j on ((j-1)h, jh].
State interp_constant(const Trajectory& traj, double t);

/// Self-describing binary checkpoint with a plain-text header and a trailing
/// checksum; round trips bit-exactly.
void checkpoint_save(const Trajectory& traj, const std::string& path);
Trajectory checkpoint_load(const std::string& path);

inline ScalarField zero_heat_field(const GridSpec& g) { return ScalarField(g); }

inline HeatSupplier zero_heat(const GridSpec& g) {
  return [g](int, double) { return ScalarField(g); };
}

} // namespace polytherm
