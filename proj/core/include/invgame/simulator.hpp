#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "invgame/game_model.hpp"
#include "invgame/types.hpp"

namespace invgame {

using Policy = std::function<Vector(const Vector&)>;

// Uniformly sampled closed-loop trajectory. For target schedules the states
// are physical coordinates; segment_starts/segment_targets record where each
// regulation segment begins and which target it tracks (the game dynamics
// hold in the error coordinates x - target).
struct Trajectory {
  Vector times;
  std::vector<Vector> states;
  std::array<std::vector<Vector>, 2> inputs;
  double dt = 0.0;
  std::vector<int> segment_starts;
  std::vector<Vector> segment_targets;

  int samples() const { return static_cast<int>(states.size()); }
  // Index of the segment sample k belongs to (boundary samples belong to the
  // segment they terminate).
  int segment_of(int k) const;
};

// One identification measurement in game (error) coordinates.
struct MeasurementSample {
  Vector x;
  Vector xdot;
  Vector u1;
  Vector u2;
  double t = 0.0;
};

// One leg of a multi-target data-generation schedule. If initial_state is
// set the segment restarts there; otherwise it continues from the previous
// segment's terminal physical state.
struct ScheduleSegment {
  double duration = 0.0;
  Vector target;
  std::optional<Vector> initial_state;
};

enum class DerivativeMode { kExactDynamics, kFiniteDifference };

// Classical fixed-step RK4 integration of the closed loop, inputs recomputed
// at every stage and recorded at sample times. Throws NumericalError if the
// state norm exceeds 1e6.
Trajectory integrate_closed_loop(const GameDefinition& game,
                                 const Policy& policy1, const Policy& policy2,
                                 const Vector& x0, double duration, double dt);

// Successive regulation toward a list of targets: each segment integrates the
// error coordinates e = x - target and is mapped back to physical coordinates
// for the returned trajectory. The terminal sample of a segment is not
// duplicated as the initial sample of the next.
Trajectory run_target_schedule(const GameDefinition& game,
                               const Policy& policy1, const Policy& policy2,
                               const Vector& x0,
                               const std::vector<ScheduleSegment>& schedule,
                               double dt);

// Per-sample measurements in error coordinates. kExactDynamics evaluates the
// known right-hand side; kFiniteDifference differentiates the sampled states
// per segment (central interior, second-order one-sided at segment edges)
// and smooths with a 5-point moving average.
std::vector<MeasurementSample> sample_dataset(const Trajectory& traj,
                                              const GameDefinition& game,
                                              DerivativeMode mode);

// Unfiltered finite-difference derivatives of a uniformly sampled sequence.
std::vector<Vector> finite_difference_derivatives(
    const std::vector<Vector>& states, double dt);

// Centered moving average with the window shrunk symmetrically at the edges
// (half-width min(radius, distance to either end)), so linear sequences pass
// through unchanged.
std::vector<Vector> moving_average_filter(const std::vector<Vector>& values,
                                          int radius = 2);

// CSV export: columns t, x1..x_n, u1_1.., u2_1.., one row per sample. Extra
// header lines (starting with '#') may be supplied by the caller.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& header_lines = {});

}  // namespace invgame
