#include "invgame/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace invgame {

namespace {

constexpr double kDivergenceNorm = 1e6;

Vector rhs(const GameDefinition& game, const Policy& policy1,
           const Policy& policy2, const Vector& x) {
  return eval_dynamics(game, x, policy1(x), policy2(x));
}

// One RK4 step with inputs recomputed at each stage.
Vector rk4_step(const GameDefinition& game, const Policy& policy1,
                const Policy& policy2, const Vector& x, double dt) {
  const Vector k1 = rhs(game, policy1, policy2, x);
  const Vector k2 = rhs(game, policy1, policy2, x + 0.5 * dt * k1);
  const Vector k3 = rhs(game, policy1, policy2, x + 0.5 * dt * k2);
  const Vector k4 = rhs(game, policy1, policy2, x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void append_sample(Trajectory* traj, const Policy& policy1,
                   const Policy& policy2, const Vector& error_state,
                   const Vector& target) {
  traj->states.push_back(error_state + target);
  traj->inputs[0].push_back(policy1(error_state));
  traj->inputs[1].push_back(policy2(error_state));
}

}  // namespace

int Trajectory::segment_of(int k) const {
  int seg = 0;
  for (size_t s = 1; s < segment_starts.size(); ++s) {
    if (k >= segment_starts[s]) seg = static_cast<int>(s);
  }
  return seg;
}

Trajectory integrate_closed_loop(const GameDefinition& game,
                                 const Policy& policy1, const Policy& policy2,
                                 const Vector& x0, double duration,
                                 double dt) {
  if (dt <= 0.0 || duration < dt) {
    throw std::invalid_argument(
        "integrate_closed_loop: require dt > 0 and duration >= dt");
  }
  std::vector<ScheduleSegment> single(1);
  single[0].duration = duration;
  single[0].target = Vector::Zero(game.state_dim);
  single[0].initial_state = x0;
  return run_target_schedule(game, policy1, policy2, x0, single, dt);
}

Trajectory run_target_schedule(const GameDefinition& game,
                               const Policy& policy1, const Policy& policy2,
                               const Vector& x0,
                               const std::vector<ScheduleSegment>& schedule,
                               double dt) {
  if (schedule.empty()) {
    throw std::invalid_argument("run_target_schedule: empty schedule");
  }
  Trajectory traj;
  traj.dt = dt;

  Vector physical = x0;
  std::vector<double> times;
  double t = 0.0;
  for (const auto& segment : schedule) {
    const int steps = static_cast<int>(std::llround(segment.duration / dt));
    if (steps < 1) {
      throw std::invalid_argument(
          "run_target_schedule: segment shorter than dt");
    }
    if (segment.initial_state) physical = *segment.initial_state;
    Vector error = physical - segment.target;

    traj.segment_starts.push_back(traj.samples());
    traj.segment_targets.push_back(segment.target);

    // The initial sample of a continuation segment coincides in time with the
    // previous terminal sample and is not duplicated.
    if (traj.states.empty()) {
      append_sample(&traj, policy1, policy2, error, segment.target);
      times.push_back(t);
    } else {
      // Recorded sample at the boundary instant belongs to the previous
      // segment; this segment's first recorded sample is one step later.
    }
    for (int k = 0; k < steps; ++k) {
      error = rk4_step(game, policy1, policy2, error, dt);
      if (!error.allFinite() || error.norm() > kDivergenceNorm) {
        throw NumericalError("run_target_schedule: trajectory diverged at t=" +
                             std::to_string(t + (k + 1) * dt));
      }
      append_sample(&traj, policy1, policy2, error, segment.target);
      times.push_back(t + (k + 1) * dt);
    }
    t += steps * dt;
    physical = traj.states.back();
  }

  traj.times = Eigen::Map<const Vector>(times.data(), times.size());
  return traj;
}

std::vector<Vector> finite_difference_derivatives(
    const std::vector<Vector>& states, double dt) {
  const int n = static_cast<int>(states.size());
  if (n < 3) {
    throw std::invalid_argument(
        "finite_difference_derivatives: need at least 3 samples");
  }
  std::vector<Vector> d(n);
  // Second-order one-sided stencils at the ends, central in the interior.
  d[0] = (-3.0 * states[0] + 4.0 * states[1] - states[2]) / (2.0 * dt);
  d[n - 1] = (3.0 * states[n - 1] - 4.0 * states[n - 2] + states[n - 3]) /
             (2.0 * dt);
  for (int k = 1; k < n - 1; ++k) {
    d[k] = (states[k + 1] - states[k - 1]) / (2.0 * dt);
  }
  return d;
}

std::vector<Vector> moving_average_filter(const std::vector<Vector>& values,
                                          int radius) {
  const int n = static_cast<int>(values.size());
  std::vector<Vector> out(n);
  for (int k = 0; k < n; ++k) {
    const int r = std::min({radius, k, n - 1 - k});
    Vector acc = Vector::Zero(values[k].size());
    for (int j = k - r; j <= k + r; ++j) acc += values[j];
    out[k] = acc / (2 * r + 1);
  }
  return out;
}

std::vector<MeasurementSample> sample_dataset(const Trajectory& traj,
                                              const GameDefinition& game,
                                              DerivativeMode mode) {
  const int n = traj.samples();
  std::vector<MeasurementSample> samples(n);

  // Error-coordinate states: the game dynamics and HJB relations hold there.
  std::vector<Vector> error_states(n);
  for (int k = 0; k < n; ++k) {
    const Vector& target = traj.segment_targets.empty()
                               ? Vector::Zero(traj.states[k].size()).eval()
                               : traj.segment_targets[traj.segment_of(k)];
    error_states[k] = traj.states[k] - target;
  }

  std::vector<Vector> xdot(n);
  if (mode == DerivativeMode::kExactDynamics) {
    for (int k = 0; k < n; ++k) {
      xdot[k] = eval_dynamics(game, error_states[k], traj.inputs[0][k],
                              traj.inputs[1][k]);
    }
  } else {
    // Differentiate and filter per segment; derivatives jump at boundaries.
    const int n_seg =
        traj.segment_starts.empty() ? 1 : static_cast<int>(traj.segment_starts.size());
    for (int s = 0; s < n_seg; ++s) {
      const int begin = traj.segment_starts.empty() ? 0 : traj.segment_starts[s];
      const int end =
          (s + 1 < n_seg) ? traj.segment_starts[s + 1] : n;
      std::vector<Vector> segment(error_states.begin() + begin,
                                  error_states.begin() + end);
      auto filtered =
          moving_average_filter(finite_difference_derivatives(segment, traj.dt));
      for (int k = begin; k < end; ++k) xdot[k] = filtered[k - begin];
    }
  }

  for (int k = 0; k < n; ++k) {
    samples[k] = {error_states[k], xdot[k], traj.inputs[0][k],
                  traj.inputs[1][k], traj.times[k]};
  }
  return samples;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& header_lines) {
  for (const auto& line : header_lines) os << "# " << line << "\n";
  const int n_x = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  os << "t";
  for (int i = 0; i < n_x; ++i) os << ",x" << (i + 1);
  for (int p = 0; p < 2; ++p) {
    const int m =
        traj.inputs[p].empty() ? 0 : static_cast<int>(traj.inputs[p][0].size());
    for (int i = 0; i < m; ++i) os << ",u" << (p + 1) << "_" << (i + 1);
  }
  os << "\n";
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf;
  };
  for (int k = 0; k < traj.samples(); ++k) {
    put(traj.times[k]);
    for (int i = 0; i < n_x; ++i) {
      os << ",";
      put(traj.states[k][i]);
    }
    for (int p = 0; p < 2; ++p) {
      for (int i = 0; i < traj.inputs[p][k].size(); ++i) {
        os << ",";
        put(traj.inputs[p][k][i]);
      }
    }
    os << "\n";
  }
}

}  // namespace invgame
