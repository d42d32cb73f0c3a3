#pragma once

#include <array>
#include <functional>
#include <optional>

#include "invgame/types.hpp"

namespace invgame {

// Running cost of one player: a state cost plus a quadratic input cost with
// diagonal weight matrix. Diagonal R is assumed throughout the library.
struct PlayerCost {
  std::function<double(const Vector&)> state_cost;
  Vector input_cost_diag;  // strictly positive entries
};

// Gaussian prior over one player's cost entries. The first input-cost entry
// is the fixed scale reference and carries zero variance.
struct CostPriorSpec {
  Vector q_mean;
  Vector q_variance;
  Vector r_mean;
  Vector r_variance;
};

// Two-player control-affine differential game
//
//   xdot = f(x) + g1(x) u1 + g2(x) u2.
//
// True costs are optional so the same type serves data generation (costs
// known) and identification (costs unknown). All members are immutable after
// construction and safe to share across threads.
struct GameDefinition {
  int state_dim = 0;
  std::array<int, 2> input_dims{};
  std::function<Vector(const Vector&)> drift;
  std::array<std::function<Matrix(const Vector&)>, 2> input_channel;
  std::array<std::optional<PlayerCost>, 2> true_cost;
  std::optional<std::array<CostPriorSpec, 2>> cost_prior;
  Box domain;
};

// Linear-quadratic specialization: xdot = A x + B1 u1 + B2 u2 with costs
// x'Q_i x + u_i' diag(R_i) u_i. Q_i symmetric PSD, R_i diagonal PD.
struct LqGame {
  Matrix A;
  std::array<Matrix, 2> B;
  std::array<Matrix, 2> Q;
  std::array<Vector, 2> R_diag;
  std::array<CostPriorSpec, 2> cost_prior;
  Box domain;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim(int player) const { return static_cast<int>(B[player].cols()); }
};

// Built-in two-player LQ benchmark: the 4-state regulation game with nominal
// cost matrices and their prior variances attached as metadata. Pure: repeated
// calls return identical values.
LqGame lq_benchmark_game();

// Built-in scalar game with state-dependent inertia b(x) = b0 (1 + beta x^2),
// oscillatory input channels, and quadratic running costs Q_i x^2 + u_i^2.
// Prior means (1.0, 0.3) and variances (0.5, 0.18) on Q_i attached.
GameDefinition nonlinear_benchmark_game();

// View an LQ game through the general interface: f(x) = A x, g_i(x) = B_i.
GameDefinition to_game_definition(const LqGame& lq);

// Right-hand side f(x) + g1(x) u1 + g2(x) u2. Throws std::invalid_argument on
// dimension mismatch.
Vector eval_dynamics(const GameDefinition& game, const Vector& x,
                     const Vector& u1, const Vector& u2);

}  // namespace invgame
