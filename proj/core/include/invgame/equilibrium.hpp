#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "invgame/features.hpp"
#include "invgame/game_model.hpp"
#include "invgame/types.hpp"

namespace invgame {

// Feedback Nash equilibrium of an LQ game: V_i(x) = x'P_i x, u_i = -K_i x.
struct LqEquilibrium {
  std::array<Matrix, 2> P;
  std::array<Matrix, 2> K;
  std::array<double, 2> residual;  // Frobenius norms of the coupled equations
  std::vector<std::array<double, 2>> residual_history;  // one entry per sweep
  int iterations = 0;

  Matrix closed_loop(const LqGame& game) const {
    return game.A - game.B[0] * K[0] - game.B[1] * K[1];
  }
};

// Equilibrium of a general game over a value-function basis. The basis
// excludes the constant element; value() subtracts the offset at the origin
// so that V_i(0) = 0.
struct NlEquilibrium {
  std::array<Vector, 2> value_weights;
  FeatureMap basis;
  // Sup over the collocation grid of |H_i|, relative to the running-cost
  // scale on the same grid.
  std::array<double, 2> hjb_residual_sup{};
  int iterations = 0;

  double value(int player, const Vector& x) const;
};

// All eigenvalues of A strictly in the open left half plane.
bool is_hurwitz(const Matrix& a, double margin = 0.0);

// Continuous-time algebraic Riccati equation A'P + PA - P B R^{-1} B' P + Q = 0
// via the stable invariant subspace of the Hamiltonian matrix.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r);

// A'P + P A + C = 0 for Hurwitz A and symmetric C, by Kronecker vectorization.
Matrix solve_lyapunov(const Matrix& a, const Matrix& c);

// Coupled-Riccati solution by alternating per-player Lyapunov solves with the
// other player's gain held fixed, initialized from the two single-player
// Riccati solutions. Throws NumericalError on non-convergence (message carries
// the last residual) or if any iterate loses closed-loop stability.
LqEquilibrium solve_lq_nash(const LqGame& game, double tol = 1e-9,
                            int max_iter = 500);

// Frobenius norms of A_cl'P_i + P_i A_cl + Q_i + K_i'R_i K_i for both players,
// with K_i = R_i^{-1} B_i' P_i and A_cl the induced closed loop.
std::array<double, 2> coupled_riccati_residual(const LqGame& game,
                                               const Matrix& p1,
                                               const Matrix& p2);

// Galerkin policy iteration for the coupled HJB system: alternately fit both
// value-weight vectors by least squares over the collocation grid under the
// current policies, then refresh the policies, until the sup-norm weight
// change drops below tol. Both players' true costs must be set on the game.
// Initial value weights default to zero, requiring the drift alone to be
// stabilizing on the grid.
NlEquilibrium solve_nonlinear_hjb(
    const GameDefinition& game, const FeatureMap& basis,
    const std::vector<Vector>& grid, double tol = 1e-6, int max_iter = 200,
    std::optional<std::array<Vector, 2>> initial_weights = std::nullopt);

// Optimal feedback induced by a value-weight vector:
//   u = -1/2 diag(r)^{-1} g(x)' grad_phi(x)' w.
Vector equilibrium_policy(const Vector& x, const Vector& value_weights,
                          const FeatureMap& basis,
                          const std::function<Matrix(const Vector&)>& channel,
                          const Vector& r_diag);

// Uniformly spaced collocation points over a box (tensor grid; scalar boxes
// give points_per_dim samples).
std::vector<Vector> uniform_grid(const Box& domain, int points_per_dim);

}  // namespace invgame
