#pragma once

#include <functional>

#include "invgame/equilibrium.hpp"
#include "invgame/features.hpp"
#include "invgame/simulator.hpp"
#include "invgame/types.hpp"

namespace invgame {

// Shape of the reduced parameter vector W^- = [W_V; W_Q; W_R^-] for one
// player. The input cost is parametrized per channel (diagonal R); the first
// diagonal entry is fixed to a known value to resolve the scale ambiguity and
// removed from the unknowns, leaving m - 1 input-cost weights.
struct ParamLayout {
  int p = 0;            // value-feature count
  int s = 0;            // state-cost-feature count
  int m = 0;            // input dimension of the player
  double fixed_r11 = 1.0;

  int dim() const { return p + s + m - 1; }
};

// One regression pair (Phi, y). Row 1 encodes Hamiltonian stationarity along
// the measurement; rows 2..1+m encode feedback optimality per input channel,
// scaled by 2R so every row is linear in the unknowns.
struct RegressionSample {
  Matrix Phi;  // (1 + m) x (p + s + m - 1)
  Vector y;    // 1 + m
  double t = 0.0;
};

// Builds the regression pair for one player from a single measurement.
// Feature-domain violations propagate from the feature maps.
RegressionSample build_regression_sample(
    const MeasurementSample& sample, int player, const FeatureMap& phi_v,
    const FeatureMap& phi_q,
    const std::function<Matrix(const Vector&)>& input_channel,
    const ParamLayout& layout);

// Quadratic-form weights of x'Px in the monomial ordering: P_ii for squares,
// 2 P_ij for cross terms (i < j).
Vector monomial_value_weights(const Matrix& p);

// Ground-truth reduced vector [vec P_i; diag Q_i; R_{i,2:m}] for an LQ game
// and its solved equilibrium.
Vector lq_true_reduced_weights(const LqGame& game, const LqEquilibrium& eq,
                               int player);

// Layout for an LQ game with monomial value features and diagonal state-cost
// features.
ParamLayout lq_param_layout(const LqGame& game, int player);

}  // namespace invgame
