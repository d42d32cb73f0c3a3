#include "invgame/hjb_regression.hpp"

namespace invgame {

RegressionSample build_regression_sample(
    const MeasurementSample& sample, int player, const FeatureMap& phi_v,
    const FeatureMap& phi_q,
    const std::function<Matrix(const Vector&)>& input_channel,
    const ParamLayout& layout) {
  const Vector& u = (player == 0) ? sample.u1 : sample.u2;
  if (u.size() != layout.m) {
    throw std::invalid_argument(
        "build_regression_sample: layout.m does not match the player input");
  }
  const Matrix grad_v = phi_v.jacobian(sample.x);  // p x n
  const Vector q_feat = phi_q.eval(sample.x);      // s
  const Matrix g = input_channel(sample.x);        // n x m

  const int p = layout.p;
  const int s = layout.s;
  const int m = layout.m;

  RegressionSample out;
  out.t = sample.t;
  out.Phi = Matrix::Zero(1 + m, layout.dim());
  out.y = Vector::Zero(1 + m);

  // Hamiltonian stationarity: W_V'(grad_phi xdot) + W_Q'phi_Q +
  // sum_{j>=2} R_jj u_j^2 = -R_11 u_1^2.
  out.Phi.block(0, 0, 1, p) = (grad_v * sample.xdot).transpose();
  out.Phi.block(0, p, 1, s) = q_feat.transpose();
  for (int j = 1; j < m; ++j) out.Phi(0, p + s + j - 1) = u[j] * u[j];
  out.y[0] = -layout.fixed_r11 * u[0] * u[0];

  // Feedback optimality per channel, multiplied through by 2R:
  // (g' grad_phi' W_V)_j + 2 R_jj u_j = 0; channel 1 moves its fixed R term
  // to the target.
  out.Phi.block(1, 0, m, p) = g.transpose() * grad_v.transpose();
  for (int j = 1; j < m; ++j) out.Phi(1 + j, p + s + j - 1) = 2.0 * u[j];
  out.y[1] = -2.0 * layout.fixed_r11 * u[0];

  return out;
}

Vector monomial_value_weights(const Matrix& p) {
  const int n = static_cast<int>(p.rows());
  Vector w(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      w[k++] = (i == j) ? p(i, i) : p(i, j) + p(j, i);
    }
  }
  return w;
}

Vector lq_true_reduced_weights(const LqGame& game, const LqEquilibrium& eq,
                               int player) {
  const int n = game.state_dim();
  const int m = game.input_dim(player);
  Vector w(n * (n + 1) / 2 + n + m - 1);
  w.head(n * (n + 1) / 2) = monomial_value_weights(eq.P[player]);
  w.segment(n * (n + 1) / 2, n) = game.Q[player].diagonal();
  w.tail(m - 1) = game.R_diag[player].tail(m - 1);
  return w;
}

ParamLayout lq_param_layout(const LqGame& game, int player) {
  const int n = game.state_dim();
  ParamLayout layout;
  layout.p = n * (n + 1) / 2;
  layout.s = n;
  layout.m = game.input_dim(player);
  layout.fixed_r11 = game.R_diag[player][0];
  return layout;
}

}  // namespace invgame
