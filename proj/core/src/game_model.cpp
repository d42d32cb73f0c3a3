#include "invgame/game_model.hpp"

#include <cmath>
#include <sstream>

namespace invgame {

bool Box::contains(const Vector& x, double inflation) const {
  if (x.size() != lower.size()) return false;
  const Vector c = center();
  const Vector h = 0.5 * width();
  for (int i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - c[i]) > inflation * h[i] + 1e-12) return false;
  }
  return true;
}

Box Box::cube(int dim, double half_width) {
  Box b;
  b.lower = Vector::Constant(dim, -half_width);
  b.upper = Vector::Constant(dim, half_width);
  return b;
}

LqGame lq_benchmark_game() {
  LqGame g;
  g.A.resize(4, 4);
  g.A << 0, 1, -1, 0,  //
      1, 0, 2, 1,      //
      0, -2, 0, 1,     //
      0, 1, 0, -1;

  Matrix b1(4, 2), b2(4, 2);
  b1 << 0, 1, 0, 0, 0, 0, 1, 0;
  b2 << 0, 0, 0, 1, 1, 0, 0, 0;
  g.B[0] = 0.5 * b1;
  g.B[1] = 0.5 * b2;

  Vector q1(4), q2(4);
  q1 << 1.0, 2.0 / 5.0, 3.0, 1.0;
  q2 << 1.0, 2.0 / 3.0, 1.0, 2.0;
  g.Q[0] = q1.asDiagonal();
  g.Q[1] = q2.asDiagonal();

  g.R_diag[0] = Vector::Constant(2, 1.0);
  g.R_diag[1] = (Vector(2) << 1.0, 0.5).finished();

  Vector var_q1(4), var_q2(4);
  var_q1 << 1.0, 0.16, 9.0, 1.0;
  var_q2 << 1.0, 4.0 / 9.0, 1.0, 4.0;
  g.cost_prior[0] = {q1, var_q1, g.R_diag[0], (Vector(2) << 0.0, 1.0).finished()};
  g.cost_prior[1] = {q2, var_q2, g.R_diag[1], (Vector(2) << 0.0, 0.25).finished()};

  g.domain = Box::cube(4, 6.0);
  return g;
}

GameDefinition nonlinear_benchmark_game() {
  constexpr double kB0 = 2.0;
  constexpr double kBeta = 0.3;
  const auto inertia = [](double x) { return kB0 * (1.0 + kBeta * x * x); };

  GameDefinition g;
  g.state_dim = 1;
  g.input_dims = {1, 1};
  g.drift = [inertia](const Vector& x) -> Vector {
    const double v = x[0];
    return Vector::Constant(1, (-0.5 * v - 0.3 * v * v * v) / inertia(v));
  };
  g.input_channel[0] = [inertia](const Vector& x) -> Matrix {
    const double v = x[0];
    return Matrix::Constant(1, 1, (1.2 + 0.8 * std::sin(1.5 * v)) / inertia(v));
  };
  g.input_channel[1] = [inertia](const Vector& x) -> Matrix {
    const double v = x[0];
    return Matrix::Constant(
        1, 1, (1.0 - 0.7 * std::sin(1.5 * v + M_PI / 3.0)) / inertia(v));
  };

  const double q_mean[2] = {1.0, 0.3};
  const double q_var[2] = {0.5, 0.18};
  std::array<CostPriorSpec, 2> prior;
  for (int i = 0; i < 2; ++i) {
    const double q = q_mean[i];
    g.true_cost[i] = PlayerCost{
        [q](const Vector& x) { return q * x[0] * x[0]; },
        Vector::Constant(1, 1.0)};
    prior[i] = {Vector::Constant(1, q_mean[i]), Vector::Constant(1, q_var[i]),
                Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
  }
  g.cost_prior = prior;
  g.domain = Box::cube(1, 5.0);
  return g;
}

GameDefinition to_game_definition(const LqGame& lq) {
  GameDefinition g;
  g.state_dim = lq.state_dim();
  g.input_dims = {lq.input_dim(0), lq.input_dim(1)};
  const Matrix a = lq.A;
  g.drift = [a](const Vector& x) -> Vector { return a * x; };
  for (int i = 0; i < 2; ++i) {
    const Matrix b = lq.B[i];
    g.input_channel[i] = [b](const Vector&) -> Matrix { return b; };
    const Matrix q = lq.Q[i];
    g.true_cost[i] = PlayerCost{
        [q](const Vector& x) { return x.dot(q * x); }, lq.R_diag[i]};
  }
  g.cost_prior = lq.cost_prior;
  g.domain = lq.domain;
  return g;
}

Vector eval_dynamics(const GameDefinition& game, const Vector& x,
                     const Vector& u1, const Vector& u2) {
  if (x.size() != game.state_dim || u1.size() != game.input_dims[0] ||
      u2.size() != game.input_dims[1]) {
    std::ostringstream msg;
    msg << "eval_dynamics: dimension mismatch, got x=" << x.size()
        << " u1=" << u1.size() << " u2=" << u2.size() << ", expected x="
        << game.state_dim << " u1=" << game.input_dims[0]
        << " u2=" << game.input_dims[1];
    throw std::invalid_argument(msg.str());
  }
  return game.drift(x) + game.input_channel[0](x) * u1 +
         game.input_channel[1](x) * u2;
}

}  // namespace invgame
