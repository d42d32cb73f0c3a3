#pragma once

#include <random>

#include "invgame/equilibrium.hpp"
#include "invgame/features.hpp"
#include "invgame/game_model.hpp"
#include "invgame/types.hpp"

namespace invgame::testing {

inline Vector random_vector(std::mt19937_64& rng, int dim, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

// Central finite differences of a feature map; oracle for analytic Jacobians.
inline Matrix fd_jacobian(const FeatureMap& map, const Vector& x,
                          double step = 1e-5) {
  Matrix jac(map.output_dim(), map.input_dim());
  for (int c = 0; c < map.input_dim(); ++c) {
    Vector hi = x, lo = x;
    hi[c] += step;
    lo[c] -= step;
    jac.col(c) = (map.eval(hi) - map.eval(lo)) / (2.0 * step);
  }
  return jac;
}

// Positive root of the scalar single-player Riccati equation
// 2 a p + q - p^2 b^2 / r = 0.
inline double scalar_riccati(double a, double b, double q, double r) {
  return r * (a + std::sqrt(a * a + q * b * b / r)) / (b * b);
}

// Scalar two-player LQ game (1-d matrices) for embedding tests.
inline LqGame scalar_lq_game(double a, double b1, double b2, double q1,
                             double q2, double r1, double r2) {
  LqGame g;
  g.A = Matrix::Constant(1, 1, a);
  g.B[0] = Matrix::Constant(1, 1, b1);
  g.B[1] = Matrix::Constant(1, 1, b2);
  g.Q[0] = Matrix::Constant(1, 1, q1);
  g.Q[1] = Matrix::Constant(1, 1, q2);
  g.R_diag[0] = Vector::Constant(1, r1);
  g.R_diag[1] = Vector::Constant(1, r2);
  for (int i = 0; i < 2; ++i) {
    g.cost_prior[i] = {g.Q[i].diagonal(), Vector::Zero(1), g.R_diag[i],
                       Vector::Zero(1)};
  }
  g.domain = Box::cube(1, 6.0);
  return g;
}

}  // namespace invgame::testing
