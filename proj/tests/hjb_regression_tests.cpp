#include <doctest.h>

#include <random>

#include "invgame/hjb_regression.hpp"
#include "test_helpers.hpp"

using namespace invgame;

namespace {

struct LqFixture {
  LqGame lq = lq_benchmark_game();
  GameDefinition game = to_game_definition(lq);
  LqEquilibrium eq = solve_lq_nash(lq);
  FeatureMap phi_v = FeatureMap::quadratic_monomial(4);
  FeatureMap phi_q = FeatureMap::quadratic_diagonal(4);

  std::vector<MeasurementSample> nash_samples(double duration,
                                              double dt = 0.01) const {
    const Matrix k1 = eq.K[0], k2 = eq.K[1];
    const Policy p1 = [k1](const Vector& x) -> Vector { return -k1 * x; };
    const Policy p2 = [k2](const Vector& x) -> Vector { return -k2 * x; };
    Vector x0(4);
    x0 << 3, -4, 2, 1.5;
    const Trajectory traj =
        integrate_closed_loop(game, p1, p2, x0, duration, dt);
    return sample_dataset(traj, game, DerivativeMode::kExactDynamics);
  }
};

}  // namespace

TEST_CASE("everything vanishes at the origin") {
  const LqFixture f;
  const ParamLayout layout = lq_param_layout(f.lq, 0);
  MeasurementSample s;
  s.x = Vector::Zero(4);
  s.xdot = Vector::Zero(4);
  s.u1 = Vector::Zero(2);
  s.u2 = Vector::Zero(2);
  const RegressionSample rs = build_regression_sample(
      s, 0, f.phi_v, f.phi_q, f.game.input_channel[0], layout);
  CHECK(rs.Phi.norm() == 0.0);
  CHECK(rs.y.norm() == 0.0);
}

TEST_CASE("block dimensions for the LQ benchmark") {
  const LqFixture f;
  const ParamLayout layout = lq_param_layout(f.lq, 0);
  CHECK(layout.p == 10);
  CHECK(layout.s == 4);
  CHECK(layout.m == 2);
  CHECK(layout.dim() == 15);

  const auto samples = f.nash_samples(0.05);
  const RegressionSample rs = build_regression_sample(
      samples[1], 0, f.phi_v, f.phi_q, f.game.input_channel[0], layout);
  CHECK(rs.Phi.rows() == 3);
  CHECK(rs.Phi.cols() == 15);
  CHECK(rs.y.size() == 3);

  // Target structure and the zero bottom-left block of the first feedback row.
  const double u11 = samples[1].u1[0];
  CHECK(rs.y[0] == -layout.fixed_r11 * u11 * u11);
  CHECK(rs.y[1] == -2.0 * layout.fixed_r11 * u11);
  CHECK(rs.y[2] == 0.0);
  CHECK(rs.Phi.block(1, 10, 1, 5).norm() == 0.0);
  CHECK(rs.Phi(2, 14) == 2.0 * samples[1].u1[1]);
}

TEST_CASE("exact nash data satisfies the regression identity") {
  const LqFixture f;
  const auto samples = f.nash_samples(2.0);
  for (int player = 0; player < 2; ++player) {
    const ParamLayout layout = lq_param_layout(f.lq, player);
    const Vector w_true = lq_true_reduced_weights(f.lq, f.eq, player);
    for (const auto& s : samples) {
      const RegressionSample rs = build_regression_sample(
          s, player, f.phi_v, f.phi_q, f.game.input_channel[player], layout);
      CHECK((rs.Phi * w_true - rs.y).norm() <= 1e-8);
    }
  }
}

TEST_CASE("scale equivariance of the residual identity") {
  for (double c : {0.5, 2.0}) {
    LqGame scaled = lq_benchmark_game();
    for (int i = 0; i < 2; ++i) {
      scaled.Q[i] *= c;
      scaled.R_diag[i] *= c;
    }
    const GameDefinition game = to_game_definition(scaled);
    const LqEquilibrium eq = solve_lq_nash(scaled);
    const Matrix k1 = eq.K[0], k2 = eq.K[1];
    const Policy p1 = [k1](const Vector& x) -> Vector { return -k1 * x; };
    const Policy p2 = [k2](const Vector& x) -> Vector { return -k2 * x; };
    Vector x0(4);
    x0 << 3, -4, 2, 1.5;
    const auto samples =
        sample_dataset(integrate_closed_loop(game, p1, p2, x0, 0.5, 0.01),
                       game, DerivativeMode::kExactDynamics);

    const FeatureMap phi_v = FeatureMap::quadratic_monomial(4);
    const FeatureMap phi_q = FeatureMap::quadratic_diagonal(4);
    const ParamLayout layout = lq_param_layout(scaled, 0);
    CHECK(layout.fixed_r11 == c);
    const Vector w_true = lq_true_reduced_weights(scaled, eq, 0);
    for (const auto& s : samples) {
      const RegressionSample rs = build_regression_sample(
          s, 0, phi_v, phi_q, game.input_channel[0], layout);
      CHECK((rs.Phi * w_true - rs.y).norm() <= 1e-8);
    }
  }
}

TEST_CASE("first row reproduces the hamiltonian") {
  const LqFixture f;
  const ParamLayout layout = lq_param_layout(f.lq, 0);
  const Vector w_true = lq_true_reduced_weights(f.lq, f.eq, 0);

  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    // Off-equilibrium measurements: random state, inputs, derivative.
    MeasurementSample s;
    s.x = testing::random_vector(rng, 4, 3.0);
    s.u1 = testing::random_vector(rng, 2, 2.0);
    s.u2 = testing::random_vector(rng, 2, 2.0);
    s.xdot = eval_dynamics(f.game, s.x, s.u1, s.u2);
    const RegressionSample rs = build_regression_sample(
        s, 0, f.phi_v, f.phi_q, f.game.input_channel[0], layout);

    // Direct Hamiltonian with the parametrized objectives.
    const double q_cost = s.x.dot(f.lq.Q[0] * s.x);
    const double u_cost = s.u1.dot(f.lq.R_diag[0].cwiseProduct(s.u1));
    const Vector grad_v = 2.0 * f.eq.P[0] * s.x;
    const double hamiltonian = q_cost + u_cost + grad_v.dot(s.xdot);

    const double row1_residual = rs.Phi.row(0).dot(w_true) - rs.y[0];
    CHECK(std::abs(row1_residual - hamiltonian) <= 1e-10);
  }
}

TEST_CASE("monomial weights encode symmetric quadratic forms") {
  std::mt19937_64 rng(41);
  const FeatureMap phi = FeatureMap::quadratic_monomial(3);
  Matrix p(3, 3);
  p << 2, 0.5, -1, 0.5, 3, 0.25, -1, 0.25, 1.5;
  const Vector w = monomial_value_weights(p);
  for (int k = 0; k < 20; ++k) {
    const Vector x = testing::random_vector(rng, 3, 2.0);
    CHECK(w.dot(phi.eval(x)) == doctest::Approx(x.dot(p * x)).epsilon(1e-12));
  }
}

TEST_CASE("scalar-input layout has an empty input-cost block") {
  const GameDefinition g = nonlinear_benchmark_game();
  const FeatureMap phi_v = FeatureMap::legendre(1, 10, g.domain, false);
  const FeatureMap phi_q = FeatureMap::quadratic_diagonal(1);
  ParamLayout layout{phi_v.output_dim(), 1, 1, 1.0};
  CHECK(layout.dim() == 11);

  MeasurementSample s;
  s.x = Vector::Constant(1, 0.5);
  s.u1 = Vector::Constant(1, -0.3);
  s.u2 = Vector::Constant(1, 0.1);
  s.xdot = eval_dynamics(g, s.x, s.u1, s.u2);
  const RegressionSample rs =
      build_regression_sample(s, 0, phi_v, phi_q, g.input_channel[0], layout);
  CHECK(rs.Phi.rows() == 2);
  CHECK(rs.Phi.cols() == 11);
  CHECK(rs.y[0] == -1.0 * s.u1[0] * s.u1[0]);
  CHECK(rs.y[1] == -2.0 * s.u1[0]);
}
