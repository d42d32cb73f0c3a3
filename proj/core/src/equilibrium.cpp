#include "invgame/equilibrium.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace invgame {

namespace {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

std::array<Matrix, 2> gains_from(const LqGame& game,
                                 const std::array<Matrix, 2>& p) {
  std::array<Matrix, 2> k;
  for (int i = 0; i < 2; ++i) {
    k[i] = game.R_diag[i].cwiseInverse().asDiagonal() *
           (game.B[i].transpose() * p[i]);
  }
  return k;
}

}  // namespace

bool is_hurwitz(const Matrix& a, double margin) {
  const Eigen::EigenSolver<Matrix> eig(a, /*computeEigenvectors=*/false);
  return (eig.eigenvalues().real().array() < -margin).all();
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r) {
  const int n = static_cast<int>(a.rows());
  const Matrix g = b * r.ldlt().solve(b.transpose());

  Matrix ham(2 * n, 2 * n);
  ham << a, -g, -q, -a.transpose();

  const Eigen::EigenSolver<Matrix> eig(ham);
  Eigen::MatrixXcd basis(2 * n, n);
  int found = 0;
  for (int i = 0; i < 2 * n && found < n; ++i) {
    if (eig.eigenvalues()[i].real() < 0.0) {
      basis.col(found++) = eig.eigenvectors().col(i);
    }
  }
  if (found != n) {
    throw NumericalError(
        "solve_care: Hamiltonian has no n-dimensional stable subspace");
  }
  const Eigen::MatrixXcd x1 = basis.topRows(n);
  const Eigen::MatrixXcd x2 = basis.bottomRows(n);
  const Eigen::MatrixXcd p = x2 * x1.fullPivLu().solve(
                                      Eigen::MatrixXcd::Identity(n, n));
  return symmetrize(p.real());
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
  const int n = static_cast<int>(a.rows());
  // vec(A'P + PA) = (I kron A' + A' kron I) vec(P), column-major vec.
  Matrix lhs = Matrix::Zero(n * n, n * n);
  const Matrix at = a.transpose();
  for (int col = 0; col < n; ++col) {
    lhs.block(col * n, col * n, n, n) += at;
    for (int row = 0; row < n; ++row) {
      for (int k = 0; k < n; ++k) {
        lhs(col * n + row, k * n + row) += at(col, k);
      }
    }
  }
  const Eigen::Map<const Vector> c_vec(c.data(), n * n);
  const Vector p_vec = lhs.fullPivLu().solve(-c_vec);
  return symmetrize(Eigen::Map<const Matrix>(p_vec.data(), n, n));
}

std::array<double, 2> coupled_riccati_residual(const LqGame& game,
                                               const Matrix& p1,
                                               const Matrix& p2) {
  const std::array<Matrix, 2> p{p1, p2};
  const auto k = gains_from(game, p);
  const Matrix a_cl = game.A - game.B[0] * k[0] - game.B[1] * k[1];
  std::array<double, 2> res;
  for (int i = 0; i < 2; ++i) {
    const Matrix eq = a_cl.transpose() * p[i] + p[i] * a_cl + game.Q[i] +
                      k[i].transpose() * game.R_diag[i].asDiagonal() * k[i];
    res[i] = eq.norm();
  }
  return res;
}

LqEquilibrium solve_lq_nash(const LqGame& game, double tol, int max_iter) {
  std::array<Matrix, 2> p;
  for (int i = 0; i < 2; ++i) {
    p[i] = solve_care(game.A, game.B[i], game.Q[i],
                      Matrix(game.R_diag[i].asDiagonal()));
  }
  auto k = gains_from(game, p);

  LqEquilibrium out;
  std::array<double, 2> res{};
  for (int iter = 1; iter <= max_iter; ++iter) {
    // Alternate per-player policy evaluations: each player takes one
    // Lyapunov solve and gain refresh against the other's latest gain.
    for (int i = 0; i < 2; ++i) {
      const Matrix a_cl = game.A - game.B[0] * k[0] - game.B[1] * k[1];
      if (!is_hurwitz(a_cl)) {
        throw NumericalError(
            "solve_lq_nash: closed loop lost stability at iteration " +
            std::to_string(iter));
      }
      const Matrix cost =
          game.Q[i] + k[i].transpose() * game.R_diag[i].asDiagonal() * k[i];
      p[i] = solve_lyapunov(a_cl, cost);
      k[i] = game.R_diag[i].cwiseInverse().asDiagonal() *
             (game.B[i].transpose() * p[i]);
    }
    res = coupled_riccati_residual(game, p[0], p[1]);
    out.residual_history.push_back(res);
    if (res[0] <= tol && res[1] <= tol) {
      out.P = p;
      out.K = k;
      out.residual = res;
      out.iterations = iter;
      if (!is_hurwitz(out.closed_loop(game))) {
        throw NumericalError("solve_lq_nash: converged to an unstable loop");
      }
      return out;
    }
  }
  std::ostringstream msg;
  msg << "solve_lq_nash: no convergence within " << max_iter
      << " iterations, last residuals (" << res[0] << ", " << res[1] << ")";
  throw NumericalError(msg.str());
}

double NlEquilibrium::value(int player, const Vector& x) const {
  // The basis has no constant element; anchor V(0) = 0 explicitly since
  // even-degree Legendre polynomials are nonzero at the origin.
  const Vector origin = Vector::Zero(basis.input_dim());
  return value_weights[player].dot(basis.eval(x) - basis.eval(origin));
}

Vector equilibrium_policy(const Vector& x, const Vector& value_weights,
                          const FeatureMap& basis,
                          const std::function<Matrix(const Vector&)>& channel,
                          const Vector& r_diag) {
  const Vector grad_v = basis.jacobian(x).transpose() * value_weights;
  return -0.5 * (r_diag.cwiseInverse().asDiagonal() *
                 (channel(x).transpose() * grad_v));
}

std::vector<Vector> uniform_grid(const Box& domain, int points_per_dim) {
  if (points_per_dim < 2) {
    throw std::invalid_argument("uniform_grid: need at least 2 points per dim");
  }
  const int dim = domain.dim();
  std::vector<Vector> pts;
  std::vector<int> idx(dim, 0);
  const Vector lo = domain.lower;
  const Vector w = domain.width();
  while (true) {
    Vector x(dim);
    for (int c = 0; c < dim; ++c) {
      x[c] = lo[c] + w[c] * idx[c] / (points_per_dim - 1);
    }
    pts.push_back(x);
    int c = 0;
    while (c < dim && ++idx[c] == points_per_dim) idx[c++] = 0;
    if (c == dim) break;
  }
  return pts;
}

NlEquilibrium solve_nonlinear_hjb(
    const GameDefinition& game, const FeatureMap& basis,
    const std::vector<Vector>& grid, double tol, int max_iter,
    std::optional<std::array<Vector, 2>> initial_weights) {
  if (!game.true_cost[0] || !game.true_cost[1]) {
    throw std::invalid_argument(
        "solve_nonlinear_hjb: both players' true costs are required");
  }
  const int n_grid = static_cast<int>(grid.size());
  const int p = basis.output_dim();
  if (n_grid < p) {
    throw std::invalid_argument(
        "solve_nonlinear_hjb: fewer collocation points than basis functions");
  }

  // Grid-constant data.
  std::vector<Matrix> grad(n_grid);         // p x n
  std::vector<Vector> drift(n_grid);        // n
  std::vector<std::array<Matrix, 2>> chan(n_grid);
  for (int k = 0; k < n_grid; ++k) {
    grad[k] = basis.jacobian(grid[k]);
    drift[k] = game.drift(grid[k]);
    chan[k] = {game.input_channel[0](grid[k]), game.input_channel[1](grid[k])};
  }

  std::array<Vector, 2> w;
  if (initial_weights) {
    w = *initial_weights;
  } else {
    w = {Vector::Zero(p), Vector::Zero(p)};
  }

  const std::array<Vector, 2> r_inv{
      game.true_cost[0]->input_cost_diag.cwiseInverse(),
      game.true_cost[1]->input_cost_diag.cwiseInverse()};

  std::array<Matrix, 2> lhs{Matrix(n_grid, p), Matrix(n_grid, p)};
  std::array<Vector, 2> rhs{Vector(n_grid), Vector(n_grid)};

  for (int iter = 1; iter <= max_iter; ++iter) {
    // Policies under the current weights, then one Galerkin solve per player.
    for (int k = 0; k < n_grid; ++k) {
      std::array<Vector, 2> u;
      for (int i = 0; i < 2; ++i) {
        u[i] = -0.5 * (r_inv[i].asDiagonal() *
                       (chan[k][i].transpose() * (grad[k].transpose() * w[i])));
      }
      const Vector xdot = drift[k] + chan[k][0] * u[0] + chan[k][1] * u[1];
      for (int i = 0; i < 2; ++i) {
        lhs[i].row(k) = (grad[k] * xdot).transpose();
        const double input_cost =
            u[i].dot(game.true_cost[i]->input_cost_diag.cwiseProduct(u[i]));
        rhs[i][k] = -(game.true_cost[i]->state_cost(grid[k]) + input_cost);
      }
    }

    double change = 0.0;
    for (int i = 0; i < 2; ++i) {
      const Eigen::JacobiSVD<Matrix> svd(
          lhs[i], Eigen::ComputeThinU | Eigen::ComputeThinV);
      const double cond = svd.singularValues()(0) /
                          svd.singularValues()(svd.singularValues().size() - 1);
      if (!std::isfinite(cond) || cond > 1e12) {
        throw NumericalError(
            "solve_nonlinear_hjb: Galerkin system ill-conditioned (estimate " +
            std::to_string(cond) + ")");
      }
      const Vector w_new = svd.solve(rhs[i]);
      change = std::max(change, (w_new - w[i]).lpNorm<Eigen::Infinity>());
      w[i] = w_new;
    }

    if (change <= tol) {
      // Sup HJB residual over the grid, relative to the running-cost scale.
      std::array<double, 2> rel_residual{};
      for (int i = 0; i < 2; ++i) {
        double sup_residual = 0.0;
        double cost_scale = 0.0;
        for (int k = 0; k < n_grid; ++k) {
          std::array<Vector, 2> u;
          for (int j = 0; j < 2; ++j) {
            u[j] = -0.5 * (r_inv[j].asDiagonal() *
                           (chan[k][j].transpose() *
                            (grad[k].transpose() * w[j])));
          }
          const Vector xdot = drift[k] + chan[k][0] * u[0] + chan[k][1] * u[1];
          const double running =
              game.true_cost[i]->state_cost(grid[k]) +
              u[i].dot(game.true_cost[i]->input_cost_diag.cwiseProduct(u[i]));
          const double h = running + w[i].dot(grad[k] * xdot);
          sup_residual = std::max(sup_residual, std::abs(h));
          cost_scale = std::max(cost_scale, std::abs(running));
        }
        rel_residual[i] = sup_residual / std::max(cost_scale, 1e-300);
      }
      return NlEquilibrium{{w[0], w[1]}, basis, rel_residual, iter};
    }
  }
  throw NumericalError("solve_nonlinear_hjb: no convergence within " +
                       std::to_string(max_iter) + " iterations");
}

}  // namespace invgame
