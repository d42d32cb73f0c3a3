#include "invgame/bayes_estimator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace invgame {

namespace {

constexpr double kCostClamp = 1e-3;

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Clip marginally negative eigenvalues so downstream Cholesky factorizations
// stay valid.
Matrix make_psd(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  if (eig.eigenvalues().minCoeff() >= 0.0) return symmetrize(m);
  const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * clipped.asDiagonal() *
                    eig.eigenvectors().transpose());
}

double condition_estimate(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Gaussian draw clamped away from zero for entries that carry prior variance.
double draw_cost_entry(double mean, double variance, std::mt19937_64& rng) {
  if (variance <= 0.0) return mean;
  std::normal_distribution<double> dist(mean, std::sqrt(variance));
  const double v = dist(rng);
  return v <= 0.0 ? kCostClamp : v;
}

struct EmpiricalMoments {
  Vector mean;
  Matrix covariance;
};

EmpiricalMoments empirical_moments(const std::vector<Vector>& draws) {
  const int n = static_cast<int>(draws.size());
  const int dim = static_cast<int>(draws[0].size());
  Vector mean = Vector::Zero(dim);
  for (const auto& d : draws) mean += d;
  mean /= n;
  Matrix cov = Matrix::Zero(dim, dim);
  for (const auto& d : draws) {
    const Vector c = d - mean;
    cov += c * c.transpose();
  }
  cov /= std::max(n - 1, 1);
  return {mean, cov};
}

}  // namespace

NoiseModel NoiseModel::isotropic(int rows, double stddev) {
  return {stddev * stddev * Matrix::Identity(rows, rows)};
}

GaussianPosterior recursive_update(const GaussianPosterior& post,
                                   const RegressionSample& sample,
                                   const NoiseModel& noise) {
  const Matrix& phi = sample.Phi;
  if (phi.cols() != post.mean.size() || noise.sigma.rows() != phi.rows()) {
    throw std::invalid_argument("recursive_update: dimension mismatch");
  }
  const Vector predicted = phi * post.mean;
  const Matrix s_y = symmetrize(phi * post.covariance * phi.transpose()) +
                     noise.sigma;
  const double cond = condition_estimate(s_y);
  if (cond > 1e14) {
    throw NumericalError(
        "recursive_update: predictive covariance near singular (condition "
        "estimate " +
        std::to_string(cond) + ")");
  }
  const Matrix gain =
      post.covariance * phi.transpose() * s_y.ldlt().solve(
          Matrix::Identity(s_y.rows(), s_y.cols()));

  GaussianPosterior out;
  out.mean = post.mean + gain * (sample.y - predicted);
  const Matrix closed = Matrix::Identity(phi.cols(), phi.cols()) - gain * phi;
  out.covariance = symmetrize(closed * post.covariance * closed.transpose() +
                              gain * noise.sigma * gain.transpose());
  out.sample_count = post.sample_count + 1;
  return out;
}

GaussianPosterior batch_posterior(const GaussianPosterior& prior,
                                  const std::vector<RegressionSample>& samples,
                                  const NoiseModel& noise) {
  if (samples.empty()) {
    throw std::invalid_argument("batch_posterior: need at least one sample");
  }
  const int dim = static_cast<int>(prior.mean.size());
  const Matrix identity = Matrix::Identity(dim, dim);

  const double prior_cond = condition_estimate(prior.covariance);
  if (!std::isfinite(prior_cond) || prior_cond > 1e14) {
    throw NumericalError("batch_posterior: prior covariance not invertible");
  }
  const Matrix sigma_inv = noise.sigma.ldlt().solve(
      Matrix::Identity(noise.sigma.rows(), noise.sigma.cols()));

  Matrix info = prior.covariance.ldlt().solve(identity);
  Vector info_mean = info * prior.mean;
  for (const auto& sample : samples) {
    info += sample.Phi.transpose() * sigma_inv * sample.Phi;
    info_mean += sample.Phi.transpose() * sigma_inv * sample.y;
  }
  info = symmetrize(info);
  const double cond = condition_estimate(info);
  if (!std::isfinite(cond) || cond > 1e14) {
    throw NumericalError("batch_posterior: singular information matrix");
  }

  GaussianPosterior out;
  out.covariance = symmetrize(info.ldlt().solve(identity));
  out.mean = out.covariance * info_mean;
  out.sample_count = prior.sample_count + static_cast<int>(samples.size());
  return out;
}

GaussianPosterior build_lq_prior(const LqGame& nominal, int player, int n_mc,
                                 std::uint64_t seed) {
  if (n_mc < 2) {
    throw std::invalid_argument("build_lq_prior: need n_mc >= 2");
  }
  std::mt19937_64 rng(seed);
  std::vector<Vector> draws;
  draws.reserve(n_mc);
  int failures = 0;
  for (int k = 0; k < n_mc; ++k) {
    LqGame draw = nominal;
    for (int i = 0; i < 2; ++i) {
      const auto& prior = nominal.cost_prior[i];
      Vector q(prior.q_mean.size());
      for (int j = 0; j < q.size(); ++j) {
        q[j] = draw_cost_entry(prior.q_mean[j], prior.q_variance[j], rng);
      }
      draw.Q[i] = q.asDiagonal();
      for (int j = 0; j < draw.R_diag[i].size(); ++j) {
        draw.R_diag[i][j] =
            draw_cost_entry(prior.r_mean[j], prior.r_variance[j], rng);
      }
    }
    try {
      const LqEquilibrium eq = solve_lq_nash(draw);
      draws.push_back(lq_true_reduced_weights(draw, eq, player));
    } catch (const NumericalError&) {
      ++failures;
    }
  }
  if (failures * 2 > n_mc) {
    throw NumericalError("build_lq_prior: more than half of the " +
                         std::to_string(n_mc) + " forward solves failed");
  }

  auto moments = empirical_moments(draws);

  // The cost blocks are exactly the declared Gaussians; pin them.
  const int p = nominal.state_dim() * (nominal.state_dim() + 1) / 2;
  const auto& prior = nominal.cost_prior[player];
  const int s = static_cast<int>(prior.q_mean.size());
  const int m = nominal.input_dim(player);
  for (int j = 0; j < s; ++j) {
    moments.mean[p + j] = prior.q_mean[j];
    moments.covariance(p + j, p + j) = prior.q_variance[j];
  }
  for (int j = 1; j < m; ++j) {
    moments.mean[p + s + j - 1] = prior.r_mean[j];
    moments.covariance(p + s + j - 1, p + s + j - 1) = prior.r_variance[j];
  }

  GaussianPosterior out;
  out.mean = moments.mean;
  out.covariance = make_psd(moments.covariance);
  out.sample_count = 0;
  return out;
}

GaussianPosterior build_nonlinear_prior(const GameDefinition& game,
                                        const FeatureMap& phi_v,
                                        const FeatureMap& phi_q,
                                        const std::vector<Vector>& grid,
                                        int player, int n_mc,
                                        std::uint64_t seed) {
  if (n_mc < 2) {
    throw std::invalid_argument("build_nonlinear_prior: need n_mc >= 2");
  }
  if (!game.cost_prior) {
    throw std::invalid_argument(
        "build_nonlinear_prior: game carries no cost prior");
  }
  const auto& priors = *game.cost_prior;
  const int s = static_cast<int>(priors[player].q_mean.size());
  const int m = game.input_dims[player];

  const auto game_with_costs = [&](const std::array<Vector, 2>& q_weights,
                                   const std::array<Vector, 2>& r_diags) {
    GameDefinition g = game;
    for (int i = 0; i < 2; ++i) {
      const Vector qw = q_weights[i];
      const FeatureMap qmap = phi_q;
      g.true_cost[i] = PlayerCost{
          [qw, qmap](const Vector& x) { return qw.dot(qmap.eval(x)); },
          r_diags[i]};
    }
    return g;
  };

  std::mt19937_64 rng(seed);
  std::vector<Vector> draws;
  draws.reserve(n_mc);
  int failures = 0;
  for (int k = 0; k < n_mc; ++k) {
    std::array<Vector, 2> q_draw, r_draw;
    for (int i = 0; i < 2; ++i) {
      q_draw[i].resize(priors[i].q_mean.size());
      for (int j = 0; j < q_draw[i].size(); ++j) {
        q_draw[i][j] =
            draw_cost_entry(priors[i].q_mean[j], priors[i].q_variance[j], rng);
      }
      r_draw[i].resize(priors[i].r_mean.size());
      for (int j = 0; j < r_draw[i].size(); ++j) {
        r_draw[i][j] =
            draw_cost_entry(priors[i].r_mean[j], priors[i].r_variance[j], rng);
      }
    }
    try {
      const NlEquilibrium eq =
          solve_nonlinear_hjb(game_with_costs(q_draw, r_draw), phi_v, grid);
      Vector w(phi_v.output_dim() + s + m - 1);
      w.head(phi_v.output_dim()) = eq.value_weights[player];
      w.segment(phi_v.output_dim(), s) = q_draw[player];
      w.tail(m - 1) = r_draw[player].tail(m - 1);
      draws.push_back(w);
    } catch (const NumericalError&) {
      ++failures;
    }
  }
  if (failures * 2 > n_mc) {
    throw NumericalError("build_nonlinear_prior: more than half of the " +
                         std::to_string(n_mc) + " forward solves failed");
  }

  auto moments = empirical_moments(draws);

  // Mean from the nominal-cost solve; cost blocks pinned to the declared
  // Gaussians.
  const NlEquilibrium nominal_eq = solve_nonlinear_hjb(
      game_with_costs({priors[0].q_mean, priors[1].q_mean},
                      {priors[0].r_mean, priors[1].r_mean}),
      phi_v, grid);
  const int p = phi_v.output_dim();
  moments.mean.head(p) = nominal_eq.value_weights[player];
  for (int j = 0; j < s; ++j) {
    moments.mean[p + j] = priors[player].q_mean[j];
    moments.covariance(p + j, p + j) = priors[player].q_variance[j];
  }
  for (int j = 1; j < m; ++j) {
    moments.mean[p + s + j - 1] = priors[player].r_mean[j];
    moments.covariance(p + s + j - 1, p + s + j - 1) =
        priors[player].r_variance[j];
  }

  GaussianPosterior out;
  out.mean = moments.mean;
  out.covariance = make_psd(moments.covariance);
  out.sample_count = 0;
  return out;
}

nlohmann::json posterior_to_json(const GaussianPosterior& post,
                                 const ParamLayout& layout) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(post.mean.data(),
                                  post.mean.data() + post.mean.size());
  std::vector<double> cov;
  cov.reserve(post.covariance.size());
  for (int r = 0; r < post.covariance.rows(); ++r) {
    for (int c = 0; c < post.covariance.cols(); ++c) {
      cov.push_back(post.covariance(r, c));
    }
  }
  j["covariance"] = cov;
  j["sample_count"] = post.sample_count;
  j["layout"] = {{"p", layout.p},
                 {"s", layout.s},
                 {"m", layout.m},
                 {"fixed_r11", layout.fixed_r11}};
  return j;
}

std::pair<GaussianPosterior, ParamLayout> posterior_from_json(
    const nlohmann::json& j) {
  GaussianPosterior post;
  ParamLayout layout;
  layout.p = j.at("layout").at("p").get<int>();
  layout.s = j.at("layout").at("s").get<int>();
  layout.m = j.at("layout").at("m").get<int>();
  layout.fixed_r11 = j.at("layout").at("fixed_r11").get<double>();

  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto cov = j.at("covariance").get<std::vector<double>>();
  const int dim = static_cast<int>(mean.size());
  if (static_cast<int>(cov.size()) != dim * dim || dim != layout.dim()) {
    throw ConfigError("posterior JSON: mean/covariance/layout sizes disagree");
  }
  post.mean = Eigen::Map<const Vector>(mean.data(), dim);
  post.covariance.resize(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) post.covariance(r, c) = cov[r * dim + c];
  }
  post.sample_count = j.at("sample_count").get<int>();
  return {post, layout};
}

}  // namespace invgame
