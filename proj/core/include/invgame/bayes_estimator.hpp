#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "invgame/equilibrium.hpp"
#include "invgame/game_model.hpp"
#include "invgame/hjb_regression.hpp"
#include "invgame/types.hpp"

namespace invgame {

// Gaussian belief over the reduced parameter vector of one player.
struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
  int sample_count = 0;
};

// Residual noise on one regression pair. Isotropic by default; the relative
// weighting of the Hamiltonian row against the feedback rows is delegated
// entirely to this covariance.
struct NoiseModel {
  Matrix sigma;

  static NoiseModel isotropic(int rows, double stddev);
};

// Exact conjugate measurement update (Joseph-form covariance), consuming only
// the latest sample. The returned covariance is re-symmetrized. Throws
// NumericalError if the predictive covariance is near singular (condition
// estimate > 1e14). Strictly sequential per posterior; distinct players'
// posteriors may update concurrently.
GaussianPosterior recursive_update(const GaussianPosterior& post,
                                   const RegressionSample& sample,
                                   const NoiseModel& noise);

// One-shot information-form solution of the stacked Gaussian linear model;
// verification oracle for chains of recursive updates.
GaussianPosterior batch_posterior(const GaussianPosterior& prior,
                                  const std::vector<RegressionSample>& samples,
                                  const NoiseModel& noise);

// Monte Carlo prior over [vec P_i; diag Q_i; R_{i,2:m}]: draws cost
// realizations from the per-entry Gaussians attached to the game (nonpositive
// draws of variance-bearing entries clamped to 1e-3), solves each forward
// game, and takes the empirical mean and covariance of the resulting weight
// vectors. The cost-entry blocks of the mean are overwritten with the nominal
// values and their variances with the declared priors. Draws whose forward
// solve fails are discarded; more than 50% failures is an error.
GaussianPosterior build_lq_prior(const LqGame& nominal, int player, int n_mc,
                                 std::uint64_t seed);

// Same construction for a general game: the mean comes from the nominal-cost
// HJB solve and the covariance from n_mc Galerkin solves under sampled costs.
GaussianPosterior build_nonlinear_prior(const GameDefinition& game,
                                        const FeatureMap& phi_v,
                                        const FeatureMap& phi_q,
                                        const std::vector<Vector>& grid,
                                        int player, int n_mc,
                                        std::uint64_t seed);

// Posterior snapshot as JSON: mean array, row-major covariance, sample count,
// layout descriptor.
nlohmann::json posterior_to_json(const GaussianPosterior& post,
                                 const ParamLayout& layout);
std::pair<GaussianPosterior, ParamLayout> posterior_from_json(
    const nlohmann::json& j);

}  // namespace invgame
