#pragma once

#include <cstdint>
#include <vector>

#include "invgame/bayes_estimator.hpp"
#include "invgame/simulator.hpp"
#include "invgame/types.hpp"

namespace invgame {

// Monte Carlo rollouts of the stochastic policy model induced by a posterior:
// each trajectory propagates one parameter draw through the closed loop.
// Diverged rollouts are excluded and counted; the stored trajectories and
// draws stay aligned and share one time grid.
struct RolloutEnsemble {
  std::vector<Trajectory> trajectories;
  std::vector<Vector> parameter_draws;
  int player = 0;
  int requested = 0;
  int excluded = 0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(trajectories.size()); }
};

// Which coordinates of the rollouts a band or envelope summarizes.
enum class SignalKind { kStates, kInputs, kCombined };

struct QuantileBand {
  Vector times;
  Matrix mean;   // samples x coords
  Matrix lower;
  Matrix upper;
  double level = 0.0;
};

// Componentwise per-time bounds containing every included rollout, together
// with the scenario certificate for the bound parameters.
struct ForecastEnvelope {
  Vector times;
  Matrix lower;  // samples x coords
  Matrix upper;
  int d = 0;             // 2 * samples * coords
  double epsilon = 1.0;  // certified violation level (1.0 when vacuous)
  double beta = 0.0;
  int excluded = 0;
  bool certificate_valid = false;
};

// Draws n_mc parameter vectors from the posterior (Cholesky via eigenvalue
// factorization, negative eigenvalues floored at zero), forms player i's
// feedback from each draw's value weights and input-cost entries (first entry
// fixed by the layout), pairs it with the known policy of the other player,
// and integrates from x0. Parameter draws come sequentially from one seeded
// stream, so results are reproducible regardless of how rollouts are
// scheduled. Throws NumericalError if more than 10% of rollouts diverge.
RolloutEnsemble rollout_ensemble(const GaussianPosterior& post, int player,
                                 const Policy& other_policy,
                                 const GameDefinition& game,
                                 const FeatureMap& phi_v,
                                 const ParamLayout& layout, const Vector& x0,
                                 double horizon, double dt, int n_mc,
                                 std::uint64_t seed);

// Pointwise empirical quantiles at (1-level)/2 and 1-(1-level)/2 with
// linear interpolation between order statistics, plus the pointwise mean.
QuantileBand credible_band(const RolloutEnsemble& ens, double level,
                           SignalKind kind = SignalKind::kStates);

// Componentwise min/max over the ensemble: the optimizer of the minimal-width
// scenario program. epsilon comes from certified_epsilon when the ensemble is
// large enough (n > d) and is the vacuous level 1.0 otherwise. Exclusions
// void the certificate.
ForecastEnvelope forecast_envelope(const RolloutEnsemble& ens, double beta,
                                   SignalKind kind = SignalKind::kStates);

// P(X <= k) for X ~ Binomial(n, eps), evaluated in log space through the
// regularized incomplete beta identity.
double binomial_tail(int n, int k, double eps);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Smallest eps in (0,1) with binomial_tail(n, d-1, eps) <= beta, by bisection
// on the monotone tail. Requires n > d >= 1; throws NumericalError otherwise.
double certified_epsilon(int n, double beta, int d);

// Smallest sample count n whose certified level reaches eps at confidence
// 1 - beta, by exponential search then bisection.
long required_samples(double epsilon, double beta, int d);

}  // namespace invgame
