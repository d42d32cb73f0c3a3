#include "invgame/forecaster.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "invgame/equilibrium.hpp"

namespace invgame {

namespace {

// Continued-fraction kernel for the regularized incomplete beta function
// (modified Lentz iteration).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError(
      "regularized_incomplete_beta: continued fraction did not converge");
}

int coord_count(const RolloutEnsemble& ens, SignalKind kind) {
  const Trajectory& t = ens.trajectories.at(0);
  const int n_x = static_cast<int>(t.states[0].size());
  const int m = static_cast<int>(t.inputs[ens.player][0].size());
  switch (kind) {
    case SignalKind::kStates:
      return n_x;
    case SignalKind::kInputs:
      return m;
    case SignalKind::kCombined:
      return n_x + m;
  }
  return 0;
}

// Coordinate `c` of rollout `r` at time index `k`: states first, then the
// estimated player's inputs.
double coord_value(const RolloutEnsemble& ens, SignalKind kind, int r, int k,
                   int c) {
  const Trajectory& t = ens.trajectories[r];
  const int n_x = static_cast<int>(t.states[0].size());
  if (kind == SignalKind::kStates || (kind == SignalKind::kCombined && c < n_x)) {
    return t.states[k][c];
  }
  const int offset = (kind == SignalKind::kCombined) ? n_x : 0;
  return t.inputs[ens.player][k][c - offset];
}

// Linear interpolation between order statistics of sorted values.
double interpolated_quantile(const std::vector<double>& sorted, double q) {
  const int n = static_cast<int>(sorted.size());
  if (n == 1) return sorted[0];
  const double h = q * (n - 1);
  const int lo = static_cast<int>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Log-space prefactor keeps x^a (1-x)^b finite for large a, b.
  const double log_prefactor = std::lgamma(a + b) - std::lgamma(a) -
                               std::lgamma(b) + a * std::log(x) +
                               b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_prefactor) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 -
         std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                  b * std::log1p(-x) + a * std::log(x)) *
             beta_continued_fraction(b, a, 1.0 - x) / b;
}

double binomial_tail(int n, int k, double eps) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  // P(X <= k) = I_{1-eps}(n-k, k+1).
  return regularized_incomplete_beta(n - k, k + 1, 1.0 - eps);
}

double certified_epsilon(int n, double beta, int d) {
  if (d < 1 || beta <= 0.0 || beta >= 1.0) {
    throw std::invalid_argument("certified_epsilon: need d >= 1, beta in (0,1)");
  }
  if (n <= d) {
    throw NumericalError(
        "certified_epsilon: infeasible, need more samples than bound "
        "parameters (n > d)");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (binomial_tail(n, d - 1, mid) <= beta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

long required_samples(double epsilon, double beta, int d) {
  if (d < 1 || beta <= 0.0 || beta >= 1.0 || epsilon <= 0.0 || epsilon >= 1.0) {
    throw std::invalid_argument(
        "required_samples: need d >= 1, epsilon and beta in (0,1)");
  }
  long hi = d;
  while (binomial_tail(static_cast<int>(hi), d - 1, epsilon) > beta) {
    hi *= 2;
    if (hi > (1L << 40)) {
      throw NumericalError("required_samples: bound not reached");
    }
  }
  long lo = hi / 2;
  while (lo + 1 < hi) {
    const long mid = lo + (hi - lo) / 2;
    if (binomial_tail(static_cast<int>(mid), d - 1, epsilon) <= beta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

RolloutEnsemble rollout_ensemble(const GaussianPosterior& post, int player,
                                 const Policy& other_policy,
                                 const GameDefinition& game,
                                 const FeatureMap& phi_v,
                                 const ParamLayout& layout, const Vector& x0,
                                 double horizon, double dt, int n_mc,
                                 std::uint64_t seed) {
  if (n_mc < 1) {
    throw std::invalid_argument("rollout_ensemble: need n_mc >= 1");
  }
  if (post.mean.size() != layout.dim()) {
    throw std::invalid_argument(
        "rollout_ensemble: posterior dimension does not match layout");
  }

  // Factor the covariance; floor marginally negative eigenvalues at zero.
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(post.covariance);
  const Matrix chol_like =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  // All draws come from one sequential stream before any rollout runs.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const int dim = layout.dim();
  std::vector<Vector> draws(n_mc);
  for (int s = 0; s < n_mc; ++s) {
    Vector z(dim);
    for (int j = 0; j < dim; ++j) z[j] = unit(rng);
    draws[s] = post.mean + chol_like * z;
  }

  RolloutEnsemble out;
  out.player = player;
  out.requested = n_mc;
  out.seed = seed;
  for (int s = 0; s < n_mc; ++s) {
    const Vector value_weights = draws[s].head(layout.p);
    Vector r_diag(layout.m);
    r_diag[0] = layout.fixed_r11;
    r_diag.tail(layout.m - 1) = draws[s].tail(layout.m - 1);

    const auto& channel = game.input_channel[player];
    const Policy drawn_policy = [&, value_weights, r_diag](const Vector& x) {
      return equilibrium_policy(x, value_weights, phi_v, channel, r_diag);
    };
    const Policy& p1 = (player == 0) ? drawn_policy : other_policy;
    const Policy& p2 = (player == 0) ? other_policy : drawn_policy;
    try {
      out.trajectories.push_back(
          integrate_closed_loop(game, p1, p2, x0, horizon, dt));
      out.parameter_draws.push_back(draws[s]);
    } catch (const NumericalError&) {
      ++out.excluded;
    } catch (const std::domain_error&) {
      // Feature map left its inflated domain: treat as divergence.
      ++out.excluded;
    }
  }
  if (out.excluded * 10 > n_mc) {
    throw NumericalError("rollout_ensemble: " + std::to_string(out.excluded) +
                         " of " + std::to_string(n_mc) +
                         " rollouts diverged (over 10%)");
  }
  return out;
}

QuantileBand credible_band(const RolloutEnsemble& ens, double level,
                           SignalKind kind) {
  if (ens.size() == 0) {
    throw std::invalid_argument("credible_band: empty ensemble");
  }
  if (level <= 0.0 || level >= 1.0) {
    throw std::invalid_argument("credible_band: level must be in (0,1)");
  }
  const int n = ens.size();
  const int samples = ens.trajectories[0].samples();
  const int coords = coord_count(ens, kind);
  const double q_lo = 0.5 * (1.0 - level);
  const double q_hi = 1.0 - q_lo;

  QuantileBand band;
  band.times = ens.trajectories[0].times;
  band.level = level;
  band.mean.resize(samples, coords);
  band.lower.resize(samples, coords);
  band.upper.resize(samples, coords);

  std::vector<double> column(n);
  for (int k = 0; k < samples; ++k) {
    for (int c = 0; c < coords; ++c) {
      double acc = 0.0;
      for (int r = 0; r < n; ++r) {
        column[r] = coord_value(ens, kind, r, k, c);
        acc += column[r];
      }
      std::sort(column.begin(), column.end());
      band.mean(k, c) = acc / n;
      band.lower(k, c) = interpolated_quantile(column, q_lo);
      band.upper(k, c) = interpolated_quantile(column, q_hi);
    }
  }
  return band;
}

ForecastEnvelope forecast_envelope(const RolloutEnsemble& ens, double beta,
                                   SignalKind kind) {
  if (ens.size() == 0) {
    throw std::invalid_argument("forecast_envelope: empty ensemble");
  }
  if (beta <= 0.0 || beta >= 1.0) {
    throw std::invalid_argument("forecast_envelope: beta must be in (0,1)");
  }
  const int n = ens.size();
  const int samples = ens.trajectories[0].samples();
  const int coords = coord_count(ens, kind);

  ForecastEnvelope env;
  env.times = ens.trajectories[0].times;
  env.beta = beta;
  env.excluded = ens.excluded;
  env.d = 2 * samples * coords;
  env.lower.resize(samples, coords);
  env.upper.resize(samples, coords);
  for (int k = 0; k < samples; ++k) {
    for (int c = 0; c < coords; ++c) {
      double lo = coord_value(ens, kind, 0, k, c);
      double hi = lo;
      for (int r = 1; r < n; ++r) {
        const double v = coord_value(ens, kind, r, k, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      env.lower(k, c) = lo;
      env.upper(k, c) = hi;
    }
  }
  if (n > env.d) {
    env.epsilon = certified_epsilon(n, beta, env.d);
    env.certificate_valid = (ens.excluded == 0);
  } else {
    // Too few scenarios for a nontrivial bound; report the vacuous level.
    env.epsilon = 1.0;
    env.certificate_valid = false;
  }
  return env;
}

}  // namespace invgame
