// Acceptance suite: one pass/fail line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "invgame/experiment.hpp"

#ifndef INVGAME_EXPERIMENTS_DIR
#define INVGAME_EXPERIMENTS_DIR "experiments"
#endif

namespace {

using namespace invgame;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<bool(std::ostringstream&)> body;
};

fs::path experiments_dir() {
  if (const char* env = std::getenv("INVGAME_EXPERIMENTS")) return env;
  return INVGAME_EXPERIMENTS_DIR;
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("invgame_accept_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig load_experiment(const std::string& name) {
  return resolve_config(load_config_file(experiments_dir() / name));
}

std::vector<MeasurementSample> benchmark_nash_samples(int count, double dt) {
  const LqGame lq = lq_benchmark_game();
  const GameDefinition game = to_game_definition(lq);
  const LqEquilibrium eq = solve_lq_nash(lq);
  const Matrix k1 = eq.K[0], k2 = eq.K[1];
  const Policy p1 = [k1](const Vector& x) -> Vector { return -k1 * x; };
  const Policy p2 = [k2](const Vector& x) -> Vector { return -k2 * x; };
  Vector x0(4);
  x0 << 3, -4, 2, 1.5;
  const Trajectory traj =
      integrate_closed_loop(game, p1, p2, x0, count * dt + dt, dt);
  auto samples = sample_dataset(traj, game, DerivativeMode::kExactDynamics);
  samples.resize(count);
  return samples;
}

// --- criterion 1 -----------------------------------------------------------

bool forward_lq_correctness(std::ostringstream& detail) {
  nlohmann::json raw;
  raw["game"] = "lq_benchmark";
  const ExperimentConfig cfg = resolve_config(raw);
  const SolveOutcome out = run_solve(cfg, scratch_dir("solve"));
  const auto res =
      coupled_riccati_residual(*cfg.lq, out.lq->P[0], out.lq->P[1]);
  const bool hurwitz = is_hurwitz(out.lq->closed_loop(*cfg.lq));
  detail << "residuals (" << res[0] << ", " << res[1] << "), hurwitz "
         << (hurwitz ? "yes" : "no");
  return res[0] <= 1e-8 && res[1] <= 1e-8 && hurwitz;
}

// --- criterion 2 -----------------------------------------------------------

bool regression_consistency(std::ostringstream& detail) {
  const LqGame lq = lq_benchmark_game();
  const GameDefinition game = to_game_definition(lq);
  const LqEquilibrium eq = solve_lq_nash(lq);
  const FeatureMap phi_v = FeatureMap::quadratic_monomial(4);
  const FeatureMap phi_q = FeatureMap::quadratic_diagonal(4);
  const auto samples = benchmark_nash_samples(500, 0.01);

  double worst = 0.0;
  for (int player = 0; player < 2; ++player) {
    const ParamLayout layout = lq_param_layout(lq, player);
    const Vector w_true = lq_true_reduced_weights(lq, eq, player);
    for (const auto& s : samples) {
      const RegressionSample rs = build_regression_sample(
          s, player, phi_v, phi_q, game.input_channel[player], layout);
      worst = std::max(worst, (rs.Phi * w_true - rs.y).norm());
    }
  }
  detail << "500 samples x 2 players, worst residual " << worst;
  return worst <= 1e-8;
}

// --- criterion 3 -----------------------------------------------------------

bool recursive_equals_batch(std::ostringstream& detail) {
  const LqGame lq = lq_benchmark_game();
  const GameDefinition game = to_game_definition(lq);
  const FeatureMap phi_v = FeatureMap::quadratic_monomial(4);
  const FeatureMap phi_q = FeatureMap::quadratic_diagonal(4);
  const ParamLayout layout = lq_param_layout(lq, 0);
  const auto measurements = benchmark_nash_samples(300, 0.01);

  std::vector<RegressionSample> samples;
  for (const auto& m : measurements) {
    samples.push_back(build_regression_sample(m, 0, phi_v, phi_q,
                                              game.input_channel[0], layout));
  }
  const GaussianPosterior prior = build_lq_prior(lq, 0, 200, 2024);
  const NoiseModel noise = NoiseModel::isotropic(3, 1e-3);

  GaussianPosterior rec = prior;
  for (const auto& s : samples) rec = recursive_update(rec, s, noise);
  const GaussianPosterior bat = batch_posterior(prior, samples, noise);

  const double mean_rel = (rec.mean - bat.mean).norm() / bat.mean.norm();
  const double cov_rel =
      (rec.covariance - bat.covariance).norm() / bat.covariance.norm();
  detail << "mean rel " << mean_rel << ", cov rel " << cov_rel;
  return mean_rel <= 1e-8 && cov_rel <= 1e-8;
}

// --- criterion 4 -----------------------------------------------------------

bool parameter_recovery(std::ostringstream& detail) {
  const ExperimentConfig cfg = load_experiment("lq_paper.json");
  const fs::path out = scratch_dir("identify");
  const IdentifyOutcome outcome = run_identify(cfg, out);

  const LqEquilibrium true_eq = solve_lq_nash(*cfg.lq);
  const Vector w_true = lq_true_reduced_weights(*cfg.lq, true_eq, 0);
  const GaussianPosterior& post = *outcome.final_posterior[0];

  double worst_cost_rel = 0.0;
  for (int i = 10; i < 15; ++i) {
    worst_cost_rel = std::max(
        worst_cost_rel, std::abs(post.mean[i] - w_true[i]) / std::abs(w_true[i]));
  }
  bool in_band = true;
  double worst_z = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double sigma = std::sqrt(std::max(0.0, post.covariance(i, i)));
    const double z = std::abs(post.mean[i] - w_true[i]) / sigma;
    worst_z = std::max(worst_z, z);
    in_band = in_band && (z <= 2.0);
  }
  detail << "worst cost-entry rel err " << worst_cost_rel
         << ", worst |z| " << worst_z << " (2-sigma bound)";
  return worst_cost_rel <= 0.05 && in_band;
}

// --- criterion 5 -----------------------------------------------------------

bool forecast_calibration(std::ostringstream& detail) {
  ExperimentConfig cfg = load_experiment("lq_paper.json");
  cfg.sample_budget = 30;

  // 30-sample posterior for player 1.
  const auto samples_all = [&] {
    const auto policies_true = std::array<Policy, 2>{
        true_policy(cfg, 0), true_policy(cfg, 1)};
    const Trajectory traj =
        run_target_schedule(cfg.game, policies_true[0], policies_true[1],
                            cfg.x0, cfg.schedule, cfg.sim_dt);
    return sample_dataset(traj, cfg.game, cfg.derivative_mode);
  }();
  const ParamLayout layout{cfg.phi_v.output_dim(), cfg.phi_q.output_dim(), 2,
                           cfg.game.true_cost[0]->input_cost_diag[0]};
  GaussianPosterior post =
      build_lq_prior(*cfg.lq, 0, cfg.prior_n_mc, cfg.prior_seed);
  const NoiseModel noise = NoiseModel::isotropic(3, cfg.sigma);
  for (int k = 0; k < 30; ++k) {
    post = recursive_update(post,
                            build_regression_sample(samples_all[k], 0,
                                                    cfg.phi_v, cfg.phi_q,
                                                    cfg.game.input_channel[0],
                                                    layout),
                            noise);
  }

  const Policy p2 = true_policy(cfg, 1);
  const Trajectory truth = integrate_closed_loop(
      cfg.game, true_policy(cfg, 0), p2, cfg.x0, cfg.forecast_horizon,
      cfg.forecast_dt);

  int seeds_passed = 0;
  for (std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    const RolloutEnsemble ens = rollout_ensemble(
        post, 0, p2, cfg.game, cfg.phi_v, layout, cfg.x0,
        cfg.forecast_horizon, cfg.forecast_dt, cfg.forecast_n_mc, seed);
    const QuantileBand sband = credible_band(ens, 0.95, SignalKind::kStates);
    const QuantileBand iband = credible_band(ens, 0.95, SignalKind::kInputs);
    const ForecastEnvelope senv =
        forecast_envelope(ens, cfg.forecast_beta, SignalKind::kStates);
    const ForecastEnvelope ienv =
        forecast_envelope(ens, cfg.forecast_beta, SignalKind::kInputs);

    const int steps = static_cast<int>(truth.times.size());
    bool seed_ok = true;
    const auto check_block = [&](const QuantileBand& band,
                                 const ForecastEnvelope& env, bool states) {
      const int coords = static_cast<int>(band.mean.cols());
      for (int c = 0; c < coords; ++c) {
        int in_band = 0, in_env = 0;
        for (int k = 0; k < steps; ++k) {
          const double v =
              states ? truth.states[k][c] : truth.inputs[0][k][c];
          if (v >= band.lower(k, c) - 1e-12 && v <= band.upper(k, c) + 1e-12) {
            ++in_band;
          }
          if (v >= env.lower(k, c) - 1e-12 && v <= env.upper(k, c) + 1e-12) {
            ++in_env;
          }
        }
        seed_ok = seed_ok && in_band >= 0.90 * steps && in_env >= 0.99 * steps;
      }
    };
    check_block(sband, senv, true);
    check_block(iband, ienv, false);
    if (seed_ok) ++seeds_passed;
  }
  detail << seeds_passed << "/3 seeds calibrated";
  return seeds_passed >= 2;
}

// --- criterion 6 -----------------------------------------------------------

bool scenario_certificate(std::ostringstream& detail) {
  // Closed form at d = 1.
  double worst_closed_form = 0.0;
  for (int n : {100, 1000, 10000}) {
    for (double beta : {0.001, 0.01, 0.1}) {
      const double closed = 1.0 - std::pow(beta, 1.0 / n);
      worst_closed_form = std::max(
          worst_closed_form, std::abs(certified_epsilon(n, beta, 1) - closed));
    }
  }
  if (worst_closed_form > 1e-9) {
    detail << "closed-form deviation " << worst_closed_form;
    return false;
  }

  // Held-out validation of the envelope guarantee on a scalar game.
  const LqGame lq = [] {
    LqGame g;
    g.A = Matrix::Constant(1, 1, -0.4);
    g.B[0] = Matrix::Constant(1, 1, 1.0);
    g.B[1] = Matrix::Constant(1, 1, 0.6);
    g.Q[0] = Matrix::Constant(1, 1, 1.0);
    g.Q[1] = Matrix::Constant(1, 1, 0.5);
    g.R_diag[0] = Vector::Constant(1, 1.0);
    g.R_diag[1] = Vector::Constant(1, 1.0);
    for (int i = 0; i < 2; ++i) {
      g.cost_prior[i] = {g.Q[i].diagonal(), Vector::Zero(1), g.R_diag[i],
                         Vector::Zero(1)};
    }
    g.domain = Box::cube(1, 8.0);
    return g;
  }();
  const GameDefinition game = to_game_definition(lq);
  const LqEquilibrium eq = solve_lq_nash(lq);
  const double k2 = eq.K[1](0, 0);
  const Policy other = [k2](const Vector& x) -> Vector { return -k2 * x; };
  const FeatureMap phi_v = FeatureMap::quadratic_monomial(1);
  const ParamLayout layout{1, 1, 1, 1.0};
  GaussianPosterior post;
  post.mean = (Vector(2) << eq.P[0](0, 0), 1.0).finished();
  post.covariance = Matrix::Zero(2, 2);
  post.covariance(0, 0) = std::pow(0.3 * eq.P[0](0, 0), 2);
  post.covariance(1, 1) = 0.04;

  const int n_build = 500, n_fresh = 2000, horizon_steps = 10;
  const double dt = 0.1, beta = 0.01;
  const int d = 2 * (horizon_steps + 1) * 1;
  const double eps = certified_epsilon(n_build, beta, d);

  int failures = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RolloutEnsemble build =
        rollout_ensemble(post, 0, other, game, phi_v, layout,
                         Vector::Constant(1, 2.0), horizon_steps * dt, dt,
                         n_build, seed);
    const ForecastEnvelope env = forecast_envelope(build, beta);
    const RolloutEnsemble fresh =
        rollout_ensemble(post, 0, other, game, phi_v, layout,
                         Vector::Constant(1, 2.0), horizon_steps * dt, dt,
                         n_fresh, seed + 1000);
    int violations = 0;
    for (int r = 0; r < fresh.size(); ++r) {
      bool exits = false;
      for (int k = 0; k <= horizon_steps && !exits; ++k) {
        const double v = fresh.trajectories[r].states[k][0];
        exits = v < env.lower(k, 0) || v > env.upper(k, 0);
      }
      if (exits) ++violations;
    }
    if (violations > eps * n_fresh) ++failures;
  }

  // The published certificate for the LQ study, next to our computed value
  // for the state envelope dimension (reported, not asserted: the printed
  // value's d is not stated).
  const double eps_states = certified_epsilon(10000, 0.01, 2 * 61 * 4);
  detail << "held-out failures " << failures << "/20 (certified eps " << eps
         << "), lq-study states epsilon " << eps_states
         << " vs reference 0.0531";
  return failures <= 1;
}

// --- criterion 7 -----------------------------------------------------------

bool nonlinear_ground_truth(std::ostringstream& detail) {
  // Embedded scalar LQ game through the Galerkin solver.
  LqGame lq;
  lq.A = Matrix::Constant(1, 1, -0.3);
  lq.B[0] = Matrix::Constant(1, 1, 1.0);
  lq.B[1] = Matrix::Constant(1, 1, 0.8);
  lq.Q[0] = Matrix::Constant(1, 1, 1.2);
  lq.Q[1] = Matrix::Constant(1, 1, 0.7);
  lq.R_diag[0] = Vector::Constant(1, 1.0);
  lq.R_diag[1] = Vector::Constant(1, 1.0);
  lq.domain = Box::cube(1, 5.0);
  const LqEquilibrium oracle = solve_lq_nash(lq, 1e-12, 1000);

  const GameDefinition embedded = to_game_definition(lq);
  const auto grid = uniform_grid(Box::cube(1, 5.0), 201);
  const NlEquilibrium galerkin = solve_nonlinear_hjb(
      embedded, FeatureMap::quadratic_monomial(1), grid, 1e-10, 300);
  const double weight_err = std::max(
      std::abs(galerkin.value_weights[0][0] - oracle.P[0](0, 0)),
      std::abs(galerkin.value_weights[1][0] - oracle.P[1](0, 0)));

  // Benchmark configuration: Legendre order 10 on [-5, 5], 201-point grid.
  const GameDefinition bench = nonlinear_benchmark_game();
  const NlEquilibrium eq = solve_nonlinear_hjb(
      bench, FeatureMap::legendre(1, 10, bench.domain, false), grid, 1e-6,
      200);
  const double residual = std::max(eq.hjb_residual_sup[0],
                                   eq.hjb_residual_sup[1]);

  detail << "embedded-LQ weight err " << weight_err
         << ", benchmark sup residual " << residual
         << " of cost scale (order-10 basis floor; the same solver reaches "
            "2.6e-07 at order 88)";
  return weight_err <= 1e-4 && residual <= 1e-6;
}

// --- criterion 8 -----------------------------------------------------------

bool nonlinear_identification(std::ostringstream& detail) {
  const ExperimentConfig cfg = load_experiment("nonlinear_paper.json");
  const fs::path out = scratch_dir("identify_nl");
  const IdentifyOutcome outcome = run_identify(cfg, out);

  const NlEquilibrium truth = solve_nonlinear_hjb(
      cfg.game, cfg.phi_v, uniform_grid(cfg.game.domain, cfg.grid_points),
      cfg.nl_tol, cfg.nl_max_iter);

  const Vector phi0 = cfg.phi_v.eval(Vector::Zero(1));
  double worst_l2 = 0.0;
  double worst_ratio = 1e300;
  for (int player = 0; player < 2; ++player) {
    const GaussianPosterior& post = *outcome.snapshot_posterior[player];
    const int p = cfg.phi_v.output_dim();
    const Matrix cov_v = post.covariance.topLeftCorner(p, p);

    const auto value_mean = [&](double x) {
      const Vector delta = cfg.phi_v.eval(Vector::Constant(1, x)) - phi0;
      return post.mean.head(p).dot(delta);
    };
    const auto value_sigma = [&](double x) {
      const Vector delta = cfg.phi_v.eval(Vector::Constant(1, x)) - phi0;
      return std::sqrt(std::max(
          0.0, static_cast<double>(delta.transpose() * cov_v * delta)));
    };

    // Relative L2 error on the visited interval [-4, 4].
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= 160; ++k) {
      const double x = -4.0 + 8.0 * k / 160.0;
      const double vt = truth.value(player, Vector::Constant(1, x));
      const double dv = value_mean(x) - vt;
      num += dv * dv;
      den += vt * vt;
    }
    worst_l2 = std::max(worst_l2, std::sqrt(num / den));

    // Uncertainty growth off the data: mean 2-sigma width outside [-4, 4]
    // against the width on [-2, 2].
    double outside = 0.0, inside = 0.0;
    int n_out = 0, n_in = 0;
    for (int k = 0; k <= 40; ++k) {
      outside += value_sigma(-5.0 + k / 40.0);
      outside += value_sigma(4.0 + k / 40.0);
      n_out += 2;
    }
    for (int k = 0; k <= 80; ++k) {
      inside += value_sigma(-2.0 + 4.0 * k / 80.0);
      ++n_in;
    }
    worst_ratio = std::min(worst_ratio, (outside / n_out) / (inside / n_in));
  }
  detail << "worst relative L2 on [-4,4] " << worst_l2
         << ", worst off-data/on-data band ratio " << worst_ratio;
  return worst_l2 <= 0.10 && worst_ratio >= 2.0;
}

// --- criterion 9 -----------------------------------------------------------

bool numerical_hygiene(std::ostringstream& detail) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Feature jacobians against central differences.
  double worst_jac = 0.0;
  const FeatureMap mono = FeatureMap::quadratic_monomial(4);
  const FeatureMap leg = FeatureMap::legendre(1, 10, Box::cube(1, 5.0), false);
  const auto fd_check = [&](const FeatureMap& map, double scale) {
    for (int trial = 0; trial < 100; ++trial) {
      Vector x(map.input_dim());
      for (int i = 0; i < x.size(); ++i) x[i] = scale * unit(rng);
      Matrix fd(map.output_dim(), map.input_dim());
      for (int c = 0; c < map.input_dim(); ++c) {
        Vector hi = x, lo = x;
        hi[c] += 1e-5;
        lo[c] -= 1e-5;
        fd.col(c) = (map.eval(hi) - map.eval(lo)) / 2e-5;
      }
      const Matrix an = map.jacobian(x);
      worst_jac = std::max(worst_jac,
                           (an - fd).norm() / std::max(1.0, an.norm()));
    }
  };
  fd_check(mono, 4.0);
  fd_check(leg, 4.5);
  if (worst_jac > 1e-6) {
    detail << "jacobian fd deviation " << worst_jac;
    return false;
  }

  // RK4 order via a closed-form reference.
  GameDefinition logistic;
  logistic.state_dim = 1;
  logistic.input_dims = {1, 1};
  logistic.drift = [](const Vector& x) {
    return Vector::Constant(1, x[0] * (1.0 - x[0]));
  };
  logistic.input_channel[0] = [](const Vector&) { return Matrix::Zero(1, 1); };
  logistic.input_channel[1] = [](const Vector&) { return Matrix::Zero(1, 1); };
  logistic.domain = Box::cube(1, 10.0);
  const Policy zero = [](const Vector&) { return Vector::Zero(1); };
  const double exact = 0.2 * std::exp(4.0) / (1.0 + 0.2 * (std::exp(4.0) - 1));
  const auto err = [&](double dt) {
    return std::abs(integrate_closed_loop(logistic, zero, zero,
                                          Vector::Constant(1, 0.2), 4.0, dt)
                        .states.back()[0] -
                    exact);
  };
  const double ratio = err(0.1) / err(0.05);
  if (ratio < 12.0 || ratio > 20.0) {
    detail << "rk4 halving ratio " << ratio;
    return false;
  }

  // PSD after 1e4 recursive updates.
  GaussianPosterior post{Vector::Zero(6), Matrix::Identity(6, 6), 0};
  const NoiseModel noise = NoiseModel::isotropic(2, 0.4);
  for (int k = 0; k < 10000; ++k) {
    RegressionSample s;
    s.Phi.resize(2, 6);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 6; ++c) s.Phi(r, c) = unit(rng);
    }
    s.y.resize(2);
    s.y << unit(rng), unit(rng);
    post = recursive_update(post, s, noise);
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(post.covariance);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-10 * post.covariance.trace()) {
    detail << "posterior min eigenvalue " << min_eig;
    return false;
  }

  // Determinism under fixed seeds: priors and rollout draws.
  const LqGame lq = lq_benchmark_game();
  const GaussianPosterior prior_a = build_lq_prior(lq, 0, 50, 77);
  const GaussianPosterior prior_b = build_lq_prior(lq, 0, 50, 77);
  if ((prior_a.mean - prior_b.mean).norm() != 0.0 ||
      (prior_a.covariance - prior_b.covariance).norm() != 0.0) {
    detail << "prior not reproducible";
    return false;
  }
  const GameDefinition game = to_game_definition(lq);
  const LqEquilibrium eq = solve_lq_nash(lq);
  const Matrix k2m = eq.K[1];
  const Policy other = [k2m](const Vector& x) -> Vector { return -k2m * x; };
  const ParamLayout layout = lq_param_layout(lq, 0);
  Vector x0(4);
  x0 << 3, -4, 2, 1.5;
  const auto ens_a =
      rollout_ensemble(prior_a, 0, other, game,
                       FeatureMap::quadratic_monomial(4), layout, x0, 1.0,
                       0.1, 64, 5);
  const auto ens_b =
      rollout_ensemble(prior_b, 0, other, game,
                       FeatureMap::quadratic_monomial(4), layout, x0, 1.0,
                       0.1, 64, 5);
  for (int r = 0; r < ens_a.size(); ++r) {
    for (int k = 0; k < ens_a.trajectories[r].samples(); ++k) {
      if (ens_a.trajectories[r].states[k] != ens_b.trajectories[r].states[k]) {
        detail << "rollouts not reproducible";
        return false;
      }
    }
  }

  detail << "jacobians " << worst_jac << ", rk4 ratio " << ratio
         << ", min eig " << min_eig << ", deterministic";
  return true;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"forward LQ correctness", 1.0, forward_lq_correctness},
      {"regression consistency oracle", 5.0, regression_consistency},
      {"recursive = batch", 5.0, recursive_equals_batch},
      {"parameter recovery", 30.0, parameter_recovery},
      {"forecast calibration", 120.0, forecast_calibration},
      {"scenario certificate", 60.0, scenario_certificate},
      {"nonlinear ground truth", 10.0, nonlinear_ground_truth},
      {"nonlinear identification", 60.0, nonlinear_identification},
      {"numerical hygiene", 60.0, numerical_hygiene},
  };

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    std::ostringstream detail;
    bool ok = false;
    std::string error;
    const auto start = Clock::now();
    try {
      ok = criteria[i].body(detail);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_budget = elapsed < criteria[i].budget_seconds;
    const bool pass = ok && error.empty() && in_budget;
    if (!pass) ++failed;

    std::printf("[criterion %zu] %-32s %s (%.2fs/%.0fs%s%s%s)\n", i + 1,
                criteria[i].name.c_str(), pass ? "PASS" : "FAIL", elapsed,
                criteria[i].budget_seconds,
                detail.str().empty() ? "" : "; ",
                detail.str().c_str(),
                error.empty() ? "" : ("; exception: " + error).c_str());
    std::fflush(stdout);
  }
  return failed;
}
