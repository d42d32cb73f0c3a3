#include "invgame/experiment.hpp"

#include <Eigen/Eigenvalues>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "invgame/equilibrium.hpp"

namespace invgame {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json to_json_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json to_json_matrix(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    rows.push_back(to_json_vector(m.row(r).transpose()));
  }
  return rows;
}

Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field + ": expected an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(field + ": expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(field + ": expected a 2-d array");
  }
  const size_t cols = j[0].size();
  Matrix m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(field + ": ragged rows");
    }
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

double number_field(const json& j, const std::string& field, double fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_number()) throw ConfigError(field + ": expected a number");
  return j.at(field).get<double>();
}

// Defaults block echoed into every artifact next to the config hash.
json defaults_block(const ExperimentConfig& cfg) {
  json d;
  d["sigma"] = cfg.sigma;
  json durations = json::array();
  for (const auto& seg : cfg.schedule) durations.push_back(seg.duration);
  d["segment_durations"] = durations;
  d["prior_n_mc"] = cfg.prior_n_mc;
  return d;
}

std::vector<std::string> csv_header_lines(const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  lines.push_back("config_hash=" + cfg.hash_hex);
  lines.push_back("sigma=" + fmt(cfg.sigma));
  std::string durations = "segment_durations=";
  for (size_t i = 0; i < cfg.schedule.size(); ++i) {
    if (i) durations += ",";
    durations += fmt(cfg.schedule[i].duration);
  }
  lines.push_back(durations);
  return lines;
}

void write_json_file(const std::filesystem::path& path, json j,
                     const ExperimentConfig& cfg) {
  j["config_hash"] = cfg.hash_hex;
  j["defaults"] = defaults_block(cfg);
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output file " + path.string());
  os << j.dump(2) << "\n";
}

std::ofstream open_csv(const std::filesystem::path& path,
                       const ExperimentConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output file " + path.string());
  for (const auto& line : csv_header_lines(cfg)) os << "# " << line << "\n";
  return os;
}

FeatureMap feature_map_from_spec(const json& spec, const std::string& field,
                                 int input_dim, const Box& domain) {
  const std::string kind = spec.value("kind", "");
  if (kind == "quadratic_monomial") return FeatureMap::quadratic_monomial(input_dim);
  if (kind == "quadratic_diagonal") return FeatureMap::quadratic_diagonal(input_dim);
  if (kind == "legendre") {
    if (!spec.contains("order")) throw ConfigError(field + ".order: required");
    return FeatureMap::legendre(input_dim, spec.at("order").get<int>(), domain,
                                spec.value("include_constant", false));
  }
  throw ConfigError(field + ".kind: unknown kind '" + kind + "'");
}

std::array<Policy, 2> true_policies(const ExperimentConfig& cfg);

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config file not found: " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

void apply_override(json& config, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + spec + "': expected key=value");
  }
  std::string pointer = "/" + spec.substr(0, eq);
  for (auto& c : pointer) {
    if (c == '.') c = '/';
  }
  const std::string value = spec.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // plain string
  }
  config[json::json_pointer(pointer)] = parsed;
}

ExperimentConfig resolve_config(const json& raw) {
  ExperimentConfig cfg;
  cfg.effective = raw;
  json& eff = cfg.effective;

  // --- game ---------------------------------------------------------------
  if (!raw.contains("game")) throw ConfigError("game: required");
  const json& game_spec = raw.at("game");
  if (game_spec.is_string()) {
    const std::string name = game_spec.get<std::string>();
    if (name == "lq_benchmark") {
      cfg.kind = ExperimentConfig::GameKind::kLq;
      cfg.lq = lq_benchmark_game();
    } else if (name == "nonlinear_benchmark") {
      cfg.kind = ExperimentConfig::GameKind::kNonlinear;
      cfg.game = nonlinear_benchmark_game();
    } else {
      throw ConfigError("game: unknown name '" + name +
                        "' (expected lq_benchmark or nonlinear_benchmark)");
    }
  } else if (game_spec.is_object()) {
    // Inline games are LQ: matrices are the portable description.
    cfg.kind = ExperimentConfig::GameKind::kLq;
    LqGame g;
    g.A = matrix_from_json(game_spec.at("A"), "game.A");
    g.B[0] = matrix_from_json(game_spec.at("B1"), "game.B1");
    g.B[1] = matrix_from_json(game_spec.at("B2"), "game.B2");
    g.Q[0] = vector_from_json(game_spec.at("Q1"), "game.Q1").asDiagonal();
    g.Q[1] = vector_from_json(game_spec.at("Q2"), "game.Q2").asDiagonal();
    g.R_diag[0] = vector_from_json(game_spec.at("R1"), "game.R1");
    g.R_diag[1] = vector_from_json(game_spec.at("R2"), "game.R2");
    for (int i = 0; i < 2; ++i) {
      const std::string qv = "var_q" + std::to_string(i + 1);
      const std::string rv = "var_r" + std::to_string(i + 1);
      CostPriorSpec prior;
      prior.q_mean = g.Q[i].diagonal();
      prior.q_variance = game_spec.contains(qv)
                             ? vector_from_json(game_spec.at(qv), "game." + qv)
                             : Vector::Zero(g.state_dim()).eval();
      prior.r_mean = g.R_diag[i];
      prior.r_variance = game_spec.contains(rv)
                             ? vector_from_json(game_spec.at(rv), "game." + rv)
                             : Vector::Zero(g.input_dim(i)).eval();
      if (prior.r_variance[0] != 0.0) {
        throw ConfigError("game." + rv + ": first entry is the fixed scale "
                          "reference and must have zero variance");
      }
      g.cost_prior[i] = prior;
    }
    g.domain = Box::cube(g.state_dim(),
                         number_field(game_spec, "domain_half_width", 6.0));
    cfg.lq = g;
  } else {
    throw ConfigError("game: expected a name or an inline definition");
  }

  // --- true-cost overrides (data-generating costs; priors stay nominal) ----
  if (raw.contains("true_costs")) {
    const json& tc = raw.at("true_costs");
    if (cfg.kind == ExperimentConfig::GameKind::kLq) {
      for (int i = 0; i < 2; ++i) {
        const std::string q = "q" + std::to_string(i + 1);
        const std::string r = "r" + std::to_string(i + 1);
        if (tc.contains(q)) {
          cfg.lq->Q[i] =
              vector_from_json(tc.at(q), "true_costs." + q).asDiagonal();
        }
        if (tc.contains(r)) {
          cfg.lq->R_diag[i] = vector_from_json(tc.at(r), "true_costs." + r);
        }
      }
    } else {
      if (!tc.contains("q") || !tc.at("q").is_array() || tc.at("q").size() != 2) {
        throw ConfigError("true_costs.q: expected [q1, q2]");
      }
      for (int i = 0; i < 2; ++i) {
        const double q = tc.at("q")[i].get<double>();
        if (q <= 0.0) throw ConfigError("true_costs.q: entries must be > 0");
        cfg.game.true_cost[i] = PlayerCost{
            [q](const Vector& x) { return q * x.squaredNorm(); },
            cfg.game.true_cost[i]->input_cost_diag};
      }
    }
  }
  if (cfg.kind == ExperimentConfig::GameKind::kLq) {
    cfg.game = to_game_definition(*cfg.lq);
  }
  const int n_x = cfg.game.state_dim;

  // --- features -------------------------------------------------------------
  const bool is_lq = cfg.kind == ExperimentConfig::GameKind::kLq;
  json features = raw.value("features", json::object());
  {
    json value_spec = is_lq ? json{{"kind", "quadratic_monomial"}}
                            : json{{"kind", "legendre"}, {"order", 10}};
    if (features.contains("value")) value_spec.update(features.at("value"));
    json state_cost_spec = json{{"kind", "quadratic_diagonal"}};
    if (features.contains("state_cost")) {
      state_cost_spec.update(features.at("state_cost"));
    }
    features["value"] = value_spec;
    features["state_cost"] = state_cost_spec;
  }
  cfg.phi_v = feature_map_from_spec(features.at("value"), "features.value",
                                    n_x, cfg.game.domain);
  cfg.phi_q = feature_map_from_spec(features.at("state_cost"),
                                    "features.state_cost", n_x,
                                    cfg.game.domain);
  eff["features"] = features;

  // --- prior ----------------------------------------------------------------
  const json prior = raw.value("prior", json::object());
  cfg.prior_n_mc = static_cast<int>(number_field(prior, "n_mc", 200));
  if (cfg.prior_n_mc < 2) throw ConfigError("prior.n_mc: must be >= 2");
  cfg.prior_seed =
      static_cast<std::uint64_t>(number_field(prior, "seed", 12345));
  eff["prior"] = {{"n_mc", cfg.prior_n_mc}, {"seed", cfg.prior_seed}};

  // --- simulation -----------------------------------------------------------
  if (raw.contains("simulation")) {
    const json& sim = raw.at("simulation");
    if (!sim.contains("x0")) throw ConfigError("simulation.x0: required");
    cfg.x0 = vector_from_json(sim.at("x0"), "simulation.x0");
    if (cfg.x0.size() != n_x) {
      throw ConfigError("simulation.x0: expected " + std::to_string(n_x) +
                        " entries");
    }
    cfg.sim_dt = number_field(sim, "dt", 0.0);
    if (cfg.sim_dt <= 0.0) throw ConfigError("simulation.dt: must be > 0");
    if (!sim.contains("schedule") || !sim.at("schedule").is_array() ||
        sim.at("schedule").empty()) {
      throw ConfigError("simulation.schedule: required, nonempty array");
    }
    for (size_t k = 0; k < sim.at("schedule").size(); ++k) {
      const json& seg = sim.at("schedule")[k];
      const std::string field = "simulation.schedule[" + std::to_string(k) + "]";
      ScheduleSegment s;
      s.duration = number_field(seg, "duration", 0.0);
      if (s.duration <= 0.0) throw ConfigError(field + ".duration: must be > 0");
      s.target = seg.contains("target")
                     ? vector_from_json(seg.at("target"), field + ".target")
                     : Vector::Zero(n_x).eval();
      if (s.target.size() != n_x) {
        throw ConfigError(field + ".target: wrong dimension");
      }
      if (seg.contains("initial")) {
        s.initial_state = vector_from_json(seg.at("initial"), field + ".initial");
        if (s.initial_state->size() != n_x) {
          throw ConfigError(field + ".initial: wrong dimension");
        }
      }
      cfg.schedule.push_back(std::move(s));
    }
    const std::string mode = sim.value("derivative_mode", "exact_dynamics");
    if (mode == "exact_dynamics") {
      cfg.derivative_mode = DerivativeMode::kExactDynamics;
    } else if (mode == "finite_difference") {
      cfg.derivative_mode = DerivativeMode::kFiniteDifference;
    } else {
      throw ConfigError("simulation.derivative_mode: unknown mode '" + mode +
                        "'");
    }
    eff["simulation"]["derivative_mode"] = mode;
  }

  // --- estimator --------------------------------------------------------------
  const json est = raw.value("estimator", json::object());
  const double default_sigma =
      cfg.derivative_mode == DerivativeMode::kExactDynamics ? 1e-3 : 1e-2;
  cfg.sigma = number_field(est, "sigma", default_sigma);
  if (cfg.sigma <= 0.0) throw ConfigError("estimator.sigma: must be > 0");
  cfg.sample_budget = static_cast<int>(number_field(est, "sample_budget", -1));
  if (est.contains("snapshot_step")) {
    cfg.snapshot_step = est.at("snapshot_step").get<int>();
    if (*cfg.snapshot_step < 0) {
      throw ConfigError("estimator.snapshot_step: must be >= 0");
    }
  }
  if (est.contains("players")) {
    for (const auto& p : est.at("players")) {
      const int player = p.get<int>();
      if (player < 1 || player > 2) {
        throw ConfigError("estimator.players: entries must be 1 or 2");
      }
      cfg.players.push_back(player - 1);
    }
  } else {
    cfg.players = {0, 1};
  }
  eff["estimator"]["sigma"] = cfg.sigma;

  // --- forecast ---------------------------------------------------------------
  cfg.has_forecast = raw.contains("forecast");
  if (cfg.has_forecast) {
    const json& fc = raw.at("forecast");
    cfg.forecast_horizon = number_field(fc, "horizon", 6.0);
    cfg.forecast_dt = number_field(fc, "dt", 0.1);
    if (cfg.forecast_dt <= 0.0 || cfg.forecast_horizon < cfg.forecast_dt) {
      throw ConfigError("forecast: need dt > 0 and horizon >= dt");
    }
    cfg.forecast_n_mc = static_cast<int>(number_field(fc, "n_mc", 10000));
    if (cfg.forecast_n_mc < 1) throw ConfigError("forecast.n_mc: must be >= 1");
    cfg.forecast_level = number_field(fc, "level", 0.95);
    if (cfg.forecast_level <= 0.0 || cfg.forecast_level >= 1.0) {
      throw ConfigError("forecast.level: must be in (0,1)");
    }
    cfg.forecast_beta = number_field(fc, "beta", 0.01);
    if (cfg.forecast_beta <= 0.0 || cfg.forecast_beta >= 1.0) {
      throw ConfigError("forecast.beta: must be in (0,1)");
    }
    cfg.forecast_seed =
        static_cast<std::uint64_t>(number_field(fc, "seed", 67890));
    const int player = static_cast<int>(number_field(fc, "player", 1));
    if (player < 1 || player > 2) {
      throw ConfigError("forecast.player: must be 1 or 2");
    }
    cfg.forecast_player = player - 1;
    cfg.forecast_use_snapshot = fc.value("use_snapshot", true);
    cfg.combined_certificate = fc.value("combined_certificate", false);
    if (fc.contains("reference_epsilon")) {
      cfg.reference_epsilon = fc.at("reference_epsilon").get<double>();
    }
    eff["forecast"] = {{"horizon", cfg.forecast_horizon},
                       {"dt", cfg.forecast_dt},
                       {"n_mc", cfg.forecast_n_mc},
                       {"level", cfg.forecast_level},
                       {"beta", cfg.forecast_beta},
                       {"seed", cfg.forecast_seed},
                       {"player", player},
                       {"use_snapshot", cfg.forecast_use_snapshot},
                       {"combined_certificate", cfg.combined_certificate}};
    if (cfg.reference_epsilon) {
      eff["forecast"]["reference_epsilon"] = *cfg.reference_epsilon;
    }
  }

  // --- solver -------------------------------------------------------------------
  const json solver = raw.value("solver", json::object());
  cfg.lq_tol = number_field(solver, "lq_tol", 1e-9);
  cfg.lq_max_iter = static_cast<int>(number_field(solver, "lq_max_iter", 500));
  cfg.nl_tol = number_field(solver, "nl_tol", 1e-6);
  cfg.nl_max_iter = static_cast<int>(number_field(solver, "nl_max_iter", 200));
  cfg.grid_points = static_cast<int>(number_field(solver, "grid_points", 201));
  if (cfg.grid_points < 2) throw ConfigError("solver.grid_points: must be >= 2");
  eff["solver"] = {{"lq_tol", cfg.lq_tol},
                   {"lq_max_iter", cfg.lq_max_iter},
                   {"nl_tol", cfg.nl_tol},
                   {"nl_max_iter", cfg.nl_max_iter},
                   {"grid_points", cfg.grid_points}};

  cfg.output_dir = raw.value("output_dir", "out");
  cfg.hash_hex = fnv1a_hex(eff.dump());
  return cfg;
}

namespace {

std::array<Policy, 2> true_policies(const ExperimentConfig& cfg) {
  if (!cfg.game.true_cost[0] || !cfg.game.true_cost[1]) {
    throw ConfigError("true costs are required to derive equilibrium policies");
  }
  std::array<Policy, 2> policies;
  if (cfg.kind == ExperimentConfig::GameKind::kLq) {
    const LqEquilibrium eq = solve_lq_nash(*cfg.lq, cfg.lq_tol, cfg.lq_max_iter);
    for (int i = 0; i < 2; ++i) {
      const Matrix gain = eq.K[i];
      policies[i] = [gain](const Vector& x) -> Vector { return -gain * x; };
    }
  } else {
    const auto grid = uniform_grid(cfg.game.domain, cfg.grid_points);
    const NlEquilibrium eq = solve_nonlinear_hjb(cfg.game, cfg.phi_v, grid,
                                                 cfg.nl_tol, cfg.nl_max_iter);
    for (int i = 0; i < 2; ++i) {
      const Vector w = eq.value_weights[i];
      const FeatureMap basis = eq.basis;
      const auto channel = cfg.game.input_channel[i];
      const Vector r_diag = cfg.game.true_cost[i]->input_cost_diag;
      policies[i] = [w, basis, channel, r_diag](const Vector& x) {
        return equilibrium_policy(x, w, basis, channel, r_diag);
      };
    }
  }
  return policies;
}

ParamLayout layout_for(const ExperimentConfig& cfg, int player) {
  ParamLayout layout;
  layout.p = cfg.phi_v.output_dim();
  layout.s = cfg.phi_q.output_dim();
  layout.m = cfg.game.input_dims[player];
  layout.fixed_r11 = cfg.game.true_cost[player]->input_cost_diag[0];
  return layout;
}

void write_posterior_file(const std::filesystem::path& path,
                          const GaussianPosterior& post,
                          const ParamLayout& layout, int player,
                          const ExperimentConfig& cfg) {
  json j = posterior_to_json(post, layout);
  j["player"] = player + 1;
  write_json_file(path, j, cfg);
}

void write_value_curve(const std::filesystem::path& path,
                       const ExperimentConfig& cfg,
                       const GaussianPosterior& post, const ParamLayout& layout,
                       const std::optional<NlEquilibrium>& truth, int player) {
  std::ofstream os = open_csv(path, cfg);
  os << "x,v_mean,v_two_sigma";
  if (truth) os << ",v_true";
  os << "\n";
  const int n_pts = 101;
  const Box& box = cfg.game.domain;
  const Vector phi0 = cfg.phi_v.eval(Vector::Zero(1));
  const Matrix cov_v = post.covariance.topLeftCorner(layout.p, layout.p);
  for (int k = 0; k < n_pts; ++k) {
    const double x =
        box.lower[0] + (box.upper[0] - box.lower[0]) * k / (n_pts - 1);
    const Vector delta = cfg.phi_v.eval(Vector::Constant(1, x)) - phi0;
    const double mean = post.mean.head(layout.p).dot(delta);
    const double two_sigma = 2.0 * std::sqrt(std::max(
        0.0, static_cast<double>(delta.transpose() * cov_v * delta)));
    os << fmt(x) << "," << fmt(mean) << "," << fmt(two_sigma);
    if (truth) os << "," << fmt(truth->value(player, Vector::Constant(1, x)));
    os << "\n";
  }
}

}  // namespace

Policy true_policy(const ExperimentConfig& cfg, int player) {
  return true_policies(cfg)[player];
}

SolveOutcome run_solve(const ExperimentConfig& cfg,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  SolveOutcome outcome;
  json j;
  if (cfg.kind == ExperimentConfig::GameKind::kLq) {
    const LqEquilibrium eq = solve_lq_nash(*cfg.lq, cfg.lq_tol, cfg.lq_max_iter);
    j["type"] = "lq";
    j["P1"] = to_json_matrix(eq.P[0]);
    j["P2"] = to_json_matrix(eq.P[1]);
    j["K1"] = to_json_matrix(eq.K[0]);
    j["K2"] = to_json_matrix(eq.K[1]);
    j["residuals"] = {eq.residual[0], eq.residual[1]};
    j["iterations"] = eq.iterations;
    const Eigen::EigenSolver<Matrix> eig(eq.closed_loop(*cfg.lq), false);
    j["closed_loop_eig_real"] =
        to_json_vector(eig.eigenvalues().real());
    outcome.lq = eq;
  } else {
    const auto grid = uniform_grid(cfg.game.domain, cfg.grid_points);
    const NlEquilibrium eq = solve_nonlinear_hjb(cfg.game, cfg.phi_v, grid,
                                                 cfg.nl_tol, cfg.nl_max_iter);
    j["type"] = "nonlinear";
    j["basis"] = {{"kind", "legendre"},
                  {"order", cfg.phi_v.order()},
                  {"output_dim", cfg.phi_v.output_dim()}};
    j["value_weights_p1"] = to_json_vector(eq.value_weights[0]);
    j["value_weights_p2"] = to_json_vector(eq.value_weights[1]);
    j["hjb_residual_sup_relative"] = {eq.hjb_residual_sup[0],
                                      eq.hjb_residual_sup[1]};
    j["iterations"] = eq.iterations;
    outcome.nl = eq;
  }
  write_json_file(out_dir / "equilibrium.json", j, cfg);
  return outcome;
}

Trajectory run_simulate(const ExperimentConfig& cfg,
                        const std::filesystem::path& out_dir) {
  if (cfg.schedule.empty()) {
    throw ConfigError("simulation: section required for this command");
  }
  std::filesystem::create_directories(out_dir);
  const auto policies = true_policies(cfg);
  const Trajectory traj = run_target_schedule(cfg.game, policies[0],
                                              policies[1], cfg.x0,
                                              cfg.schedule, cfg.sim_dt);
  auto header = csv_header_lines(cfg);
  std::string segments = "segment_starts=";
  for (size_t i = 0; i < traj.segment_starts.size(); ++i) {
    if (i) segments += ",";
    segments += std::to_string(traj.segment_starts[i]);
  }
  header.push_back(segments);
  std::ofstream os(out_dir / "trajectory.csv");
  if (!os) throw ConfigError("cannot open output file trajectory.csv");
  write_trajectory_csv(os, traj, header);
  return traj;
}

IdentifyOutcome run_identify(const ExperimentConfig& cfg,
                             const std::filesystem::path& out_dir) {
  if (cfg.schedule.empty()) {
    throw ConfigError("simulation: section required for this command");
  }
  std::filesystem::create_directories(out_dir);
  const auto policies = true_policies(cfg);

  IdentifyOutcome outcome;
  outcome.trajectory = run_target_schedule(cfg.game, policies[0], policies[1],
                                           cfg.x0, cfg.schedule, cfg.sim_dt);
  const auto samples =
      sample_dataset(outcome.trajectory, cfg.game, cfg.derivative_mode);
  const int budget =
      cfg.sample_budget < 0
          ? static_cast<int>(samples.size())
          : std::min<int>(cfg.sample_budget, static_cast<int>(samples.size()));

  // Nonlinear truth for the value-curve artifact, solved once.
  std::optional<NlEquilibrium> nl_truth;
  if (cfg.kind == ExperimentConfig::GameKind::kNonlinear) {
    nl_truth = solve_nonlinear_hjb(cfg.game, cfg.phi_v,
                                   uniform_grid(cfg.game.domain, cfg.grid_points),
                                   cfg.nl_tol, cfg.nl_max_iter);
  }

  for (int player : cfg.players) {
    const ParamLayout layout = layout_for(cfg, player);
    GaussianPosterior post;
    if (cfg.kind == ExperimentConfig::GameKind::kLq) {
      post = build_lq_prior(*cfg.lq, player, cfg.prior_n_mc, cfg.prior_seed);
    } else {
      post = build_nonlinear_prior(
          cfg.game, cfg.phi_v, cfg.phi_q,
          uniform_grid(cfg.game.domain, cfg.grid_points), player,
          cfg.prior_n_mc, cfg.prior_seed);
    }
    const NoiseModel noise = NoiseModel::isotropic(1 + layout.m, cfg.sigma);

    const std::string tag = "_p" + std::to_string(player + 1);
    std::ofstream trace = open_csv(out_dir / ("identify" + tag + "_trace.csv"),
                                   cfg);
    trace << "step,t";
    for (int i = 0; i < layout.dim(); ++i) trace << ",mean_" << i;
    for (int i = 0; i < layout.dim(); ++i) trace << ",two_sigma_" << i;
    trace << "\n";
    const auto write_row = [&](int step, double t) {
      trace << step << "," << fmt(t);
      for (int i = 0; i < layout.dim(); ++i) trace << "," << fmt(post.mean[i]);
      for (int i = 0; i < layout.dim(); ++i) {
        trace << ","
              << fmt(2.0 * std::sqrt(std::max(0.0, post.covariance(i, i))));
      }
      trace << "\n";
    };

    write_row(0, outcome.trajectory.times[0]);
    for (int k = 0; k < budget; ++k) {
      const RegressionSample rs = build_regression_sample(
          samples[k], player, cfg.phi_v, cfg.phi_q,
          cfg.game.input_channel[player], layout);
      try {
        post = recursive_update(post, rs, noise);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at step " +
                             std::to_string(k + 1));
      }
      write_row(k + 1, samples[k].t);
      if (cfg.snapshot_step && k + 1 == *cfg.snapshot_step) {
        outcome.snapshot_posterior[player] = post;
        write_posterior_file(out_dir / ("posterior" + tag + "_snapshot.json"),
                             post, layout, player, cfg);
        if (cfg.kind == ExperimentConfig::GameKind::kNonlinear) {
          write_value_curve(out_dir / ("value_curve" + tag + ".csv"), cfg, post,
                            layout, nl_truth, player);
        }
      }
    }
    if (cfg.snapshot_step && *cfg.snapshot_step == 0) {
      outcome.snapshot_posterior[player] = post;
      write_posterior_file(out_dir / ("posterior" + tag + "_snapshot.json"),
                           post, layout, player, cfg);
    }
    outcome.final_posterior[player] = post;
    outcome.layout[player] = layout;
    write_posterior_file(out_dir / ("posterior" + tag + ".json"), post, layout,
                         player, cfg);
  }
  return outcome;
}

namespace {

void write_band_csv(const std::filesystem::path& path,
                    const ExperimentConfig& cfg, const QuantileBand& band,
                    const ForecastEnvelope& env, const Trajectory& truth,
                    SignalKind kind, int player) {
  std::ofstream os = open_csv(path, cfg);
  const int coords = static_cast<int>(band.mean.cols());
  const auto label = [&](int c) {
    return kind == SignalKind::kStates
               ? "x" + std::to_string(c + 1)
               : "u" + std::to_string(player + 1) + "_" + std::to_string(c + 1);
  };
  os << "t";
  for (int c = 0; c < coords; ++c) {
    os << "," << label(c) << "_true"
       << "," << label(c) << "_mean"
       << "," << label(c) << "_q_lo"
       << "," << label(c) << "_q_hi"
       << "," << label(c) << "_env_lo"
       << "," << label(c) << "_env_hi";
  }
  os << "\n";
  for (int k = 0; k < band.times.size(); ++k) {
    os << fmt(band.times[k]);
    for (int c = 0; c < coords; ++c) {
      const double true_value = kind == SignalKind::kStates
                                    ? truth.states[k][c]
                                    : truth.inputs[player][k][c];
      os << "," << fmt(true_value) << "," << fmt(band.mean(k, c)) << ","
         << fmt(band.lower(k, c)) << "," << fmt(band.upper(k, c)) << ","
         << fmt(env.lower(k, c)) << "," << fmt(env.upper(k, c));
    }
    os << "\n";
  }
}

}  // namespace

ForecastOutcome run_forecast(const ExperimentConfig& cfg,
                             const std::filesystem::path& out_dir,
                             const std::filesystem::path& posterior_file) {
  if (!cfg.has_forecast) {
    throw ConfigError("forecast: section required for this command");
  }
  if (!std::filesystem::exists(posterior_file)) {
    throw ConfigError("posterior file not found: " + posterior_file.string());
  }
  std::filesystem::create_directories(out_dir);

  const json pj = load_config_file(posterior_file);
  auto [post, layout] = posterior_from_json(pj);

  const int player = cfg.forecast_player;
  const ParamLayout expected = layout_for(cfg, player);
  if (layout.dim() != expected.dim() || layout.m != expected.m) {
    throw ConfigError("posterior file layout is incompatible with the "
                      "configured game/features");
  }

  const auto policies = true_policies(cfg);
  const RolloutEnsemble ens = rollout_ensemble(
      post, player, policies[1 - player], cfg.game, cfg.phi_v, layout, cfg.x0,
      cfg.forecast_horizon, cfg.forecast_dt, cfg.forecast_n_mc,
      cfg.forecast_seed);

  ForecastOutcome out;
  out.excluded = ens.excluded;
  out.state_band = credible_band(ens, cfg.forecast_level, SignalKind::kStates);
  out.input_band = credible_band(ens, cfg.forecast_level, SignalKind::kInputs);
  out.state_envelope =
      forecast_envelope(ens, cfg.forecast_beta, SignalKind::kStates);
  out.input_envelope =
      forecast_envelope(ens, cfg.forecast_beta, SignalKind::kInputs);
  if (cfg.combined_certificate) {
    out.combined_envelope =
        forecast_envelope(ens, cfg.forecast_beta, SignalKind::kCombined);
  }
  out.true_trajectory =
      integrate_closed_loop(cfg.game, policies[0], policies[1], cfg.x0,
                            cfg.forecast_horizon, cfg.forecast_dt);

  write_band_csv(out_dir / "forecast_states.csv", cfg, out.state_band,
                 out.state_envelope, out.true_trajectory, SignalKind::kStates,
                 player);
  write_band_csv(out_dir / "forecast_inputs.csv", cfg, out.input_band,
                 out.input_envelope, out.true_trajectory, SignalKind::kInputs,
                 player);

  json cert;
  cert["n_requested"] = ens.requested;
  cert["n_included"] = ens.size();
  cert["excluded"] = ens.excluded;
  cert["beta"] = cfg.forecast_beta;
  cert["level"] = cfg.forecast_level;
  cert["player"] = player + 1;
  cert["states"] = {{"d", out.state_envelope.d},
                    {"epsilon", out.state_envelope.epsilon}};
  cert["inputs"] = {{"d", out.input_envelope.d},
                    {"epsilon", out.input_envelope.epsilon}};
  if (out.combined_envelope) {
    cert["combined"] = {{"d", out.combined_envelope->d},
                        {"epsilon", out.combined_envelope->epsilon}};
  }
  cert["certificate_valid"] = out.state_envelope.certificate_valid;
  if (cfg.reference_epsilon) {
    cert["reference_epsilon"] = *cfg.reference_epsilon;
  }
  write_json_file(out_dir / "certificate.json", cert, cfg);
  return out;
}

json run_certify(std::optional<long> n, double beta, int d,
                 std::optional<double> epsilon) {
  json j;
  j["beta"] = beta;
  j["d"] = d;
  if (epsilon) {
    j["mode"] = "required_samples";
    j["epsilon"] = *epsilon;
    j["n"] = required_samples(*epsilon, beta, d);
  } else {
    if (!n) {
      throw ConfigError("certify: either n or epsilon is required");
    }
    j["mode"] = "certified_epsilon";
    j["n"] = *n;
    j["epsilon"] = certified_epsilon(static_cast<int>(*n), beta, d);
  }
  return j;
}

void run_full_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir) {
  run_solve(cfg, out_dir);
  run_simulate(cfg, out_dir);
  const IdentifyOutcome identify = run_identify(cfg, out_dir);
  if (cfg.has_forecast) {
    const int player = cfg.forecast_player;
    const std::string tag = "_p" + std::to_string(player + 1);
    const bool use_snapshot =
        cfg.forecast_use_snapshot && identify.snapshot_posterior[player];
    const auto posterior_file =
        out_dir /
        ("posterior" + tag + (use_snapshot ? "_snapshot.json" : ".json"));
    run_forecast(cfg, out_dir, posterior_file);
  }
}

}  // namespace invgame
