#pragma once

#include <array>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "invgame/bayes_estimator.hpp"
#include "invgame/forecaster.hpp"
#include "invgame/game_model.hpp"
#include "invgame/simulator.hpp"

namespace invgame {

// Fully resolved experiment description: the validated configuration with all
// defaults filled in, the game it references, and the hash of the effective
// JSON that every output artifact embeds.
struct ExperimentConfig {
  enum class GameKind { kLq, kNonlinear };

  GameKind kind = GameKind::kLq;
  std::optional<LqGame> lq;   // set for kLq (true costs applied)
  GameDefinition game;        // general view, always set

  FeatureMap phi_v{FeatureMap::quadratic_monomial(1)};
  FeatureMap phi_q{FeatureMap::quadratic_diagonal(1)};

  int prior_n_mc = 200;
  std::uint64_t prior_seed = 12345;

  Vector x0;
  double sim_dt = 0.01;
  std::vector<ScheduleSegment> schedule;
  DerivativeMode derivative_mode = DerivativeMode::kExactDynamics;

  double sigma = 1e-3;
  int sample_budget = -1;  // -1: consume the whole dataset
  std::optional<int> snapshot_step;
  std::vector<int> players;  // 0-based

  bool has_forecast = false;
  double forecast_horizon = 6.0;
  double forecast_dt = 0.1;
  int forecast_n_mc = 10000;
  double forecast_level = 0.95;
  double forecast_beta = 0.01;
  std::uint64_t forecast_seed = 67890;
  int forecast_player = 0;  // 0-based
  bool forecast_use_snapshot = true;
  bool combined_certificate = false;
  std::optional<double> reference_epsilon;

  double lq_tol = 1e-9;
  int lq_max_iter = 500;
  double nl_tol = 1e-6;
  int nl_max_iter = 200;
  int grid_points = 201;

  std::string output_dir = "out";
  std::string hash_hex;       // FNV-1a of the effective JSON
  nlohmann::json effective;   // configuration after overrides and defaults
};

// 64-bit FNV-1a of a string, hex-encoded; stable across runs and platforms.
std::string fnv1a_hex(const std::string& text);

// Reads a JSON config file. Throws ConfigError with the offending path or
// field named.
nlohmann::json load_config_file(const std::filesystem::path& path);

// Applies one `dotted.path=value` override; the value is parsed as JSON when
// possible and kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& spec);

// Validates and resolves a raw configuration. Every error names the field.
ExperimentConfig resolve_config(const nlohmann::json& raw);

// True equilibrium policy of one player (requires true costs on the game).
Policy true_policy(const ExperimentConfig& cfg, int player);

// Pipeline stages. Each writes its artifacts under out_dir (created if
// missing) and returns the primary result for in-process callers.

struct SolveOutcome {
  std::optional<LqEquilibrium> lq;
  std::optional<NlEquilibrium> nl;
};
SolveOutcome run_solve(const ExperimentConfig& cfg,
                       const std::filesystem::path& out_dir);

Trajectory run_simulate(const ExperimentConfig& cfg,
                        const std::filesystem::path& out_dir);

struct IdentifyOutcome {
  // Indexed by player (0-based); only requested players are set.
  std::array<std::optional<GaussianPosterior>, 2> final_posterior;
  std::array<std::optional<GaussianPosterior>, 2> snapshot_posterior;
  std::array<std::optional<ParamLayout>, 2> layout;
  Trajectory trajectory;
};
IdentifyOutcome run_identify(const ExperimentConfig& cfg,
                             const std::filesystem::path& out_dir);

struct ForecastOutcome {
  QuantileBand state_band;
  QuantileBand input_band;
  ForecastEnvelope state_envelope;
  ForecastEnvelope input_envelope;
  std::optional<ForecastEnvelope> combined_envelope;
  Trajectory true_trajectory;
  int excluded = 0;
};
ForecastOutcome run_forecast(const ExperimentConfig& cfg,
                             const std::filesystem::path& out_dir,
                             const std::filesystem::path& posterior_file);

// Standalone scenario-certificate calculator: epsilon from (n, beta, d), or
// the required n from (epsilon, beta, d) when epsilon is given.
nlohmann::json run_certify(std::optional<long> n, double beta, int d,
                           std::optional<double> epsilon);

// solve + simulate + identify (+ forecast when configured).
void run_full_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir);

}  // namespace invgame
