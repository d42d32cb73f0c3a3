// invgame: config-driven runner for inverse differential game experiments.
//
// Subcommands mirror the pipeline stages: solve (forward equilibrium),
// simulate (closed-loop data generation), identify (recursive Bayesian
// estimation), forecast (posterior rollouts, credible bands, certified
// envelopes), certify (standalone scenario calculator), and run-experiment
// (the full pipeline).
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "invgame/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string game_name;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool allow_game_shortcut) {
  cmd->add_option("--config", args->config_path, "Experiment config (JSON)");
  if (allow_game_shortcut) {
    cmd->add_option("--game", args->game_name,
                    "Built-in game name (shortcut for a minimal config)");
  }
  cmd->add_option("--out", args->out_dir, "Output directory");
  cmd->add_option("--override", args->overrides,
                  "Config override key=value (repeatable)");
  cmd->add_option("--seed", args->seed,
                  "Master seed (sets prior.seed and forecast.seed)");
}

invgame::ExperimentConfig resolve(const CommonArgs& args) {
  nlohmann::json raw;
  if (!args.config_path.empty()) {
    raw = invgame::load_config_file(args.config_path);
  } else if (!args.game_name.empty()) {
    raw["game"] = args.game_name;
  } else {
    throw invgame::ConfigError("either --config or --game is required");
  }
  for (const auto& spec : args.overrides) {
    invgame::apply_override(raw, spec);
  }
  if (args.seed) {
    raw["prior"]["seed"] = *args.seed;
    if (raw.contains("forecast")) raw["forecast"]["seed"] = *args.seed + 1;
  }
  if (!args.out_dir.empty()) raw["output_dir"] = args.out_dir;
  return invgame::resolve_config(raw);
}

std::filesystem::path out_dir_of(const invgame::ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.output_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse differential games: Bayesian objective identification "
               "and certified behavior forecasting"};
  app.require_subcommand(1);

  CommonArgs solve_args, simulate_args, identify_args, forecast_args,
      run_args;
  std::string posterior_file;

  add_common(app.add_subcommand("solve", "Solve the forward equilibrium"),
             &solve_args, true);
  add_common(app.add_subcommand("simulate", "Generate closed-loop data"),
             &simulate_args, false);
  add_common(app.add_subcommand("identify", "Run the recursive estimator"),
             &identify_args, false);
  auto* forecast_cmd = app.add_subcommand(
      "forecast", "Roll out a posterior and certify forecast envelopes");
  add_common(forecast_cmd, &forecast_args, false);
  forecast_cmd->add_option("--posterior", posterior_file,
                           "Posterior snapshot JSON (defaults to the "
                           "identify artifact in the output directory)");
  add_common(app.add_subcommand("run-experiment", "Run the full pipeline"),
             &run_args, false);

  auto* certify_cmd = app.add_subcommand(
      "certify", "Scenario certificate calculator (epsilon or sample count)");
  std::optional<long> certify_n;
  std::optional<double> certify_epsilon_arg;
  double certify_beta = 0.01;
  int certify_d = 1;
  std::string certify_out;
  certify_cmd->add_option("--n", certify_n, "Number of scenario samples");
  certify_cmd->add_option("--epsilon", certify_epsilon_arg,
                          "Target violation level (computes required n)");
  certify_cmd->add_option("--beta", certify_beta, "Confidence complement")
      ->required();
  certify_cmd->add_option("--d", certify_d, "Envelope parameter dimension")
      ->required();
  certify_cmd->add_option("--out", certify_out,
                          "Write certificate JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("solve")) {
      const auto cfg = resolve(solve_args);
      invgame::run_solve(cfg, out_dir_of(cfg));
    } else if (app.got_subcommand("simulate")) {
      const auto cfg = resolve(simulate_args);
      invgame::run_simulate(cfg, out_dir_of(cfg));
    } else if (app.got_subcommand("identify")) {
      const auto cfg = resolve(identify_args);
      invgame::run_identify(cfg, out_dir_of(cfg));
    } else if (app.got_subcommand("forecast")) {
      const auto cfg = resolve(forecast_args);
      std::filesystem::path posterior = posterior_file;
      if (posterior.empty()) {
        const std::string tag = "_p" + std::to_string(cfg.forecast_player + 1);
        posterior = out_dir_of(cfg) /
                    ("posterior" + tag +
                     (cfg.forecast_use_snapshot ? "_snapshot.json" : ".json"));
      }
      invgame::run_forecast(cfg, out_dir_of(cfg), posterior);
    } else if (app.got_subcommand("run-experiment")) {
      const auto cfg = resolve(run_args);
      invgame::run_full_experiment(cfg, out_dir_of(cfg));
    } else if (app.got_subcommand("certify")) {
      const auto cert = invgame::run_certify(certify_n, certify_beta,
                                             certify_d, certify_epsilon_arg);
      if (certify_out.empty()) {
        std::cout << cert.dump(2) << std::endl;
      } else {
        std::ofstream os(certify_out);
        if (!os) {
          throw invgame::ConfigError("cannot open output file " + certify_out);
        }
        os << cert.dump(2) << "\n";
      }
    }
  } catch (const invgame::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}
