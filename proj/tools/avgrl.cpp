#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avgrl/envs.hpp"
#include "avgrl/errors.hpp"
#include "avgrl/harness.hpp"
#include "avgrl/mdp_io.hpp"
#include "avgrl/selftest.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out, std::optional<int> trials, std::optional<int> parallel) {
  avgrl::ExperimentConfig config = avgrl::load_experiment_config(config_path);
  if (seed) config.base_seed = *seed;
  if (trials) config.n_trials = *trials;
  if (parallel) config.parallel = *parallel;
  if (!out.empty()) config.output_path = out;
  config.validate();

  const auto result = avgrl::run_experiment(config);
  avgrl::write_experiment(result, config.output_path);

  std::cout << "wrote " << result.rows.size() << " rows to " << config.output_path.string()
            << " and summary to " << avgrl::summary_path_for(config.output_path).string() << '\n';
  const int tail = std::min<int>(50, static_cast<int>(result.summary.size()));
  std::cout << "mean moving average over the last " << tail
            << " episodes: " << avgrl::tail_mean(result.summary, tail) << '\n';
  return 0;
}

int cmd_feasibility(double tau_hit, const std::vector<double>& tau_mix, const std::string& out) {
  const auto rows = avgrl::feasibility_table(tau_hit, tau_mix);
  for (const auto& row : rows)
    if (!row.point) std::cerr << "tau_mix " << row.tau_mix << ": " << row.error << '\n';
  if (out.empty()) {
    avgrl::write_feasibility_csv(std::cout, rows);
  } else {
    const std::filesystem::path path(out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + out);
    avgrl::write_feasibility_csv(file, rows);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  avgrl::print_diagnostics(std::cout, avgrl::validate_mdp_file(path));
  return 0;
}

int cmd_export_gridworld(double slip, const std::string& out) {
  avgrl::GridworldSpec spec;
  spec.slip_prob = slip;
  spec.validate();
  avgrl::save_mdp(avgrl::gridworld_as_mdp(spec), out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average-reward actor-critic experiments"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, parallel;
  auto* run = app.add_subcommand("run", "Run a multi-trial experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Base seed (overrides the config)");
  run->add_option("--out", out, "Run CSV path (summary is written alongside)");
  run->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
  run->add_option("--parallel", parallel, "Trials run concurrently")->check(CLI::PositiveNumber);

  double tau_hit = 10.0;
  std::vector<double> tau_mix;
  std::string feas_out;
  auto* feas = app.add_subcommand("feasibility", "Minimum epoch length for a single PPGAE epoch");
  feas->add_option("--tau-hit", tau_hit, "Hitting time")->check(CLI::PositiveNumber);
  feas->add_option("--tau-mix", tau_mix, "Mixing times (default 1..60)")
      ->check(CLI::PositiveNumber);
  feas->add_option("--out", feas_out, "CSV path (default stdout)");

  std::string mdp_path;
  auto* validate = app.add_subcommand("validate", "Check an MDP file and print diagnostics");
  validate->add_option("file", mdp_path, "MDP JSON file")->required();

  unsigned long long selftest_seed = 7;
  auto* selftest = app.add_subcommand("selftest", "Run the fast oracle checks");
  selftest->add_option("--seed", selftest_seed, "Seed for the random instances");

  double slip = 0.0;
  std::string grid_out;
  auto* grid = app.add_subcommand("export-gridworld", "Write the 5x5 gridworld as an MDP file");
  grid->add_option("--slip", slip, "Slip probability");
  grid->add_option("--out", grid_out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out, trials, parallel);
    if (*feas) {
      if (tau_mix.empty())
        for (int t = 1; t <= 60; ++t) tau_mix.push_back(t);
      return cmd_feasibility(tau_hit, tau_mix, feas_out);
    }
    if (*validate) return cmd_validate(mdp_path);
    if (*selftest) return avgrl::report_selftest(std::cout, avgrl::run_selftest(selftest_seed)) ? 0 : 1;
    if (*grid) return cmd_export_gridworld(slip, grid_out);
  } catch (const avgrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const avgrl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
