#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avgrl/envs.hpp"
#include "avgrl/mac.hpp"
#include "avgrl/ppgae.hpp"
#include "avgrl/records.hpp"

namespace avgrl {

enum class Algorithm { kMac, kPpgae };

struct EnvConfig {
  enum class Kind { kGridworld, kMdpFile };
  Kind kind = Kind::kGridworld;
  GridworldSpec grid;
  std::filesystem::path mdp_path;
  // Accounting block length for MDP files, which have no goal.
  int episode_length = 25;

  int step_limit() const { return kind == Kind::kGridworld ? grid.step_limit : episode_length; }
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kMac;
  EnvConfig env;
  MacConfig mac;
  PpgaeConfig ppgae;
  int n_trials = 5;
  int episodes = 300;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_path = "results.csv";
  int parallel = 1;

  std::uint64_t trial_seed(int trial) const { return base_seed + static_cast<std::uint64_t>(trial); }
  /// Throws ConfigError (including PPGAE infeasibility).
  void validate() const;
};

/// Parses the JSON experiment document; `base_dir` anchors a relative MDP
/// path. Unknown keys are rejected. Budgets that are not given default to
/// episodes * step_limit samples.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The paired low-budget gridworld configurations (MAC T_max = 4 against
/// PPGAE H = 25, N = 1; 300 episodes of up to 25 samples; 5 trials).
ExperimentConfig gridworld_mac_config();
ExperimentConfig gridworld_ppgae_config();

/// Fresh environment for one trial.
EpisodicEnvironment make_environment(const ExperimentConfig& config, std::uint64_t seed);

std::vector<RunRecord> run_trial(const ExperimentConfig& config, int trial);

struct SummaryRow {
  int episode = 0;
  int n = 0;
  double mean = 0.0;
  double ci_half_width = 0.0;  // 1.96 * sample std / sqrt(n)
};

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& rows);
/// Mean of the summary curve over its last `count` episodes.
double tail_mean(const std::vector<SummaryRow>& summary, int count);

struct ExperimentResult {
  std::vector<RunRecord> rows;  // trial-major, episode order within a trial
  std::vector<SummaryRow> summary;
};

/// Runs every trial (up to config.parallel at a time) and merges rows in
/// trial order, so output does not depend on scheduling.
ExperimentResult run_experiment(const ExperimentConfig& config);

inline constexpr const char* kRunCsvHeader =
    "trial,episode,success,moving_avg,cumulative_steps,eta,exact_J";
inline constexpr const char* kSummaryCsvHeader = "episode,n_trials,mean_moving_avg,ci95_half_width";
inline constexpr const char* kFeasibilityCsvHeader = "tau_mix,H_min";

/// 17 significant digits, shortest round-trip-safe form.
std::string format_real(double value);
void write_run_csv(std::ostream& out, const std::vector<RunRecord>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);
/// Summary path next to a run CSV: results.csv -> results.summary.csv.
std::filesystem::path summary_path_for(const std::filesystem::path& run_csv);
/// Writes the run CSV and its summary; throws std::runtime_error on IO failure.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& run_csv);

struct FeasibilityRow {
  double tau_mix = 0.0;
  std::optional<FeasibilityPoint> point;
  std::string error;
};

std::vector<FeasibilityRow> feasibility_table(double tau_hit, const std::vector<double>& tau_mix);
/// Failed rows are skipped in the CSV; callers report them separately.
void write_feasibility_csv(std::ostream& out, const std::vector<FeasibilityRow>& rows);

struct MdpDiagnostics {
  int n_states = 0;
  int n_actions = 0;
  Vector stationary;
  double avg_reward = 0.0;
  int mixing_time = 0;
  double hitting_time = 0.0;
};

/// Loads and validates an MDP file, then analyzes its uniform-policy chain.
MdpDiagnostics validate_mdp_file(const std::filesystem::path& path);
void print_diagnostics(std::ostream& out, const MdpDiagnostics& diag);

}  // namespace avgrl
