#include "avgrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "avgrl/errors.hpp"
#include "avgrl/mdp_io.hpp"

namespace avgrl {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

// Integer field that may also be the string "theoretical" (stored as unset).
template <typename T>
void read_or_theoretical(const json& obj, const char* key, std::optional<T>& out,
                         const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (it->is_string()) {
    if (it->get<std::string>() != "theoretical")
      throw ConfigError(where + "." + key + " must be an integer or \"theoretical\"");
    out.reset();
    return;
  }
  if (!it->is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  out = it->get<T>();
}

MacConfig parse_mac(const json& obj) {
  reject_unknown(obj,
                 {"t_max", "total_updates", "nu", "sigma", "r_omega", "eval_every", "critic_sigma",
                  "critic_scale", "actor_scale", "actor_offset", "resample_start"},
                 "mac");
  MacConfig c;
  read(obj, "t_max", c.t_max, "mac");
  read(obj, "total_updates", c.total_updates, "mac");
  read(obj, "nu", c.nu, "mac");
  read(obj, "sigma", c.sigma, "mac");
  read(obj, "r_omega", c.r_omega, "mac");
  read(obj, "eval_every", c.eval_every, "mac");
  read(obj, "critic_sigma", c.critic_sigma, "mac");
  read(obj, "critic_scale", c.critic_scale, "mac");
  read(obj, "actor_scale", c.actor_scale, "mac");
  read(obj, "actor_offset", c.actor_offset, "mac");
  read(obj, "resample_start", c.resample_start, "mac");
  return c;
}

PpgaeConfig parse_ppgae(const json& obj) {
  reject_unknown(obj,
                 {"total_budget", "epoch_len", "adv_window", "alpha", "tau_mix_hint", "tau_hit_hint"},
                 "ppgae");
  PpgaeConfig c;
  read(obj, "total_budget", c.total_budget, "ppgae");
  read_or_theoretical(obj, "epoch_len", c.epoch_len, "ppgae");
  read_or_theoretical(obj, "adv_window", c.adv_window, "ppgae");
  read(obj, "alpha", c.alpha, "ppgae");
  read(obj, "tau_mix_hint", c.tau_mix_hint, "ppgae");
  read(obj, "tau_hit_hint", c.tau_hit_hint, "ppgae");
  return c;
}

EnvConfig parse_env(const json& obj, const std::filesystem::path& base_dir) {
  if (!obj.is_object()) throw ConfigError("env must be a JSON object");
  EnvConfig env;
  std::string type = "gridworld";
  read(obj, "type", type, "env");
  if (type == "gridworld") {
    reject_unknown(obj,
                   {"type", "width", "height", "step_limit", "goal_reward", "step_reward",
                    "slip_prob"},
                   "env");
    env.kind = EnvConfig::Kind::kGridworld;
    read(obj, "width", env.grid.width, "env");
    read(obj, "height", env.grid.height, "env");
    read(obj, "step_limit", env.grid.step_limit, "env");
    read(obj, "goal_reward", env.grid.goal_reward, "env");
    read(obj, "step_reward", env.grid.step_reward, "env");
    read(obj, "slip_prob", env.grid.slip_prob, "env");
  } else if (type == "mdp_file") {
    reject_unknown(obj, {"type", "path", "episode_length"}, "env");
    env.kind = EnvConfig::Kind::kMdpFile;
    std::string path;
    read(obj, "path", path, "env");
    if (path.empty()) throw ConfigError("env.path is required for mdp_file environments");
    env.mdp_path = std::filesystem::path(path);
    if (env.mdp_path.is_relative() && !base_dir.empty()) env.mdp_path = base_dir / env.mdp_path;
    read(obj, "episode_length", env.episode_length, "env");
  } else {
    throw ConfigError("env.type must be \"gridworld\" or \"mdp_file\"");
  }
  return env;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (n_trials < 1) throw ConfigError("n_trials must be at least 1");
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  if (parallel < 1) throw ConfigError("parallel must be at least 1");
  if (env.kind == EnvConfig::Kind::kGridworld) env.grid.validate();
  if (env.step_limit() < 1) throw ConfigError("episode length must be positive");
  if (algorithm == Algorithm::kMac) {
    mac.validate();
  } else {
    ppgae.validate();
  }
}

ExperimentConfig experiment_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc,
                 {"algorithm", "env", "mac", "ppgae", "n_trials", "episodes", "base_seed",
                  "output_path", "parallel"},
                 "config");
  ExperimentConfig c;
  std::string algorithm = "mac";
  read(doc, "algorithm", algorithm, "config");
  if (algorithm == "mac") {
    c.algorithm = Algorithm::kMac;
  } else if (algorithm == "ppgae") {
    c.algorithm = Algorithm::kPpgae;
  } else {
    throw ConfigError("algorithm must be \"mac\" or \"ppgae\"");
  }
  if (doc.contains("env")) c.env = parse_env(doc.at("env"), base_dir);
  read(doc, "n_trials", c.n_trials, "config");
  read(doc, "episodes", c.episodes, "config");
  read(doc, "base_seed", c.base_seed, "config");
  read(doc, "parallel", c.parallel, "config");
  std::string out;
  read(doc, "output_path", out, "config");
  if (!out.empty()) c.output_path = out;

  const long budget = static_cast<long>(c.episodes) * c.env.step_limit();
  c.mac.total_updates = budget;
  c.ppgae.total_budget = budget;
  if (doc.contains("mac")) {
    c.mac = parse_mac(doc.at("mac"));
    if (!doc.at("mac").contains("total_updates")) c.mac.total_updates = budget;
  }
  if (doc.contains("ppgae")) {
    c.ppgae = parse_ppgae(doc.at("ppgae"));
    if (!doc.at("ppgae").contains("total_budget")) c.ppgae.total_budget = budget;
  }
  c.mac.max_episodes = c.episodes;
  c.ppgae.max_episodes = c.episodes;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_config_from_json(doc, path.parent_path());
}

ExperimentConfig gridworld_mac_config() {
  ExperimentConfig c;
  c.algorithm = Algorithm::kMac;
  c.mac.t_max = 4;
  c.mac.actor_scale = 1000.0;
  c.mac.critic_scale = 10.0;
  c.mac.actor_offset = 1000;
  c.mac.total_updates = static_cast<long>(c.episodes) * c.env.grid.step_limit;
  c.mac.max_episodes = c.episodes;
  c.output_path = "mac.csv";
  return c;
}

ExperimentConfig gridworld_ppgae_config() {
  ExperimentConfig c;
  c.algorithm = Algorithm::kPpgae;
  c.ppgae.epoch_len = 25;
  c.ppgae.adv_window = 1;
  c.ppgae.total_budget = static_cast<long>(c.episodes) * c.env.grid.step_limit;
  c.ppgae.max_episodes = c.episodes;
  c.output_path = "ppgae.csv";
  return c;
}

// ---------------------------------------------------------------------------
// Running

EpisodicEnvironment make_environment(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.env.kind == EnvConfig::Kind::kGridworld)
    return EpisodicEnvironment::gridworld(config.env.grid);

  TabularMDP mdp = load_mdp(config.env.mdp_path);
  // Separate stream for the start state so the learner's stream is untouched.
  Rng start_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  EpisodeRules rules;
  rules.start_state = static_cast<StateId>(start_rng.categorical(mdp.initial_dist()));
  rules.step_limit = config.env.episode_length;
  rules.reset_on_limit = false;
  return EpisodicEnvironment(std::move(mdp), rules);
}

std::vector<RunRecord> run_trial(const ExperimentConfig& config, int trial) {
  const std::uint64_t seed = config.trial_seed(trial);
  EpisodicEnvironment env = make_environment(config, seed);
  TrainResult result;
  if (config.algorithm == Algorithm::kMac) {
    MacConfig mac = config.mac;
    mac.seed = seed;
    mac.max_episodes = config.episodes;
    result = train_mac(env, one_hot_features(env.model().n_states()), mac);
  } else {
    PpgaeConfig ppgae = config.ppgae;
    ppgae.seed = seed;
    ppgae.max_episodes = config.episodes;
    result = train_ppgae(env, ppgae);
  }
  for (RunRecord& r : result.records) r.trial = trial;
  return std::move(result.records);
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& rows) {
  std::map<int, std::vector<double>> by_episode;
  for (const RunRecord& r : rows) by_episode[r.episode].push_back(r.moving_avg);
  std::vector<SummaryRow> out;
  out.reserve(by_episode.size());
  for (const auto& [episode, values] : by_episode) {
    SummaryRow row;
    row.episode = episode;
    row.n = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / row.n;
    if (row.n > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      const double sd = std::sqrt(ss / (row.n - 1));
      row.ci_half_width = 1.96 * sd / std::sqrt(static_cast<double>(row.n));
    }
    out.push_back(row);
  }
  return out;
}

double tail_mean(const std::vector<SummaryRow>& summary, int count) {
  if (summary.empty() || count < 1) return 0.0;
  const std::size_t n = std::min(summary.size(), static_cast<std::size_t>(count));
  double sum = 0.0;
  for (std::size_t i = summary.size() - n; i < summary.size(); ++i) sum += summary[i].mean;
  return sum / static_cast<double>(n);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::vector<RunRecord>> per_trial(static_cast<std::size_t>(config.n_trials));
  std::vector<std::exception_ptr> errors(per_trial.size());
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int trial = next++; trial < config.n_trials; trial = next++) {
      try {
        per_trial[static_cast<std::size_t>(trial)] = run_trial(config, trial);
      } catch (...) {
        errors[static_cast<std::size_t>(trial)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(config.parallel, config.n_trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult result;
  for (auto& rows : per_trial)
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  result.summary = summarize(result.rows);
  return result;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_run_csv(std::ostream& out, const std::vector<RunRecord>& rows) {
  out << kRunCsvHeader << '\n';
  for (const RunRecord& r : rows) {
    out << r.trial << ',' << r.episode << ',' << (r.success ? 1 : 0) << ','
        << format_real(r.moving_avg) << ',' << r.cumulative_steps << ',' << format_real(r.eta)
        << ',';
    if (r.exact_J) out << format_real(*r.exact_J);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << kSummaryCsvHeader << '\n';
  for (const SummaryRow& row : summary)
    out << row.episode << ',' << row.n << ',' << format_real(row.mean) << ','
        << format_real(row.ci_half_width) << '\n';
}

std::filesystem::path summary_path_for(const std::filesystem::path& run_csv) {
  std::filesystem::path p = run_csv;
  p.replace_extension();
  p += ".summary.csv";
  return p;
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& run_csv) {
  if (run_csv.has_parent_path()) std::filesystem::create_directories(run_csv.parent_path());
  {
    std::ofstream out(run_csv);
    if (!out) throw std::runtime_error("cannot write " + run_csv.string());
    write_run_csv(out, result.rows);
    if (!out) throw std::runtime_error("write failed for " + run_csv.string());
  }
  const auto summary_path = summary_path_for(run_csv);
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("cannot write " + summary_path.string());
  write_summary_csv(out, result.summary);
  if (!out) throw std::runtime_error("write failed for " + summary_path.string());
}

// ---------------------------------------------------------------------------
// Feasibility and validation

std::vector<FeasibilityRow> feasibility_table(double tau_hit, const std::vector<double>& tau_mix) {
  std::vector<FeasibilityRow> rows;
  rows.reserve(tau_mix.size());
  for (double tm : tau_mix) {
    FeasibilityRow row;
    row.tau_mix = tm;
    try {
      row.point = min_feasible_h(tm, tau_hit);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_feasibility_csv(std::ostream& out, const std::vector<FeasibilityRow>& rows) {
  out << kFeasibilityCsvHeader << '\n';
  for (const FeasibilityRow& row : rows)
    if (row.point) out << format_real(row.tau_mix) << ',' << format_real(row.point->h_min) << '\n';
}

MdpDiagnostics validate_mdp_file(const std::filesystem::path& path) {
  const TabularMDP mdp = load_mdp(path);
  const SoftmaxPolicy uniform = SoftmaxPolicy::uniform(mdp.n_states(), mdp.n_actions());
  const ChainAnalysis chain = analyze_chain(mdp, uniform);
  return MdpDiagnostics{mdp.n_states(), mdp.n_actions(), chain.stationary, chain.avg_reward,
                        chain.mixing_time, chain.hitting_time};
}

void print_diagnostics(std::ostream& out, const MdpDiagnostics& diag) {
  out << "states: " << diag.n_states << "\nactions: " << diag.n_actions << "\nd = (";
  for (Eigen::Index s = 0; s < diag.stationary.size(); ++s)
    out << (s ? ", " : "") << format_real(diag.stationary(s));
  out << ")\nJ(uniform) = " << format_real(diag.avg_reward)
      << "\ntau_mix = " << diag.mixing_time << "\ntau_hit = " << format_real(diag.hitting_time)
      << '\n';
}

}  // namespace avgrl
