#include "avgrl/ppgae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "avgrl/errors.hpp"
#include "training_util.hpp"

namespace avgrl {

double theoretical_epoch_length(double total_budget, double tau_mix, double tau_hit) {
  if (!(total_budget >= 2.0)) throw std::invalid_argument("total budget must be at least 2");
  const double log_t = std::log(total_budget);
  return 16.0 * tau_hit * tau_mix * std::sqrt(total_budget) * log_t * log_t;
}

double theoretical_adv_window(double total_budget, double tau_mix) {
  if (!(total_budget >= 2.0)) throw std::invalid_argument("total budget must be at least 2");
  return 4.0 * tau_mix * std::log2(total_budget);
}

long PpgaeConfig::resolved_epoch_len() const {
  if (epoch_len) return *epoch_len;
  const double h = theoretical_epoch_length(static_cast<double>(total_budget), tau_mix_hint,
                                            tau_hit_hint);
  if (!(h < 9.0e18)) throw ConfigError("theoretical epoch length overflows");
  return static_cast<long>(std::ceil(h));
}

int PpgaeConfig::resolved_adv_window() const {
  if (adv_window) return *adv_window;
  return static_cast<int>(
      std::ceil(theoretical_adv_window(static_cast<double>(total_budget), tau_mix_hint)));
}

long PpgaeConfig::epochs() const {
  const long h = resolved_epoch_len();
  const long k = total_budget / h;
  if (k < 1)
    throw ConfigError("PPGAE infeasible: epoch length H = " + std::to_string(h) +
                      " exceeds the sample budget T = " + std::to_string(total_budget) +
                      " (K = T/H < 1)");
  return k;
}

void PpgaeConfig::validate() const {
  if (total_budget < 2) throw ConfigError("ppgae.total_budget must be at least 2");
  if (epoch_len && *epoch_len < 1) throw ConfigError("ppgae.epoch_len must be positive");
  if (adv_window && *adv_window < 1) throw ConfigError("ppgae.adv_window must be positive");
  if (!epoch_len || !adv_window) {
    if (!(tau_mix_hint > 0.0 && tau_hit_hint > 0.0))
      throw ConfigError("theoretical PPGAE settings need positive tau hints");
  }
  if (!std::isfinite(alpha)) throw ConfigError("ppgae.alpha must be finite");
  if (max_episodes && *max_episodes < 1) throw ConfigError("max_episodes must be positive");
  if (resolved_adv_window() < 1) throw ConfigError("advantage window must be positive");
  epochs();
}

FeasibilityPoint min_feasible_h(double tau_mix, double tau_hit) {
  if (!(tau_mix > 0.0 && tau_hit > 0.0)) throw std::invalid_argument("tau values must be positive");
  const double target = 16.0 * tau_hit * tau_mix;
  // In x = ln T the condition reads x/2 - 2 ln x = ln(target); the left side
  // is increasing for x > 4, where sqrt(T)/(ln T)^2 attains its minimum.
  const double log_target = std::log(target);
  auto gap = [&](double x) { return 0.5 * x - 2.0 * std::log(x) - log_target; };
  double lo = 4.0;
  if (gap(lo) > 0.0)
    throw NumericalError("no budget satisfies K = 1: 16 tau_hit tau_mix is below e^2/16");
  double hi = 8.0;
  while (gap(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("min_feasible_h: failed to bracket the root");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  const double t = std::exp(0.5 * (lo + hi));
  return FeasibilityPoint{t, t};
}

namespace {

struct VisitScan {
  std::vector<std::size_t> starts;
  std::vector<double> sums;
};

VisitScan scan_visits(const Trajectory& traj, StateId s, int window) {
  VisitScan scan;
  const auto& tr = traj.transitions;
  if (tr.empty()) return scan;
  const long last = static_cast<long>(tr.size()) - 1;
  long tau = 0;
  while (tau <= last - window) {
    if (tr[static_cast<std::size_t>(tau)].s == s) {
      double y = 0.0;
      for (long t = tau; t < tau + window; ++t) y += tr[static_cast<std::size_t>(t)].r;
      scan.starts.push_back(static_cast<std::size_t>(tau));
      scan.sums.push_back(y);
      tau += 2L * window;
    } else {
      ++tau;
    }
  }
  return scan;
}

double advantage_from_scan(const Trajectory& traj, const VisitScan& scan, ActionId a,
                           double pi) {
  if (scan.starts.empty()) return 0.0;
  const double count = static_cast<double>(scan.starts.size());
  double v_sum = 0.0;
  double q_sum = 0.0;
  for (std::size_t i = 0; i < scan.starts.size(); ++i) {
    v_sum += scan.sums[i];
    if (traj.transitions[scan.starts[i]].a == a) q_sum += scan.sums[i];
  }
  const double q_hat = q_sum / count / std::max(pi, kPolicyFloor);
  return q_hat - v_sum / count;
}

}  // namespace

double estimate_advantage(const Trajectory& traj, StateId s, ActionId a,
                          const SoftmaxPolicy& policy, int window) {
  if (window < 1) throw std::invalid_argument("advantage window must be positive");
  return advantage_from_scan(traj, scan_visits(traj, s, window), a, policy.prob(s, a));
}

Matrix estimate_advantages(const Trajectory& traj, const SoftmaxPolicy& policy, int window) {
  if (window < 1) throw std::invalid_argument("advantage window must be positive");
  Matrix out = Matrix::Zero(policy.n_states(), policy.n_actions());
  for (StateId s = 0; s < policy.n_states(); ++s) {
    const VisitScan scan = scan_visits(traj, s, window);
    if (scan.starts.empty()) continue;
    const Vector p = policy.probs(s);
    for (ActionId a = 0; a < policy.n_actions(); ++a)
      out(s, a) = advantage_from_scan(traj, scan, a, p(a));
  }
  return out;
}

Vector epoch_gradient(const Trajectory& traj, const SoftmaxPolicy& policy, int window) {
  const Matrix adv = estimate_advantages(traj, policy, window);
  Vector grad = Vector::Zero(policy.n_params());
  if (traj.transitions.empty()) return grad;
  const double inv_h = 1.0 / static_cast<double>(traj.size());
  for (const Transition& tr : traj.transitions)
    if (adv(tr.s, tr.a) != 0.0) policy.add_score(tr.s, tr.a, inv_h * adv(tr.s, tr.a), grad);
  return grad;
}

TrainResult train_ppgae(Environment& env, const PpgaeConfig& config) {
  config.validate();
  const long epoch_len = config.resolved_epoch_len();
  const int window = config.resolved_adv_window();
  const long epochs = config.epochs();
  const TabularMDP& model = env.model();

  Rng rng(config.seed);
  SoftmaxPolicy policy = SoftmaxPolicy::uniform(model.n_states(), model.n_actions());
  EpisodeRecorder recorder(env, config.max_episodes);
  TrainResult result;
  double reward_sum = 0.0;
  std::uint64_t samples = 0;

  for (long k = 0; k < epochs && !recorder.done(); ++k) {
    const Trajectory traj = rollout(env, policy, static_cast<int>(epoch_len), rng);
    for (const Transition& tr : traj.transitions) reward_sum += tr.r;
    samples += traj.size();

    const Vector omega = epoch_gradient(traj, policy, window);
    policy.params() += config.alpha * omega;

    // PPGAE has no reward tracker; eta reports the empirical average reward.
    const double eta = reward_sum / static_cast<double>(samples);
    const std::optional<double> j = oracle_average_reward(model, policy);
    recorder.flush(eta, j, result.records);
    result.evals.push_back(
        EvalPoint{k + 1, env.steps(), eta, j, omega.squaredNorm(), config.alpha, 0.0});
    result.updates = k + 1;
  }
  result.final_theta = policy.theta();
  result.final_eta = samples ? reward_sum / static_cast<double>(samples) : 0.0;
  result.env_steps = env.steps();
  return result;
}

}  // namespace avgrl
