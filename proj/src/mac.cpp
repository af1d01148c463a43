#include "avgrl/mac.hpp"

#include <algorithm>
#include <cmath>

#include "avgrl/envs.hpp"
#include "avgrl/errors.hpp"
#include "training_util.hpp"

namespace avgrl {

void MacConfig::validate() const {
  if (t_max < 2) throw ConfigError("mac.t_max must be at least 2");
  if (total_updates < 1) throw ConfigError("mac.total_updates must be positive");
  if (!(0.0 < nu && nu < sigma && sigma < 1.0))
    throw ConfigError("mac step sizes need 0 < nu < sigma < 1");
  if (!(r_omega > 0.0)) throw ConfigError("mac.r_omega must be positive");
  if (eval_every < 1) throw ConfigError("mac.eval_every must be positive");
  if (!(critic_sigma >= 0.0 && critic_sigma < 1.0))
    throw ConfigError("mac.critic_sigma must be in [0, 1)");
  if (actor_offset < 0) throw ConfigError("mac.actor_offset must be non-negative");
  if (!(critic_scale > 0.0) || !(actor_scale > 0.0))
    throw ConfigError("mac step-size scales must be positive");
  if (max_episodes && *max_episodes < 1) throw ConfigError("max_episodes must be positive");
}

void project_to_ball(Vector& omega, double radius) {
  const double norm = omega.norm();
  if (norm > radius) omega *= radius / norm;
}

StepMetrics mac_update(LearnerState& state, Environment& env, const FeatureMap& phi,
                       const MacConfig& config, Rng& rng) {
  if (phi.n_states() != env.model().n_states() || state.omega.size() != phi.dim())
    throw DimensionError("learner state does not match features or environment");
  if (config.resample_start)
    env.reset(static_cast<StateId>(rng.categorical(env.model().initial_dist())));

  const MlmcConfig mlmc = config.mlmc();
  const Trajectory traj = draw_mlmc_trajectory(env, state.policy, mlmc, rng);

  // f, g and h share one trajectory; stack them so a single MLMC pass
  // produces all three estimates.
  const Eigen::Index m = phi.dim();
  const Eigen::Index q = state.policy.n_params();
  double td_sum = 0.0;
  const PerStepGradient stacked = [&](const Transition& tr) {
    const StepGradients grads = step_gradients(tr, state, phi);
    Vector out(1 + m + q);
    out(0) = grads.f;
    out.segment(1, m) = grads.g;
    out.segment(1 + m, q) = grads.h;
    td_sum += td_error(tr, state.eta, state.omega, phi);
    return out;
  };
  const Vector estimate = mlmc_combine(traj, mlmc, stacked);
  const double f = estimate(0);
  const Vector g = estimate.segment(1, m);
  const Vector h = estimate.segment(1 + m, q);

  StepMetrics metrics;
  metrics.level = *traj.level;
  metrics.samples = static_cast<int>(traj.size());
  metrics.f = f;
  metrics.g_norm_sq = g.squaredNorm();
  metrics.h_norm_sq = h.squaredNorm();
  metrics.mean_td = td_sum / static_cast<double>(traj.size());

  metrics.gamma = tracking_stepsize(state.t, config.nu);
  const AdagradStep critic =
      adagrad_step(state.g_norm_accum, metrics.g_norm_sq, state.t, config.critic_sigma);
  const AdagradStep actor =
      adagrad_step(state.h_norm_accum, metrics.h_norm_sq, state.t + config.actor_offset, config.sigma);
  metrics.beta = config.critic_scale * critic.alpha;
  metrics.alpha = config.actor_scale * actor.alpha;

  state.eta = std::clamp(state.eta - metrics.gamma * f, 0.0, env.model().r_max());
  state.omega -= metrics.beta * g;
  project_to_ball(state.omega, config.r_omega);
  state.g_norm_accum = critic.new_accum;
  if (config.update_actor) {
    state.policy.params() += metrics.alpha * h;
    state.h_norm_accum = actor.new_accum;
  }
  ++state.t;
  state.current_state = env.state();
  metrics.eta = state.eta;
  return metrics;
}

TrainResult train_mac(Environment& env, const FeatureMap& phi, const MacConfig& config) {
  config.validate();
  const TabularMDP& model = env.model();
  Rng rng(config.seed);
  LearnerState state =
      LearnerState::initial(model.n_states(), model.n_actions(), phi.dim(), env.state());

  TrainResult result;
  EpisodeRecorder recorder(env, config.max_episodes);
  for (long u = 0; u < config.total_updates && !recorder.done(); ++u) {
    const StepMetrics metrics = mac_update(state, env, phi, config, rng);
    const bool eval_now = (u + 1) % config.eval_every == 0;
    std::optional<double> j;
    if (eval_now || recorder.pending()) j = oracle_average_reward(model, state.policy);
    recorder.flush(state.eta, j, result.records);
    if (eval_now) {
      result.evals.push_back(EvalPoint{state.t, env.steps(), state.eta, j, metrics.h_norm_sq,
                                       metrics.alpha, state.h_norm_accum});
    }
  }
  result.final_theta = state.policy.theta();
  result.final_omega = state.omega;
  result.final_eta = state.eta;
  result.updates = state.t;
  result.env_steps = env.steps();
  return result;
}

}  // namespace avgrl
