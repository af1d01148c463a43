#include "avgrl/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "avgrl/errors.hpp"

namespace avgrl {

bool Trajectory::chain_consistent() const {
  for (std::size_t i = 1; i < transitions.size(); ++i)
    if (transitions[i - 1].s_next != transitions[i].s) return false;
  return true;
}

// ---------------------------------------------------------------------------

ChainEnvironment::ChainEnvironment(TabularMDP mdp, StateId start)
    : mdp_(std::move(mdp)), state_(start) {
  reset(start);
}

Transition ChainEnvironment::step(ActionId action, Rng& rng) {
  Transition tr;
  tr.s = state_;
  tr.a = action;
  tr.r = mdp_.reward(state_, action);
  tr.s_next = static_cast<StateId>(rng.categorical(mdp_.transition_row(state_, action)));
  state_ = tr.s_next;
  ++steps_;
  return tr;
}

void ChainEnvironment::reset(StateId s) {
  if (s < 0 || s >= mdp_.n_states()) throw std::out_of_range("start state out of range");
  state_ = s;
}

Transition sample_transition(Environment& env, const SoftmaxPolicy& policy, Rng& rng) {
  const auto action = static_cast<ActionId>(rng.categorical(policy.probs(env.state())));
  return env.step(action, rng);
}

Trajectory rollout(Environment& env, const SoftmaxPolicy& policy, int length, Rng& rng) {
  if (length < 1) throw std::invalid_argument("rollout length must be at least 1");
  Trajectory traj;
  traj.transitions.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) traj.transitions.push_back(sample_transition(env, policy, rng));
  return traj;
}

Trajectory rollout(const TabularMDP& mdp, const SoftmaxPolicy& policy, StateId start_state,
                   int length, Rng& rng) {
  ChainEnvironment env(mdp, start_state);
  return rollout(env, policy, length, rng);
}

// ---------------------------------------------------------------------------

FeatureMap::FeatureMap(Matrix features) : features_(std::move(features)) {
  for (Eigen::Index s = 0; s < features_.rows(); ++s)
    if (features_.row(s).norm() > 1.0 + 1e-12)
      throw std::invalid_argument("feature vector of state " + std::to_string(s) +
                                  " has norm above 1");
}

double FeatureMap::value(StateId s, const Vector& omega) const {
  if (omega.size() != dim()) throw DimensionError("critic weights do not match feature dimension");
  return features_.row(s).dot(omega);
}

LearnerState LearnerState::initial(int n_states, int n_actions, int feature_dim, StateId start) {
  return LearnerState{SoftmaxPolicy::uniform(n_states, n_actions), Vector::Zero(feature_dim), 0.0,
                      0, 0.0, 0.0, start};
}

int MlmcConfig::j_max() const {
  validate();
  int j = 0;
  while ((2LL << j) <= t_max) ++j;
  return j;
}

void MlmcConfig::validate() const {
  if (t_max < 2) throw std::invalid_argument("t_max must be at least 2");
}

// ---------------------------------------------------------------------------

double td_error(const Transition& tr, double eta, const Vector& omega, const FeatureMap& phi) {
  if (omega.size() != phi.dim())
    throw DimensionError("critic weights have dimension " + std::to_string(omega.size()) +
                         ", features have " + std::to_string(phi.dim()));
  return tr.r - eta + (phi(tr.s_next) - phi(tr.s)).dot(omega);
}

StepGradients step_gradients(const Transition& tr, const LearnerState& state,
                             const FeatureMap& phi) {
  const double delta = td_error(tr, state.eta, state.omega, phi);
  StepGradients out;
  out.f = state.eta - tr.r;
  out.g = -delta * phi(tr.s).transpose();
  out.h = Vector::Zero(state.policy.n_params());
  state.policy.add_score(tr.s, tr.a, delta, out.h);
  return out;
}

// ---------------------------------------------------------------------------

Trajectory draw_mlmc_trajectory(Environment& env, const SoftmaxPolicy& policy,
                                const MlmcConfig& config, Rng& rng) {
  config.validate();
  const int level = rng.geometric_half();
  // 2^J > t_max only needs h^0; levels beyond 62 cannot be represented and
  // always exceed t_max.
  const bool corrected = level < 62 && (1LL << level) <= config.t_max;
  Trajectory traj = rollout(env, policy, corrected ? (1 << level) : 1, rng);
  traj.level = level;
  return traj;
}

Vector mlmc_combine(const Trajectory& trajectory, const MlmcConfig& config,
                    const PerStepGradient& per_step) {
  if (trajectory.transitions.empty()) throw std::invalid_argument("empty MLMC trajectory");
  Vector h0 = per_step(trajectory.transitions.front());
  const int level = trajectory.level.value_or(0);
  const bool corrected = level >= 1 && level < 62 && (1LL << level) <= config.t_max;
  if (!corrected) return h0;

  const std::size_t n = std::size_t{1} << level;
  if (trajectory.size() != n)
    throw std::invalid_argument("MLMC trajectory length does not match its level");

  // Prefix sums give h^{J-1} (first half) and h^J (all) in one pass.
  Vector first_half = h0;
  for (std::size_t i = 1; i < n / 2; ++i) first_half += per_step(trajectory.transitions[i]);
  Vector total = first_half;
  for (std::size_t i = n / 2; i < n; ++i) total += per_step(trajectory.transitions[i]);

  const double scale = static_cast<double>(n);
  const Vector fine = total / scale;
  const Vector coarse = first_half / (scale / 2.0);
  return h0 + scale * (fine - coarse);
}

MlmcEstimate mlmc_estimate(const PerStepGradient& per_step, Environment& env,
                           LearnerState& state, const MlmcConfig& config, Rng& rng) {
  MlmcEstimate out;
  out.trajectory = draw_mlmc_trajectory(env, state.policy, config, rng);
  out.level = *out.trajectory.level;
  out.estimate = mlmc_combine(out.trajectory, config, per_step);
  state.current_state = env.state();
  return out;
}

// ---------------------------------------------------------------------------

AdagradStep adagrad_step(double accum, double raw_norm_sq, long t, double sigma) {
  if (accum < 0.0 || raw_norm_sq < 0.0)
    throw std::invalid_argument("AdaGrad accumulator inputs must be non-negative");
  AdagradStep out;
  out.new_accum = accum + raw_norm_sq;
  out.alpha = std::pow(1.0 + static_cast<double>(t), -sigma) /
              (std::sqrt(out.new_accum) + kAdagradGuard);
  return out;
}

double tracking_stepsize(long t, double nu) {
  if (t < 0) throw std::invalid_argument("t must be non-negative");
  return std::pow(1.0 + static_cast<double>(t), -nu);
}

}  // namespace avgrl
