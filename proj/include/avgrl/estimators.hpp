#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "avgrl/mdp.hpp"
#include "avgrl/rng.hpp"

namespace avgrl {

class EpisodeTracker;

struct Transition {
  StateId s = 0;
  ActionId a = 0;
  double r = 0.0;
  StateId s_next = 0;
};

struct Trajectory {
  std::vector<Transition> transitions;
  std::optional<int> level;  // MLMC level J, absent for plain rollouts

  std::size_t size() const { return transitions.size(); }
  bool chain_consistent() const;
};

/**
 * A live, continuing chain the learners sample from.
 *
 * Every environment here is tabular underneath, so `model()` always exposes
 * the TabularMDP used for oracle evaluation. Implementations may add
 * bookkeeping (episode counters, teleports) on top of the raw dynamics.
 */
class Environment {
public:
  virtual ~Environment() = default;

  virtual const TabularMDP& model() const = 0;
  virtual StateId state() const = 0;
  /// Executes `action` in the current state; consumes one uniform from `rng`.
  virtual Transition step(ActionId action, Rng& rng) = 0;
  /// Re-seats the chain, e.g. to a fresh draw from the initial distribution.
  virtual void reset(StateId s) = 0;
  /// Environment steps consumed so far.
  virtual std::uint64_t steps() const = 0;
  /// Episode bookkeeping, for environments that have episodes.
  virtual const EpisodeTracker* episodes() const { return nullptr; }
};

/// The raw continuing chain of a TabularMDP.
class ChainEnvironment final : public Environment {
public:
  ChainEnvironment(TabularMDP mdp, StateId start);

  const TabularMDP& model() const override { return mdp_; }
  StateId state() const override { return state_; }
  Transition step(ActionId action, Rng& rng) override;
  void reset(StateId s) override;
  std::uint64_t steps() const override { return steps_; }

private:
  TabularMDP mdp_;
  StateId state_;
  std::uint64_t steps_ = 0;
};

/// Samples a ~ pi(.|s) then s' ~ P(.|s, a), in that order, one uniform each.
Transition sample_transition(Environment& env, const SoftmaxPolicy& policy, Rng& rng);

Trajectory rollout(const TabularMDP& mdp, const SoftmaxPolicy& policy, StateId start_state,
                   int length, Rng& rng);
/// Continues the live chain of `env` for `length` steps.
Trajectory rollout(Environment& env, const SoftmaxPolicy& policy, int length, Rng& rng);

/// Linear critic features phi(s), stored as rows of an n_states x m matrix.
class FeatureMap {
public:
  /// Rejects any row with norm above 1.
  explicit FeatureMap(Matrix features);

  int n_states() const { return static_cast<int>(features_.rows()); }
  int dim() const { return static_cast<int>(features_.cols()); }
  auto operator()(StateId s) const { return features_.row(s); }
  double value(StateId s, const Vector& omega) const;
  const Matrix& matrix() const { return features_; }

private:
  Matrix features_;
};

struct LearnerState {
  SoftmaxPolicy policy;
  Vector omega;
  double eta = 0.0;
  long t = 0;
  double h_norm_accum = 0.0;
  double g_norm_accum = 0.0;
  StateId current_state = 0;

  /// theta = 0, omega = 0, eta = 0.
  static LearnerState initial(int n_states, int n_actions, int feature_dim, StateId start);
};

struct MlmcConfig {
  int t_max = 4;
  std::uint64_t rng_seed = 0;

  /// floor(log2 t_max); throws std::invalid_argument unless t_max >= 2.
  int j_max() const;
  void validate() const;
};

/// delta = r - eta + <phi(s') - phi(s), omega>.
double td_error(const Transition& tr, double eta, const Vector& omega, const FeatureMap& phi);

struct StepGradients {
  double f = 0.0;  // reward tracker: eta - r
  Vector g;        // critic: -delta * phi(s), a descent direction for omega
  Vector h;        // actor: delta * grad log pi(a|s)
};

StepGradients step_gradients(const Transition& tr, const LearnerState& state,
                             const FeatureMap& phi);

using PerStepGradient = std::function<Vector(const Transition&)>;

struct MlmcEstimate {
  Vector estimate;
  Trajectory trajectory;
  int level = 0;
};

/// Draws J ~ Geom(1/2) and collects 2^J transitions if 2^J <= t_max, else 1.
Trajectory draw_mlmc_trajectory(Environment& env, const SoftmaxPolicy& policy,
                                const MlmcConfig& config, Rng& rng);

/// h^0 + 2^J (h^J - h^{J-1}) when the trajectory holds 2^J samples, else
/// h^0, where h^j averages `per_step` over the first 2^j transitions.
Vector mlmc_combine(const Trajectory& trajectory, const MlmcConfig& config,
                    const PerStepGradient& per_step);

/// Full estimator: draws a level, continues the chain from env's current
/// state, and advances state.current_state to where the trajectory ends.
MlmcEstimate mlmc_estimate(const PerStepGradient& per_step, Environment& env,
                           LearnerState& state, const MlmcConfig& config, Rng& rng);

inline constexpr double kAdagradGuard = 1e-8;

struct AdagradStep {
  double alpha = 0.0;
  double new_accum = 0.0;
};

/// new_accum = accum + raw_norm_sq; alpha = (1+t)^-sigma / (sqrt(new_accum) + guard).
AdagradStep adagrad_step(double accum, double raw_norm_sq, long t, double sigma);

/// gamma_t = (1 + t)^-nu.
double tracking_stepsize(long t, double nu);

}  // namespace avgrl
