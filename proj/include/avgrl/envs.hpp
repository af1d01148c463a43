#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "avgrl/estimators.hpp"
#include "avgrl/mdp.hpp"
#include "avgrl/rng.hpp"

namespace avgrl {

enum GridAction : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// Sparse goal-reaching gridworld. Cells are indexed row * width + col with
/// the start in the top-left corner and the goal in the bottom-right.
struct GridworldSpec {
  int width = 5;
  int height = 5;
  int step_limit = 25;
  double goal_reward = 1.0;
  double step_reward = 0.0;
  // With probability slip_prob the intended action is replaced by a
  // uniformly random one (which may coincide with the intent).
  double slip_prob = 0.0;

  StateId start_state() const { return 0; }
  StateId goal_state() const { return width * height - 1; }
  StateId cell(int row, int col) const { return row * width + col; }
  void validate() const;
};

/// Exact-analysis encoding: moving into a wall keeps position, entering the
/// goal pays goal_reward, and every action from the goal leads to the start.
/// The episode step limit is not part of this MDP.
TabularMDP gridworld_as_mdp(const GridworldSpec& spec);

/// Dirichlet(alpha) transition rows, uniform [0, 1) rewards, r_max = 1.
/// An infinite alpha yields exactly uniform rows.
TabularMDP random_ergodic_mdp(int n_states, int n_actions, Rng& rng, double dirichlet_alpha = 1.0);

FeatureMap one_hot_features(int n_states);

struct EpisodeStats {
  int episode_index = 0;
  bool success = false;
  int steps_used = 0;
  std::uint64_t cumulative_steps = 0;  // stream position at the episode's end
};

inline constexpr int kMovingAverageWindow = 20;

/// Splits a continuing transition stream into episodes that end at the
/// goal or at the step limit.
class EpisodeTracker {
public:
  explicit EpisodeTracker(int step_limit, int window = kMovingAverageWindow);

  /// Call once per transition; returns the episode it closed, if any.
  std::optional<EpisodeStats> record(bool reached_goal);

  const std::vector<EpisodeStats>& episodes() const { return episodes_; }
  /// moving_averages()[k] is the success rate over episodes k-W+1 .. k.
  const std::vector<double>& moving_averages() const { return moving_averages_; }
  int steps_in_episode() const { return steps_; }
  int step_limit() const { return step_limit_; }

private:
  int step_limit_;
  int window_;
  int steps_ = 0;
  std::uint64_t total_steps_ = 0;
  int window_successes_ = 0;
  std::vector<EpisodeStats> episodes_;
  std::vector<double> moving_averages_;
};

/// Moving success rate over a trailing window (shorter at the start).
std::vector<double> moving_average(const std::vector<EpisodeStats>& episodes,
                                   int window = kMovingAverageWindow);

struct EpisodeRules {
  StateId start_state = 0;
  std::optional<StateId> goal;
  int step_limit = 25;
  // Teleport to start when the step limit runs out. Entering the goal
  // always teleports.
  bool reset_on_limit = true;
};

/**
 * Continuing chain with episode bookkeeping on top.
 *
 * Entering the goal closes a successful episode and the transition lands on
 * the start state instead of the goal, so the goal cell is never occupied
 * while training. Running out of steps closes a failed episode.
 */
class EpisodicEnvironment final : public Environment {
public:
  EpisodicEnvironment(TabularMDP mdp, EpisodeRules rules,
                      int window = kMovingAverageWindow);
  static EpisodicEnvironment gridworld(const GridworldSpec& spec);

  const TabularMDP& model() const override { return mdp_; }
  StateId state() const override { return state_; }
  Transition step(ActionId action, Rng& rng) override;
  void reset(StateId s) override;
  std::uint64_t steps() const override { return steps_; }
  const EpisodeTracker* episodes() const override { return &tracker_; }

  const EpisodeTracker& tracker() const { return tracker_; }
  std::size_t completed_episodes() const { return tracker_.episodes().size(); }
  const EpisodeRules& rules() const { return rules_; }

private:
  TabularMDP mdp_;
  EpisodeRules rules_;
  EpisodeTracker tracker_;
  StateId state_;
  std::uint64_t steps_ = 0;
};

}  // namespace avgrl
