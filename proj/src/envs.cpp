#include "avgrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "avgrl/errors.hpp"

namespace avgrl {

void GridworldSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("gridworld dimensions must be positive");
  if (width * height < 2) throw ConfigError("gridworld start and goal must differ");
  if (step_limit < 1) throw ConfigError("step_limit must be at least 1");
  if (!(slip_prob >= 0.0 && slip_prob < 0.5)) throw ConfigError("slip_prob must be in [0, 0.5)");
  if (goal_reward < 0.0 || step_reward < 0.0 || std::max(goal_reward, step_reward) <= 0.0)
    throw ConfigError("gridworld rewards must be non-negative with a positive maximum");
}

TabularMDP gridworld_as_mdp(const GridworldSpec& spec) {
  spec.validate();
  const int ns = spec.width * spec.height;
  constexpr int na = 4;
  const StateId goal = spec.goal_state();
  const StateId start = spec.start_state();

  auto move = [&](StateId s, int action) {
    int row = s / spec.width;
    int col = s % spec.width;
    switch (action) {
      case kUp: row = std::max(row - 1, 0); break;
      case kDown: row = std::min(row + 1, spec.height - 1); break;
      case kLeft: col = std::max(col - 1, 0); break;
      case kRight: col = std::min(col + 1, spec.width - 1); break;
    }
    return spec.cell(row, col);
  };

  RowMatrix transition = RowMatrix::Zero(static_cast<Eigen::Index>(ns) * na, ns);
  Matrix reward = Matrix::Zero(ns, na);
  for (StateId s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      auto row = transition.row(static_cast<Eigen::Index>(s) * na + a);
      if (s == goal) {
        row(start) = 1.0;
        reward(s, a) = spec.step_reward;
        continue;
      }
      for (int actual = 0; actual < na; ++actual) {
        const double p = (actual == a ? 1.0 - spec.slip_prob : 0.0) + spec.slip_prob / na;
        if (p > 0.0) row(move(s, actual)) += p;
      }
      const double p_goal = row(goal);
      reward(s, a) = p_goal * spec.goal_reward + (1.0 - p_goal) * spec.step_reward;
    }
  }
  Vector initial = Vector::Zero(ns);
  initial(start) = 1.0;
  return TabularMDP(ns, na, std::move(transition), std::move(reward), std::move(initial),
                    std::max(spec.goal_reward, spec.step_reward));
}

TabularMDP random_ergodic_mdp(int n_states, int n_actions, Rng& rng, double dirichlet_alpha) {
  if (n_states < 2) throw std::invalid_argument("random MDP needs at least 2 states");
  if (n_actions < 1) throw std::invalid_argument("random MDP needs at least 1 action");
  if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("dirichlet_alpha must be positive");

  const Eigen::Index rows = static_cast<Eigen::Index>(n_states) * n_actions;
  RowMatrix transition(rows, n_states);
  if (std::isinf(dirichlet_alpha)) {
    transition.setConstant(1.0 / n_states);
  } else {
    std::gamma_distribution<double> gamma(dirichlet_alpha, 1.0);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (int c = 0; c < n_states; ++c)
        transition(r, c) = std::max(gamma(rng.engine()), std::numeric_limits<double>::min());
      transition.row(r) /= transition.row(r).sum();
    }
  }
  Matrix reward(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) reward(s, a) = rng.uniform();
  Vector initial = Vector::Constant(n_states, 1.0 / n_states);
  return TabularMDP(n_states, n_actions, std::move(transition), std::move(reward),
                    std::move(initial), 1.0);
}

FeatureMap one_hot_features(int n_states) {
  return FeatureMap(Matrix::Identity(n_states, n_states));
}

// ---------------------------------------------------------------------------

EpisodeTracker::EpisodeTracker(int step_limit, int window) : step_limit_(step_limit), window_(window) {
  if (step_limit < 1) throw std::invalid_argument("step_limit must be at least 1");
  if (window < 1) throw std::invalid_argument("moving-average window must be at least 1");
}

std::optional<EpisodeStats> EpisodeTracker::record(bool reached_goal) {
  ++steps_;
  ++total_steps_;
  if (!reached_goal && steps_ < step_limit_) return std::nullopt;

  EpisodeStats stats{static_cast<int>(episodes_.size()), reached_goal, steps_, total_steps_};
  episodes_.push_back(stats);
  steps_ = 0;

  window_successes_ += reached_goal ? 1 : 0;
  const auto count = static_cast<int>(episodes_.size());
  if (count > window_ && episodes_[count - 1 - window_].success) --window_successes_;
  moving_averages_.push_back(static_cast<double>(window_successes_) / std::min(count, window_));
  return stats;
}

std::vector<double> moving_average(const std::vector<EpisodeStats>& episodes, int window) {
  if (window < 1) throw std::invalid_argument("moving-average window must be at least 1");
  std::vector<double> out;
  out.reserve(episodes.size());
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const std::size_t first = k + 1 >= static_cast<std::size_t>(window) ? k + 1 - window : 0;
    int hits = 0;
    for (std::size_t i = first; i <= k; ++i) hits += episodes[i].success ? 1 : 0;
    out.push_back(static_cast<double>(hits) / static_cast<double>(k + 1 - first));
  }
  return out;
}

// ---------------------------------------------------------------------------

EpisodicEnvironment::EpisodicEnvironment(TabularMDP mdp, EpisodeRules rules, int window)
    : mdp_(std::move(mdp)), rules_(rules), tracker_(rules.step_limit, window), state_(rules.start_state) {
  if (rules_.goal && (*rules_.goal < 0 || *rules_.goal >= mdp_.n_states()))
    throw std::out_of_range("goal state out of range");
  reset(rules_.start_state);
}

EpisodicEnvironment EpisodicEnvironment::gridworld(const GridworldSpec& spec) {
  EpisodeRules rules;
  rules.start_state = spec.start_state();
  rules.goal = spec.goal_state();
  rules.step_limit = spec.step_limit;
  rules.reset_on_limit = true;
  return EpisodicEnvironment(gridworld_as_mdp(spec), rules);
}

Transition EpisodicEnvironment::step(ActionId action, Rng& rng) {
  Transition tr;
  tr.s = state_;
  tr.a = action;
  tr.r = mdp_.reward(state_, action);
  tr.s_next = static_cast<StateId>(rng.categorical(mdp_.transition_row(state_, action)));
  ++steps_;

  const bool reached_goal = rules_.goal && tr.s_next == *rules_.goal;
  const bool out_of_steps = tracker_.steps_in_episode() + 1 >= rules_.step_limit;
  if (reached_goal || (out_of_steps && rules_.reset_on_limit)) tr.s_next = rules_.start_state;
  tracker_.record(reached_goal);
  state_ = tr.s_next;
  return tr;
}

void EpisodicEnvironment::reset(StateId s) {
  if (s < 0 || s >= mdp_.n_states()) throw std::out_of_range("start state out of range");
  state_ = s;
}

}  // namespace avgrl
