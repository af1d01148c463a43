#pragma once

#include <optional>
#include <vector>

#include "avgrl/envs.hpp"
#include "avgrl/errors.hpp"
#include "avgrl/records.hpp"

namespace avgrl {

/// Exact J(theta) when the induced chain is analyzable, otherwise absent.
inline std::optional<double> oracle_average_reward(const TabularMDP& mdp,
                                                   const SoftmaxPolicy& policy) {
  try {
    return average_reward(mdp, policy);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

/// Turns newly closed episodes of an environment into RunRecords.
class EpisodeRecorder {
public:
  EpisodeRecorder(const Environment& env, std::optional<int> max_episodes)
      : tracker_(env.episodes()), max_episodes_(max_episodes) {}

  bool pending() const { return tracker_ && tracker_->episodes().size() > emitted_; }

  bool done() const {
    return tracker_ && max_episodes_ && emitted_ >= static_cast<std::size_t>(*max_episodes_);
  }

  void flush(double eta, std::optional<double> exact_j, std::vector<RunRecord>& out) {
    if (!tracker_) return;
    const auto& episodes = tracker_->episodes();
    const auto& averages = tracker_->moving_averages();
    for (; emitted_ < episodes.size() && !done(); ++emitted_) {
      const EpisodeStats& ep = episodes[emitted_];
      out.push_back(RunRecord{0, ep.episode_index, ep.success, averages[emitted_],
                              ep.cumulative_steps, eta, exact_j});
    }
  }

private:
  const EpisodeTracker* tracker_;
  std::optional<int> max_episodes_;
  std::size_t emitted_ = 0;
};

}  // namespace avgrl
