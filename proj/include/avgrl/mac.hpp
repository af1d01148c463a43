#pragma once

#include <cstdint>
#include <optional>

#include "avgrl/estimators.hpp"
#include "avgrl/records.hpp"

namespace avgrl {

struct MacConfig {
  int t_max = 4;
  long total_updates = 1000;
  double nu = 0.5;      // tracker: gamma_t = (1+t)^-nu
  double sigma = 0.75;  // actor:   alpha_t = actor_scale (1+t0+t)^-sigma / sqrt(sum ||h||^2)
  double r_omega = 100.0;
  std::uint64_t seed = 0;
  int eval_every = 1;

  // Critic: beta_t = critic_scale (1+t)^-critic_sigma / sqrt(sum ||g||^2).
  double critic_sigma = 0.5;
  double critic_scale = 1.0;
  double actor_scale = 1.0;
  // Shifts the actor schedule to (1 + actor_offset + t)^-sigma.
  long actor_offset = 0;

  bool update_actor = true;
  // Re-draw the chain's start from the initial distribution before every
  // update instead of continuing the chain.
  bool resample_start = false;
  // Stop once this many episodes have completed (episodic environments).
  std::optional<int> max_episodes;

  /// Throws ConfigError.
  void validate() const;
  MlmcConfig mlmc() const { return MlmcConfig{t_max, seed}; }
};

struct StepMetrics {
  int level = 0;
  int samples = 0;
  double f = 0.0;
  double g_norm_sq = 0.0;
  double h_norm_sq = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  double mean_td = 0.0;
  double eta = 0.0;
};

/// Euclidean projection onto the ball of the given radius.
void project_to_ball(Vector& omega, double radius);

/**
 * One MAC iteration: draw a level, collect one trajectory from the live
 * chain, form f/g/h MLMC estimates over the same transitions with
 * theta, omega and eta frozen, then update
 *
 *   eta   <- clamp(eta - gamma_t f, 0, r_max)
 *   omega <- Proj(omega - beta_t g)
 *   theta <- theta + alpha_t h
 */
StepMetrics mac_update(LearnerState& state, Environment& env, const FeatureMap& phi,
                       const MacConfig& config, Rng& rng);

TrainResult train_mac(Environment& env, const FeatureMap& phi, const MacConfig& config);

}  // namespace avgrl
