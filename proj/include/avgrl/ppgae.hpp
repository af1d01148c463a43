#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "avgrl/estimators.hpp"
#include "avgrl/records.hpp"

namespace avgrl {

struct PpgaeConfig {
  long total_budget = 7500;
  // Unset means "use the theoretical formula" from the mixing/hitting hints.
  std::optional<long> epoch_len = 25;
  std::optional<int> adv_window = 1;
  double alpha = 0.1;
  double tau_mix_hint = 1.0;
  double tau_hit_hint = 1.0;
  std::uint64_t seed = 0;
  std::optional<int> max_episodes;

  /// Explicit H, or ceil(16 tau_hit tau_mix sqrt(T) (ln T)^2).
  long resolved_epoch_len() const;
  /// Explicit N, or ceil(4 tau_mix log2 T).
  int resolved_adv_window() const;
  /// K = floor(T / H); throws ConfigError when K < 1.
  long epochs() const;
  void validate() const;
};

/// 16 tau_hit tau_mix sqrt(T) (ln T)^2.
double theoretical_epoch_length(double total_budget, double tau_mix, double tau_hit);
/// 4 tau_mix log2(T).
double theoretical_adv_window(double total_budget, double tau_mix);

struct FeasibilityPoint {
  double t_min = 0.0;
  double h_min = 0.0;
};

/// Larger root of sqrt(T) / (ln T)^2 = 16 tau_hit tau_mix, i.e. the budget at
/// which a single epoch of theoretical length exhausts it (K = 1, H = T).
/// Throws NumericalError when the equation has no root.
FeasibilityPoint min_feasible_h(double tau_mix, double tau_hit);

inline constexpr double kPolicyFloor = 1e-8;

/// Sub-trajectory advantage estimate for (s, a): scans for visits to s with
/// at least N steps left, sums the next N rewards, then jumps 2N steps.
/// Returns Q_hat - V_hat, or 0 when s is never visited.
double estimate_advantage(const Trajectory& traj, StateId s, ActionId a,
                          const SoftmaxPolicy& policy, int window);

/// estimate_advantage for every (s, a) pair at once.
Matrix estimate_advantages(const Trajectory& traj, const SoftmaxPolicy& policy, int window);

/// omega_k = (1/H) sum_t A_hat(s_t, a_t) grad log pi(a_t|s_t).
Vector epoch_gradient(const Trajectory& traj, const SoftmaxPolicy& policy, int window);

TrainResult train_ppgae(Environment& env, const PpgaeConfig& config);

}  // namespace avgrl
