#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "avgrl/mdp.hpp"

namespace avgrl {

/// One CSV row per completed episode.
struct RunRecord {
  int trial = 0;
  int episode = 0;
  bool success = false;
  double moving_avg = 0.0;
  std::uint64_t cumulative_steps = 0;
  double eta = 0.0;
  std::optional<double> exact_J;
};

/// Learner snapshot taken every eval_every updates (MAC) or every epoch (PPGAE).
struct EvalPoint {
  long update = 0;
  std::uint64_t cumulative_steps = 0;
  double eta = 0.0;
  std::optional<double> exact_J;
  double grad_norm_sq = 0.0;  // ||h^MLMC||^2 or ||omega_k||^2
  double stepsize = 0.0;
  double accum = 0.0;  // AdaGrad accumulator after the update (MAC only)
};

struct TrainResult {
  std::vector<RunRecord> records;
  std::vector<EvalPoint> evals;
  RowMatrix final_theta;
  Vector final_omega;
  double final_eta = 0.0;
  long updates = 0;
  std::uint64_t env_steps = 0;
};

}  // namespace avgrl
