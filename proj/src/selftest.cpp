#include "avgrl/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "avgrl/envs.hpp"
#include "avgrl/estimators.hpp"
#include "avgrl/mdp.hpp"
#include "avgrl/ppgae.hpp"

namespace avgrl {

namespace {

std::string fmt(const char* label, double value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s = %.3e", label, value);
  return buf;
}

SoftmaxPolicy random_policy(int n_states, int n_actions, Rng& rng, double scale) {
  RowMatrix theta(n_states, n_actions);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  return SoftmaxPolicy(std::move(theta));
}

SelftestResult check_gradient(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const TabularMDP mdp = random_ergodic_mdp(4, 3, rng);
    SoftmaxPolicy policy = random_policy(4, 3, rng, 1.0);
    const Vector grad = exact_policy_gradient(mdp, policy);
    Vector fd(grad.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      SoftmaxPolicy plus = policy, minus = policy;
      plus.params()(i) += h;
      minus.params()(i) -= h;
      fd(i) = (average_reward(mdp, plus) - average_reward(mdp, minus)) / (2.0 * h);
    }
    worst = std::max(worst, (fd - grad).norm() / std::max(fd.norm(), 1e-12));
  }
  return {"policy gradient matches finite differences", worst < 1e-5, fmt("max rel err", worst)};
}

SelftestResult check_performance_difference(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const TabularMDP mdp = random_ergodic_mdp(5, 3, rng);
    const auto diff = performance_difference(mdp, random_policy(5, 3, rng, 2.0),
                                             random_policy(5, 3, rng, 2.0));
    worst = std::max(worst, std::abs(diff.lhs - diff.rhs));
  }
  return {"performance difference identity", worst < 1e-9, fmt("max |lhs - rhs|", worst)};
}

SelftestResult check_mixing() {
  Matrix uniform = Matrix::Constant(4, 4, 0.25);
  const int tau_uniform = mixing_time_of_chain(uniform).tau;
  Matrix lazy(2, 2);
  lazy << 0.95, 0.05, 0.05, 0.95;
  const int tau_lazy = mixing_time_of_chain(lazy).tau;
  // Two-state symmetric chain: m(t) = (1 - 2p)^t / 2.
  const int expected = static_cast<int>(std::ceil(std::log(0.5) / std::log(0.9)));
  const bool ok = tau_uniform == 1 && tau_lazy == expected;
  return {"mixing time on closed-form chains", ok,
          "uniform tau = " + std::to_string(tau_uniform) + ", lazy tau = " +
              std::to_string(tau_lazy) + " (expected " + std::to_string(expected) + ")"};
}

SelftestResult check_transfer(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const TabularMDP mdp = random_ergodic_mdp(4, 3, rng);
    worst = std::max(worst, transfer_error(mdp, random_policy(4, 3, rng, 1.0),
                                           random_policy(4, 3, rng, 1.0)));
  }
  return {"transfer error vanishes for the full softmax class", worst < 1e-6,
          fmt("max transfer error", worst)};
}

SelftestResult check_adagrad() {
  double accum = 0.0, lhs = 0.0;
  for (int t = 0; t < 3; ++t) {
    const auto step = adagrad_step(accum, 1.0, 0, 0.0);
    lhs += 1.0 / std::sqrt(step.new_accum);
    accum = step.new_accum;
  }
  const double rhs = 2.0 * std::sqrt(3.0);
  return {"AdaGrad sum bound", lhs <= rhs, fmt("lhs", lhs) + ", " + fmt("bound", rhs)};
}

SelftestResult check_mlmc_telescoping(Rng& rng) {
  // With per-step values depending only on the position in the trajectory,
  // the expectation over levels telescopes to the finest average.
  const MlmcConfig config{8, 0};
  const int j_max = config.j_max();
  Vector values(8);
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = rng.uniform();
  double expected = 0.0;
  for (int j = 1; j <= j_max + 1; ++j) {
    Trajectory traj;
    const int n = j <= j_max ? (1 << j) : 1;
    for (int i = 0; i < n; ++i) traj.transitions.push_back(Transition{i, 0, 0.0, i + 1});
    traj.level = j;
    const double weight = j <= j_max ? std::ldexp(1.0, -j) : std::ldexp(1.0, -j_max);
    const Vector est = mlmc_combine(traj, config, [&](const Transition& tr) {
      return Vector::Constant(1, values(tr.s));
    });
    expected += weight * est(0);
  }
  const double finest = values.head(1 << j_max).mean();
  const double err = std::abs(expected - finest);
  return {"MLMC expectation telescopes to the finest level", err < 1e-12, fmt("error", err)};
}

SelftestResult check_feasibility() {
  const double h = min_feasible_h(1.0, 10.0).h_min;
  return {"minimum feasible epoch length at tau_hit = 10, tau_mix = 1", h >= 6e9 && h <= 7e9,
          fmt("H_min", h)};
}

}  // namespace

std::vector<SelftestResult> run_selftest(unsigned long long seed) {
  Rng rng(seed);
  std::vector<SelftestResult> out;
  out.push_back(check_gradient(rng));
  out.push_back(check_performance_difference(rng));
  out.push_back(check_mixing());
  out.push_back(check_transfer(rng));
  out.push_back(check_adagrad());
  out.push_back(check_mlmc_telescoping(rng));
  out.push_back(check_feasibility());
  return out;
}

bool report_selftest(std::ostream& out, const std::vector<SelftestResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  (" << r.detail << ")\n";
    all = all && r.passed;
  }
  return all;
}

}  // namespace avgrl
