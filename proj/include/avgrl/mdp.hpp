#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace avgrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using StateId = int;
using ActionId = int;

/**
 * Finite MDP with bounded rewards.
 *
 * Transitions are stored as an (n_states * n_actions) x n_states row-major
 * matrix; row s * n_actions + a is the next-state distribution P(. | s, a).
 * The constructor enforces the stochasticity, reward-range and initial
 * distribution invariants and throws ValidationError naming the offending
 * (s, a) pair.
 */
class TabularMDP {
public:
  static constexpr double kStochasticTol = 1e-12;

  TabularMDP(int n_states, int n_actions, RowMatrix transition, Matrix reward,
             Vector initial_dist, double r_max);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double r_max() const { return r_max_; }

  double transition(StateId s, ActionId a, StateId next) const {
    return transition_(row_index(s, a), next);
  }
  auto transition_row(StateId s, ActionId a) const { return transition_.row(row_index(s, a)); }
  const RowMatrix& transitions() const { return transition_; }

  double reward(StateId s, ActionId a) const { return reward_(s, a); }
  const Matrix& rewards() const { return reward_; }
  const Vector& initial_dist() const { return initial_dist_; }

private:
  Eigen::Index row_index(StateId s, ActionId a) const {
    return static_cast<Eigen::Index>(s) * n_actions_ + a;
  }

  int n_states_;
  int n_actions_;
  RowMatrix transition_;
  Matrix reward_;
  Vector initial_dist_;
  double r_max_;
};

/**
 * Tabular softmax policy pi(a|s) proportional to exp(theta[s][a]).
 *
 * Parameter vectors (scores, gradients, Fisher rows) use the row-major
 * flattening of theta: entry s * n_actions + a.
 */
class SoftmaxPolicy {
public:
  explicit SoftmaxPolicy(RowMatrix theta);
  static SoftmaxPolicy uniform(int n_states, int n_actions);

  int n_states() const { return static_cast<int>(theta_.rows()); }
  int n_actions() const { return static_cast<int>(theta_.cols()); }
  Eigen::Index n_params() const { return theta_.size(); }

  const RowMatrix& theta() const { return theta_; }
  RowMatrix& theta() { return theta_; }
  Eigen::Map<const Vector> params() const { return {theta_.data(), theta_.size()}; }
  Eigen::Map<Vector> params() { return {theta_.data(), theta_.size()}; }

  /// Max-shifted softmax of theta[s]. Throws std::out_of_range.
  Vector probs(StateId s) const;
  double prob(StateId s, ActionId a) const;
  double log_prob(StateId s, ActionId a) const;
  /// n_states x n_actions matrix of action probabilities.
  Matrix prob_matrix() const;

  /// grad_theta log pi(a|s): 1 - pi(a|s) at (s,a), -pi(b|s) at (s,b), 0 elsewhere.
  Vector score(StateId s, ActionId a) const;
  /// out += scale * score(s, a) without materializing the dense vector.
  void add_score(StateId s, ActionId a, double scale, Eigen::Ref<Vector> out) const;

private:
  void check_state(StateId s) const;

  RowMatrix theta_;
};

struct DifferentialValues {
  Matrix q;          // Q(s, a)
  Vector v;          // V(s)
  Matrix advantage;  // Q(s, a) - V(s)
  double avg_reward = 0.0;
  // V is pinned by sum_s d(s) V(s) = 0.
  static constexpr const char* kNormalization = "stationary-mean-zero";
};

struct MixingResult {
  int tau = 0;
  // tv_curve[t] = max_s TV(P^t(s, .), d) for t = 0 .. tau.
  std::vector<double> tv_curve;
};

struct ChainAnalysis {
  Vector stationary;
  double avg_reward = 0.0;
  int mixing_time = 0;
  double hitting_time = 0.0;
  std::vector<double> tv_curve;
};

struct PerformanceDifference {
  double lhs = 0.0;  // J(a) - J(b)
  double rhs = 0.0;  // E_{s~d_a, x~pi_a}[A_b(s, x)]
};

/// Free parameter indices for restricted parameterizations; empty means all.
using ParameterSubset = std::vector<Eigen::Index>;

inline constexpr int kMixingIterationCap = 100000;
inline constexpr double kPinvCutoff = 1e-10;

// Chain-level primitives, usable on any row-stochastic matrix.
/// Throws ErgodicityError unless the support of `chain` is primitive.
void require_ergodic(const Matrix& chain);
Vector stationary_of_chain(const Matrix& chain);
MixingResult mixing_time_of_chain(const Matrix& chain, double epsilon = 0.25,
                                  int iteration_cap = kMixingIterationCap);

/// P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
Matrix induced_chain(const TabularMDP& mdp, const SoftmaxPolicy& policy);
/// r_pi(s) = sum_a pi(a|s) r(s, a).
Vector induced_reward(const TabularMDP& mdp, const SoftmaxPolicy& policy);

Vector stationary_distribution(const TabularMDP& mdp, const SoftmaxPolicy& policy);
double average_reward(const TabularMDP& mdp, const SoftmaxPolicy& policy);
DifferentialValues differential_values(const TabularMDP& mdp, const SoftmaxPolicy& policy);
Vector exact_policy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy);
MixingResult mixing_time(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                         double epsilon = 0.25);
double hitting_time(const TabularMDP& mdp, const SoftmaxPolicy& policy);
ChainAnalysis analyze_chain(const TabularMDP& mdp, const SoftmaxPolicy& policy);

Matrix fisher_matrix(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                     const ParameterSubset& subset = {});
/// Smallest eigenvalue of F above the pseudoinverse cutoff. F is singular
/// along the per-state shift directions, so this stands in for mu_F.
double fisher_min_positive_eigenvalue(const TabularMDP& mdp, const SoftmaxPolicy& policy);
/// Moore-Penrose pseudoinverse of a symmetric PSD matrix via eigendecomposition.
Matrix symmetric_pinv(const Matrix& m, double relative_cutoff = kPinvCutoff);

/// h* = F^+ E[score * A]. With a subset, only those coordinates move; the
/// result is still a full-length vector with zeros at frozen coordinates.
Vector npg_direction(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                     const ParameterSubset& subset = {});

/// E_{s~d^dist, a~pi_dist}[(score_theta(s,a) . h - A^theta(s,a))^2].
double compatible_fit_loss(const TabularMDP& mdp, const SoftmaxPolicy& theta,
                           const SoftmaxPolicy& dist, const Vector& h);
double transfer_error(const TabularMDP& mdp, const SoftmaxPolicy& theta,
                      const SoftmaxPolicy& star, const ParameterSubset& subset = {});

PerformanceDifference performance_difference(const TabularMDP& mdp, const SoftmaxPolicy& a,
                                             const SoftmaxPolicy& b);

}  // namespace avgrl
