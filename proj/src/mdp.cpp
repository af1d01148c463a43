#include "avgrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "avgrl/errors.hpp"

namespace avgrl {

namespace {

std::string pair_name(int s, int a) {
  std::ostringstream os;
  os << "(s=" << s << ", a=" << a << ")";
  return os.str();
}

constexpr double kStationaryResidualTol = 1e-10;
constexpr double kPowerIterationTol = 1e-12;
constexpr int kPowerIterationCap = 1000000;

Vector power_iteration(const Matrix& chain) {
  const Eigen::Index n = chain.rows();
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < kPowerIterationCap; ++it) {
    Eigen::RowVectorXd next = d * chain;
    next /= next.sum();
    const double change = (next - d).cwiseAbs().sum();
    d = next;
    if (change < kPowerIterationTol) return d.transpose();
  }
  throw SolverError("stationary distribution: power iteration did not converge");
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularMDP

TabularMDP::TabularMDP(int n_states, int n_actions, RowMatrix transition, Matrix reward,
                       Vector initial_dist, double r_max)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)),
      r_max_(r_max) {
  if (n_states_ <= 0 || n_actions_ <= 0)
    throw ValidationError("n_states and n_actions must be positive");
  if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) throw ValidationError("r_max must be positive");
  const Eigen::Index rows = static_cast<Eigen::Index>(n_states_) * n_actions_;
  if (transition_.rows() != rows || transition_.cols() != n_states_)
    throw ValidationError("transition tensor must have shape n_states x n_actions x n_states");
  if (reward_.rows() != n_states_ || reward_.cols() != n_actions_)
    throw ValidationError("reward must have shape n_states x n_actions");
  if (initial_dist_.size() != n_states_)
    throw ValidationError("initial_dist must have n_states entries");

  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      const auto row = transition_row(s, a);
      if (!row.allFinite() || row.minCoeff() < 0.0)
        throw ValidationError("transition row " + pair_name(s, a) + " has a negative entry");
      const double total = row.sum();
      if (std::abs(total - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os.precision(17);
        os << "transition row " << pair_name(s, a) << " sums to " << total << ", expected 1";
        throw ValidationError(os.str());
      }
      const double r = reward_(s, a);
      if (!(r >= 0.0 && r <= r_max_)) {
        std::ostringstream os;
        os << "reward " << pair_name(s, a) << " = " << r << " outside [0, " << r_max_ << "]";
        throw ValidationError(os.str());
      }
    }
  }
  if (!initial_dist_.allFinite() || initial_dist_.minCoeff() < 0.0)
    throw ValidationError("initial_dist has a negative entry");
  if (std::abs(initial_dist_.sum() - 1.0) > kStochasticTol)
    throw ValidationError("initial_dist does not sum to 1");
}

// ---------------------------------------------------------------------------
// SoftmaxPolicy

SoftmaxPolicy::SoftmaxPolicy(RowMatrix theta) : theta_(std::move(theta)) {
  if (theta_.rows() == 0 || theta_.cols() == 0)
    throw DimensionError("policy parameters must be non-empty");
}

SoftmaxPolicy SoftmaxPolicy::uniform(int n_states, int n_actions) {
  return SoftmaxPolicy(RowMatrix::Zero(n_states, n_actions));
}

void SoftmaxPolicy::check_state(StateId s) const {
  if (s < 0 || s >= n_states())
    throw std::out_of_range("state index " + std::to_string(s) + " out of range");
}

Vector SoftmaxPolicy::probs(StateId s) const {
  check_state(s);
  const auto row = theta_.row(s);
  Vector p = (row.array() - row.maxCoeff()).exp().transpose();
  return p / p.sum();
}

double SoftmaxPolicy::prob(StateId s, ActionId a) const {
  if (a < 0 || a >= n_actions()) throw std::out_of_range("action index out of range");
  return probs(s)(a);
}

double SoftmaxPolicy::log_prob(StateId s, ActionId a) const {
  check_state(s);
  if (a < 0 || a >= n_actions()) throw std::out_of_range("action index out of range");
  const auto row = theta_.row(s);
  const double m = row.maxCoeff();
  return row(a) - m - std::log((row.array() - m).exp().sum());
}

Matrix SoftmaxPolicy::prob_matrix() const {
  Matrix p(n_states(), n_actions());
  for (int s = 0; s < n_states(); ++s) p.row(s) = probs(s).transpose();
  return p;
}

Vector SoftmaxPolicy::score(StateId s, ActionId a) const {
  Vector out = Vector::Zero(n_params());
  add_score(s, a, 1.0, out);
  return out;
}

void SoftmaxPolicy::add_score(StateId s, ActionId a, double scale, Eigen::Ref<Vector> out) const {
  if (out.size() != n_params()) throw DimensionError("score accumulator has wrong length");
  if (a < 0 || a >= n_actions()) throw std::out_of_range("action index out of range");
  const Vector p = probs(s);
  const Eigen::Index base = static_cast<Eigen::Index>(s) * n_actions();
  out.segment(base, n_actions()) -= scale * p;
  out(base + a) += scale;
}

// ---------------------------------------------------------------------------
// Chain primitives

void require_ergodic(const Matrix& chain) {
  const Eigen::Index n = chain.rows();
  if (chain.cols() != n) throw DimensionError("chain must be square");
  // Wielandt: a non-negative n x n matrix is primitive iff its
  // ((n-1)^2 + 1)-th power is strictly positive.
  const long long needed = (static_cast<long long>(n) - 1) * (n - 1) + 1;
  Matrix support = (chain.array() > 0.0).cast<double>();
  for (long long power = 1; power < needed; power *= 2) {
    support = ((support * support).array() > 0.0).cast<double>();
  }
  if ((support.array() <= 0.0).any())
    throw ErgodicityError("induced chain is not ergodic (reducible or periodic)");
}

Vector stationary_of_chain(const Matrix& chain) {
  require_ergodic(chain);
  const Eigen::Index n = chain.rows();
  Matrix system = chain.transpose() - Matrix::Identity(n, n);
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;

  Eigen::FullPivLU<Matrix> lu(system);
  Vector d;
  if (lu.isInvertible()) {
    d = lu.solve(rhs);
    const double residual = (d.transpose() * chain - d.transpose()).cwiseAbs().maxCoeff();
    if (!d.allFinite() || residual > kStationaryResidualTol) d = power_iteration(chain);
  } else {
    d = power_iteration(chain);
  }
  if (d.minCoeff() <= 0.0)
    throw ErgodicityError("stationary distribution has a non-positive entry");
  return d / d.sum();
}

MixingResult mixing_time_of_chain(const Matrix& chain, double epsilon, int iteration_cap) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0, 1)");
  const Vector d = stationary_of_chain(chain);
  const Eigen::Index n = chain.rows();
  const Eigen::RowVectorXd d_row = d.transpose();

  auto worst_tv = [&](const Matrix& power) {
    double worst = 0.0;
    for (Eigen::Index s = 0; s < n; ++s)
      worst = std::max(worst, 0.5 * (power.row(s) - d_row).cwiseAbs().sum());
    return worst;
  };

  MixingResult result;
  Matrix power = Matrix::Identity(n, n);
  result.tv_curve.push_back(worst_tv(power));
  for (int t = 1; t <= iteration_cap; ++t) {
    power = power * chain;
    const double m = worst_tv(power);
    result.tv_curve.push_back(m);
    if (m <= epsilon) {
      result.tau = t;
      return result;
    }
  }
  throw MixingTimeoutError("mixing time exceeds " + std::to_string(iteration_cap) +
                           " steps");
}

// ---------------------------------------------------------------------------
// Policy-induced quantities

Matrix induced_chain(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw DimensionError("policy shape does not match MDP");
  const int ns = mdp.n_states();
  Matrix chain = Matrix::Zero(ns, ns);
  for (int s = 0; s < ns; ++s) {
    const Vector p = policy.probs(s);
    for (int a = 0; a < mdp.n_actions(); ++a) chain.row(s) += p(a) * mdp.transition_row(s, a);
  }
  return chain;
}

Vector induced_reward(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  const Matrix p = policy.prob_matrix();
  return (p.array() * mdp.rewards().array()).rowwise().sum();
}

Vector stationary_distribution(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  return stationary_of_chain(induced_chain(mdp, policy));
}

double average_reward(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  return stationary_distribution(mdp, policy).dot(induced_reward(mdp, policy));
}

DifferentialValues differential_values(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  const Matrix chain = induced_chain(mdp, policy);
  const Vector d = stationary_of_chain(chain);
  const Vector r_pi = induced_reward(mdp, policy);
  const double j = d.dot(r_pi);

  // (I - P + 1 d^T) is the inverse fundamental matrix; its solution
  // automatically satisfies d^T V = 0.
  Matrix system = Matrix::Identity(ns, ns) - chain + Vector::Ones(ns) * d.transpose();
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw SolverError("differential Bellman system is singular");
  Vector v = lu.solve((r_pi.array() - j).matrix());
  if (!v.allFinite()) throw SolverError("differential Bellman solve produced non-finite values");
  v.array() -= d.dot(v);

  DifferentialValues out;
  out.avg_reward = j;
  out.v = v;
  out.q.resize(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a)
      out.q(s, a) = mdp.reward(s, a) - j + mdp.transition_row(s, a).dot(v);
  out.advantage = out.q.colwise() - v;
  return out;
}

Vector exact_policy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  const DifferentialValues dv = differential_values(mdp, policy);
  const Vector d = stationary_distribution(mdp, policy);
  const Matrix p = policy.prob_matrix();
  Vector grad = Vector::Zero(policy.n_params());
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      policy.add_score(s, a, d(s) * p(s, a) * dv.advantage(s, a), grad);
  return grad;
}

MixingResult mixing_time(const TabularMDP& mdp, const SoftmaxPolicy& policy, double epsilon) {
  return mixing_time_of_chain(induced_chain(mdp, policy), epsilon);
}

double hitting_time(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  return 1.0 / stationary_distribution(mdp, policy).minCoeff();
}

ChainAnalysis analyze_chain(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  const Matrix chain = induced_chain(mdp, policy);
  ChainAnalysis out;
  out.stationary = stationary_of_chain(chain);
  out.avg_reward = out.stationary.dot(induced_reward(mdp, policy));
  out.hitting_time = 1.0 / out.stationary.minCoeff();
  MixingResult mix = mixing_time_of_chain(chain);
  out.mixing_time = mix.tau;
  out.tv_curve = std::move(mix.tv_curve);
  return out;
}

// ---------------------------------------------------------------------------
// Fisher information and the natural-gradient direction

Matrix fisher_matrix(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                     const ParameterSubset& subset) {
  const Vector d = stationary_distribution(mdp, policy);
  const int na = mdp.n_actions();
  const Eigen::Index dim = policy.n_params();
  Matrix fisher = Matrix::Zero(dim, dim);
  // score(s, a) is supported on state s's block only.
  for (int s = 0; s < mdp.n_states(); ++s) {
    const Vector p = policy.probs(s);
    const Eigen::Index base = static_cast<Eigen::Index>(s) * na;
    for (int a = 0; a < na; ++a) {
      Vector block = -p;
      block(a) += 1.0;
      fisher.block(base, base, na, na) += d(s) * p(a) * block * block.transpose();
    }
  }
  if (subset.empty()) return fisher;
  return fisher(subset, subset);
}

Matrix symmetric_pinv(const Matrix& m, double relative_cutoff) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw SolverError("eigendecomposition failed");
  const Vector& values = eig.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  const double cutoff = relative_cutoff * largest;
  Vector inv = Vector::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) > cutoff) inv(i) = 1.0 / values(i);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

double fisher_min_positive_eigenvalue(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fisher_matrix(mdp, policy), Eigen::EigenvaluesOnly);
  const Vector& values = eig.eigenvalues();
  const double cutoff = kPinvCutoff * values.cwiseAbs().maxCoeff();
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) > cutoff) smallest = std::min(smallest, values(i));
  return smallest;
}

Vector npg_direction(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                     const ParameterSubset& subset) {
  // E[score * A] is exactly the policy gradient.
  const Vector target = exact_policy_gradient(mdp, policy);
  const Matrix fisher = fisher_matrix(mdp, policy, subset);
  if (subset.empty()) return symmetric_pinv(fisher) * target;
  const Vector restricted = symmetric_pinv(fisher) * target(subset);
  Vector h = Vector::Zero(policy.n_params());
  h(subset) = restricted;
  return h;
}

double compatible_fit_loss(const TabularMDP& mdp, const SoftmaxPolicy& theta,
                           const SoftmaxPolicy& dist, const Vector& h) {
  if (h.size() != theta.n_params()) throw DimensionError("direction has wrong length");
  const DifferentialValues dv = differential_values(mdp, theta);
  const Vector d = stationary_distribution(mdp, dist);
  const int na = mdp.n_actions();
  double loss = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    const Vector p_theta = theta.probs(s);
    const Vector p_dist = dist.probs(s);
    const auto block = h.segment(static_cast<Eigen::Index>(s) * na, na);
    const double baseline = p_theta.dot(block);
    for (int a = 0; a < na; ++a) {
      const double err = (block(a) - baseline) - dv.advantage(s, a);
      loss += d(s) * p_dist(a) * err * err;
    }
  }
  return loss;
}

double transfer_error(const TabularMDP& mdp, const SoftmaxPolicy& theta,
                      const SoftmaxPolicy& star, const ParameterSubset& subset) {
  return compatible_fit_loss(mdp, theta, star, npg_direction(mdp, theta, subset));
}

PerformanceDifference performance_difference(const TabularMDP& mdp, const SoftmaxPolicy& a,
                                             const SoftmaxPolicy& b) {
  const DifferentialValues dv_b = differential_values(mdp, b);
  const Vector d_a = stationary_distribution(mdp, a);
  const Matrix p_a = a.prob_matrix();
  PerformanceDifference out;
  out.lhs = average_reward(mdp, a) - dv_b.avg_reward;
  out.rhs = d_a.dot((p_a.array() * dv_b.advantage.array()).rowwise().sum().matrix());
  return out;
}

}  // namespace avgrl
