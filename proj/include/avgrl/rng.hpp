#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace avgrl {

// Seeded generator for a single run. Uniforms are built directly from the
// engine bits so sampled trajectories do not depend on the standard
// library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool coin() { return (engine_() >> 63) != 0; }

  /// Index i with probability probs[i] by inverse-CDF on one uniform.
  template <typename Derived>
  Eigen::Index categorical(const Eigen::DenseBase<Derived>& probs) {
    const double u = uniform();
    double cumulative = 0.0;
    const Eigen::Index last = probs.size() - 1;
    for (Eigen::Index i = 0; i < last; ++i) {
      cumulative += probs(i);
      if (u < cumulative) return i;
    }
    return last;
  }

  /// Geom(1/2) on {1, 2, ...}: P(j) = 2^-j. Counts fair coin flips up to
  /// and including the first head.
  int geometric_half() {
    int j = 1;
    while (!coin()) ++j;
    return j;
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace avgrl
