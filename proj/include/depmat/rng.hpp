#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace depmat {

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed for (master, index): two SplitMix64 rounds over
/// master + (index + 1) * golden-ratio increment.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// mt19937_64 with hand-written variate transforms, so a given seed yields
/// the same stream under every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [-c, c].
  double symmetric(double c) { return c * (2.0 * uniform() - 1.0); }
  double normal();
  /// Exponential with unit mean.
  double exponential();
  /// Uniform direction on the unit sphere of R^p.
  Eigen::VectorXd unit_vector(Eigen::Index p);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace depmat
