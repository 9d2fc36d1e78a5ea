#include "depmat/rng.hpp"

#include <cmath>
#include <numbers>

namespace depmat {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u = 0.0;
  while (u == 0.0) u = uniform();
  const double v = uniform();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double a = 2.0 * std::numbers::pi * v;
  spare_normal_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::exponential() { return -std::log1p(-uniform()); }

Eigen::VectorXd Rng::unit_vector(Eigen::Index p) {
  Eigen::VectorXd g(p);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Eigen::Index i = 0; i < p; ++i) g[i] = normal();
    norm = g.norm();
  }
  return g / norm;
}

}  // namespace depmat
