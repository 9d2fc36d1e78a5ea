#pragma once

// Dependent, heavy-tailed observation processes: the linear-filter causal
// Bernoulli shift (CBS), VAR(1) latent chains, additive radial noise, their
// dependence coefficients and tail functions.

#include "depmat/specmat.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace depmat {

/// Rows are observations: row l holds the (l+1)-th p-vector of the path.
using Path = Eigen::MatrixXd;

/// alpha_i = alpha1 * ratio^(i-1), ratio in [0, 1). ratio = 0 is the
/// single-tap (independent) filter.
struct GeometricCoeffs {
  double alpha1 = 1.0;
  double ratio = 0.0;
};

/// alpha_i = alpha1 * i^(-exponent), exponent > 2.
struct PolyDecayCoeffs {
  double alpha1 = 1.0;
  double exponent = 3.0;
};

using CoeffFamily = std::variant<GeometricCoeffs, PolyDecayCoeffs>;

void validate(const CoeffFamily& f);
/// alpha_i for i >= 1.
double coefficient(const CoeffFamily& f, std::size_t i);
/// sum_{i>=1} alpha_i
double coeff_sum(const CoeffFamily& f);
/// sum_{i>m} alpha_i (an upper bound for the polynomial family)
double coeff_tail(const CoeffFamily& f, std::size_t m);
/// sum_{i>=1} alpha_i^2
double coeff_square_sum(const CoeffFamily& f);
/// sum_{i>=1} alpha_i alpha_{i+1}
double coeff_lag_product_sum(const CoeffFamily& f);

/// Shape of the innovation covariance. Coordinate j of an innovation is
/// uniform on [-c_j, c_j] with c_j = B_xi sqrt(w_j), sum_j w_j = 1, so that
/// ||xi|| <= B_xi surely and Cov(xi) = diag(B_xi^2 w_j / 3).
struct Spectrum {
  enum class Kind { isotropic, spiked };
  Kind kind = Kind::isotropic;
  /// Spiked only: one weight 1/r, the remaining p-1 share 1 - 1/r equally.
  double effective_rank = 1.0;

  Eigen::VectorXd weights(Index p) const;
  double max_weight(Index p) const;
};

struct CbsSpec {
  Index dim = 1;
  CoeffFamily coeffs = GeometricCoeffs{};
  double innovation_bound = 1.0;
  Spectrum spectrum;
  double horizon_tol = 1e-10;

  /// B = A * B_xi
  double envelope() const;
  /// Smallest m with sum_{i>m} alpha_i B_xi <= horizon_tol.
  std::size_t horizon() const;
};

/// X_l = A X_{l-1} + xi_l with ||A|| < 1.
struct VarSpec {
  Eigen::MatrixXd transition;
  double innovation_bound = 1.0;
  Spectrum spectrum;
  double horizon_tol = 1e-10;

  Index dim() const { return transition.rows(); }
  double transition_norm() const;
  /// B = B_xi / (1 - ||A||)
  double envelope() const;
  std::size_t burn_in() const;
  /// The CBS coefficients of the chain: alpha_i = ||A||^(i-1).
  GeometricCoeffs coefficients() const;
};

using LatentSpec = std::variant<CbsSpec, VarSpec>;

/// ||eps|| <= lambda surely.
struct BoundedNoise {
  double lambda = 0.0;
};
/// E ||eps||^k <= lambda, k > 4.
struct PolyMomentNoise {
  double k = 6.0;
  double lambda = 1.0;
};
/// P(||eps||^k >= u) <= exp(-u / lambda).
struct ExpMomentNoise {
  double k = 2.0;
  double lambda = 1.0;
};

/// Isotropic radial noise eps = R U, U uniform on the sphere.
/// Bounded: R = lambda. PolyMoment: R = r0 P with P Pareto of shape k + 1,
/// r0 chosen so E R^k = lambda. ExpMoment: R^k exponential with mean lambda.
struct NoiseSpec {
  using Law = std::variant<BoundedNoise, PolyMomentNoise, ExpMomentNoise>;
  Law law = BoundedNoise{};
  Index dim = 1;

  void validate() const;
  bool is_bounded() const { return std::holds_alternative<BoundedNoise>(law); }
  /// F_eps(s) >= P(||eps||^2 >= s), clipped to [0, 1].
  double tail(double s) const;
  double second_moment() const;
  double fourth_moment() const;
  std::string label() const;
};

struct ProcessSpec {
  LatentSpec latent = CbsSpec{};
  NoiseSpec noise;

  Index dim() const;
  double envelope() const;
  double innovation_bound() const;
  CoeffFamily coefficients() const;
  void validate() const;
};

struct DependenceProfile {
  /// Gamma_{l,n} for l = 1..n (index l-1).
  std::vector<double> per_index;
  /// Gamma_n = max_l Gamma_{l,n} = Gamma_{1,n}
  double max = 0.0;
  /// Gamma = 4 B B_xi sum_{i>=2} i alpha_i, the n-free cap.
  double cap = 0.0;
};

struct BoundedTail {
  double kappa2 = 1.0;
};
/// F(t) = exp(-a t^b)
struct ExpDecayTail {
  double a = 1.0;
  double b = 1.0;
};
/// F(t) = a t^(-b), b > 2
struct PolyDecayTail {
  double a = 1.0;
  double b = 4.0;
};
/// F(t) = 1{t <= 4 B^2} + F_eps(t / 4)
struct CompositeTail {
  double envelope = 1.0;
  NoiseSpec noise;
};

/// Tail function F with P(||M_l|| > t) <= F(t) and moment bound
/// V^2 >= E ||M_l||^2.
struct TailModel {
  std::variant<BoundedTail, ExpDecayTail, PolyDecayTail, CompositeTail> regime = BoundedTail{};
  double moment_bound = 0.0;
  std::string moment_note;

  /// F(t), clipped to [0, 1].
  double operator()(double t) const;
  std::string label() const;
};

CbsSpec make_cbs(Index dim, CoeffFamily coeffs, double innovation_bound);
void validate(const CbsSpec& spec);
void validate(const VarSpec& spec);

Path simulate_cbs(const CbsSpec& spec, std::size_t n, std::uint64_t seed);
Path simulate_var(const VarSpec& spec, std::size_t n, std::uint64_t seed);
Path simulate_latent(const LatentSpec& spec, std::size_t n, std::uint64_t seed);
Path simulate_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed);
/// Y_l = X_l + eps_l; the latent path uses stream split_seed(seed, 0) and
/// the noise stream split_seed(seed, 1).
Path simulate_observations(const ProcessSpec& spec, std::size_t n, std::uint64_t seed);
/// Independent draws from the stationary marginal of Y (CBS latent only).
Path stationary_draws(const ProcessSpec& spec, std::size_t count, std::uint64_t seed);

DependenceProfile gamma_profile(const CoeffFamily& coeffs, double envelope, double innovation_bound,
                                std::size_t n);
DependenceProfile gamma_profile(const CbsSpec& spec, std::size_t n);
DependenceProfile gamma_profile(const ProcessSpec& spec, std::size_t n);

TailModel tail_model(const ProcessSpec& spec);

/// CIM with Lipschitz weights beta_0 and sum of the remaining weights
/// `contraction` rewritten as a CBS: alpha_l = beta_0 contraction^(l-1).
GeometricCoeffs cim_to_cbs(double beta0, double contraction);
/// The VAR X_l = A X_{l-1} + xi_l with ||A|| = a_norm as a CBS.
CbsSpec var_as_cim(double a_norm, double noise_bound, Index dim);

/// Population quantities of the observation process (closed form for the
/// linear filter, a convergent series for VAR latents).
struct PopulationMoments {
  SymMatrix sigma;          // E[Y_l Y_l^T]
  Eigen::MatrixXd lag1;     // E[Y_{l+1} Y_l^T]
  double sigma_norm = 0.0;  // ||Sigma||
  double trace = 0.0;
  double eff_rank = 0.0;
};

PopulationMoments population_moments(const ProcessSpec& spec);

/// sum_{k>=0} A^k S (A^k)^T
SymMatrix stationary_covariance(const Eigen::MatrixXd& transition, const SymMatrix& innovation_cov);

}  // namespace depmat
