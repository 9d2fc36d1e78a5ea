#pragma once

// Deviation bounds for means of dependent, heavy-tailed random matrices,
// evaluated as explicit numbers together with their failure probability.

#include "depmat/procgen.hpp"

#include <optional>
#include <string>
#include <vector>

namespace depmat {

struct BoundInput {
  double sigma_norm = 1.0;  // ||Sigma||
  double eff_rank = 1.0;    // r(Sigma)
  double gamma_n = 0.0;     // Gamma_n
  std::size_t n = 1;
  double t = 1.0;           // confidence parameter
  TailModel tail;
  std::optional<double> tau;
  /// false when ||Sigma|| and r(Sigma) were estimated from data.
  bool oracle = true;

  void validate() const;
};

struct BoundTerms {
  double main = 0.0;
  double additive = 0.0;
  std::optional<double> variance;
};

struct BoundReport {
  double bound_value = 0.0;
  double failure_prob = 1.0;
  std::string regime;
  double tau_used = 0.0;
  BoundTerms terms;
  bool vacuous = false;
  bool oracle = true;
  std::vector<std::string> warnings;
};

/// 2 sqrt(2) ||Sigma|| (2 level + Gamma_n) sqrt((4 r + t) / n)
double concentration_term(double sigma_norm, double level, double gamma_n, double eff_rank, double t, double n);

/// Bounded matrices, ||M_l|| <= kappa^2: failure probability e^-t.
BoundReport bound_bounded(const BoundInput& in);

/// Any tail model at truncation level tau (selected when absent):
/// main term at level tau plus V sqrt(F(tau)), failure e^-t + n F(tau).
BoundReport bound_heavy(const BoundInput& in);

/// Same value as bound_heavy, certifying the truncated mean
/// (1/n) sum psi_tau(M_l): failure probability e^-t.
BoundReport bound_truncated(const BoundInput& in);

/// Truncation level with n F(tau) <= e^-t: closed form for the exponential
/// and polynomial regimes, kappa^2 for bounded tails, bisection on
/// [4 B^2, T_max] for the composite model.
double select_tau(const TailModel& tail, double n, double t);

/// Empirical covariance of a process with the composite tail
/// F(tau) = 1{tau <= 4B^2} + F_eps(tau / 4). tau <= 4 B^2 yields a
/// vacuous report.
BoundReport bound_covariance(const BoundInput& in);

struct LaggedBoundReport {
  BoundReport joint;     // on ||Sigma01_hat - Sigma01||
  BoundReport marginal;  // on max(||Sigma_hat - Sigma||, ||Sigma1_hat - Sigma1||)
};

/// r(Sigma01) from tr(Sigma01) = 2 tr(Sigma) = 2 ||Sigma|| r(Sigma).
double lagged_effective_rank(double sigma_norm, double eff_rank, double sigma01_norm);

/// Lagged covariance through the augmented process; one threshold tau
/// enters both indicator and noise term of
/// F(tau) = 4 1{tau <= 4B^2} + 4 F_eps(tau / 2). Composite tail required.
LaggedBoundReport bound_lagged(const BoundInput& in, double sigma01_norm, double r01, double sigma1_norm);

/// Linear HMM transition estimator; requires t > 2 B^2 and a composite tail.
BoundReport bound_hmm(const BoundInput& in, double sigma1_norm);

struct RegressionBoundParams {
  double theta_norm = 1.0;      // ||theta*||
  double c = 2.0;               // c > 1
  double trace_c = 0.0;         // tr(C) of the realised design
  double noise_variance = 1.0;  // sigma^2
};

/// Excess risk of the minimum-norm interpolant; t must lie in (B^2, n / c).
BoundReport bound_regression(const BoundInput& in, const RegressionBoundParams& params);

}  // namespace depmat
