#pragma once

// Matrix-mean, covariance, lagged covariance, linear-HMM transition and
// minimum-norm regression estimators.

#include "depmat/procgen.hpp"
#include "depmat/specmat.hpp"

#include <optional>
#include <string>
#include <vector>

namespace depmat {

/// A sequence M_1..M_n of symmetric matrices of a common dimension.
class MatrixSample {
 public:
  explicit MatrixSample(std::vector<SymMatrix> items);
  /// M_l = Y_l Y_l^T for every row of `path`.
  static MatrixSample outer_products(const Path& path);

  std::size_t size() const noexcept { return items_.size(); }
  Index dim() const noexcept { return items_.front().dim(); }
  const std::vector<SymMatrix>& items() const noexcept { return items_; }
  /// max_l ||M_l||
  double max_norm() const;

 private:
  std::vector<SymMatrix> items_;
};

SymMatrix empirical_mean(const MatrixSample& sample);

/// (1/n) sum_l psi_tau(M_l); each summand is returned unchanged when none
/// of its eigenvalues exceeds tau.
SymMatrix truncated_mean(const MatrixSample& sample, double tau);

/// (1/n) sum_l Y_l Y_l^T, optionally after subtracting the sample mean.
SymMatrix covariance_estimator(const Path& y, bool center = false);

struct LaggedCovariance {
  /// (1/(n-1)) sum_{l=1}^{n-1} Ytilde_l Ytilde_l^T with Ytilde_l = (Y_l, Y_{l+1}).
  SymMatrix augmented;
  /// (1/(n-1)) sum_{l=1}^{n-1} Y_l Y_{l+1}^T; equals the upper-right block of
  /// `augmented` bit for bit.
  Eigen::MatrixXd naive;
};

LaggedCovariance lagged_covariance(const Path& y, std::size_t lag = 1);

/// Population quantities for checking an HMM fit.
struct HmmTruth {
  Eigen::MatrixXd transition;  // A
  SymMatrix sigma;             // E[Y Y^T]
  Eigen::MatrixXd sigma1;      // E[Y_{l+1} Y_l^T]
  std::optional<SymMatrix> noise_covariance;
};

struct HmmDecomposition {
  double error = 0.0;        // ||A_hat - A||
  double lagged_error = 0.0; // ||Sigma1_hat - Sigma1||
  double cov_error = 0.0;    // ||Sigma - Sigma_hat||
  double bound = 0.0;        // lagged_error + cov_error ||Sigma1||
  bool holds = false;
};

struct HmmEstimate {
  Eigen::MatrixXd a_hat;
  SymMatrix sigma_hat;        // (1/n) sum_{l=0}^{n-1} Y_l Y_l^T
  Eigen::MatrixXd sigma1_hat; // (1/n) sum_{l=0}^{n-1} Y_{l+1} Y_l^T
  /// Against the planted transition A.
  std::optional<HmmDecomposition> versus_planted;
  /// Against Sigma1 (Sigma + I)^{-1}, the population limit of a_hat.
  std::optional<HmmDecomposition> versus_limit;
  std::vector<std::string> notes;
};

/// A_hat = Sigma1_hat (Sigma_hat + I)^{-1} from rows Y_0..Y_n, via a Cholesky
/// solve against the SPD matrix Sigma_hat + I.
HmmEstimate hmm_estimate(const Path& y, const std::optional<HmmTruth>& truth = std::nullopt);

/// Sigma1 (Sigma + I)^{-1}
Eigen::MatrixXd hmm_population_limit(const SymMatrix& sigma, const Eigen::MatrixXd& sigma1);

struct RegressionData {
  Eigen::MatrixXd covariates;  // n x p, row l is Y_l^T
  Eigen::VectorXd responses;   // Z
  double noise_variance = 1.0;
  std::optional<Eigen::VectorXd> truth;
};

struct RegressionFit {
  Eigen::VectorXd theta;
  Index gram_rank = 0;
  std::vector<std::string> warnings;
};

/// theta_hat = Y^T (Y Y^T)^+ Z
RegressionFit min_norm_regression(const RegressionData& data);

/// (theta_hat - theta*)^T Sigma (theta_hat - theta*)
double excess_risk(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star, const SymMatrix& sigma);

struct MonteCarloRisk {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Monte Carlo average of (Z* - <Y*, theta_hat>)^2 - (Z* - <Y*, theta*>)^2
/// over fresh stationary draws Y* and Gaussian U with variance sigma^2.
MonteCarloRisk excess_risk_monte_carlo(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star,
                                       const ProcessSpec& process, double noise_variance, std::size_t draws,
                                       std::uint64_t seed);

/// tr(C) with C = (Y Y^T)^{-1} Y Sigma Y^T (Y Y^T)^{-1}.
double regression_variance_trace(const Eigen::MatrixXd& covariates, const SymMatrix& sigma);

}  // namespace depmat
