#include "depmat/estimators.hpp"

#include "depmat/errors.hpp"
#include "depmat/rng.hpp"

#include <cmath>
#include <sstream>

namespace depmat {

namespace {

// sum_{r < count} Y_{a+r} Y_{b+r}^T, accumulated in row order so that the
// (a, a) product is exactly symmetric and (a, b) is exactly the transpose
// of (b, a).
Eigen::MatrixXd cross_moment(const Path& y, Index a, Index b, Index count) {
  const Index p = y.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (Index r = 0; r < count; ++r)
    for (Index j = 0; j < p; ++j) {
      const double yb = y(b + r, j);
      for (Index i = 0; i < p; ++i) out(i, j) += y(a + r, i) * yb;
    }
  return out;
}

HmmDecomposition decompose(const HmmEstimate& est, const Eigen::MatrixXd& target, const SymMatrix& sigma,
                           const Eigen::MatrixXd& sigma1) {
  HmmDecomposition d;
  d.error = spectral_norm(est.a_hat - target);
  d.lagged_error = spectral_norm(est.sigma1_hat - sigma1);
  d.cov_error = operator_norm(sigma - est.sigma_hat);
  d.bound = d.lagged_error + d.cov_error * spectral_norm(sigma1);
  d.holds = d.error <= d.bound;
  return d;
}

}  // namespace

MatrixSample::MatrixSample(std::vector<SymMatrix> items) : items_(std::move(items)) {
  if (items_.empty()) throw DomainError("MatrixSample: at least one matrix is required");
  const Index p = items_.front().dim();
  for (const auto& m : items_)
    if (m.dim() != p) throw DomainError("MatrixSample: matrices must share a dimension");
}

MatrixSample MatrixSample::outer_products(const Path& path) {
  std::vector<SymMatrix> items;
  items.reserve(static_cast<std::size_t>(path.rows()));
  for (Index l = 0; l < path.rows(); ++l) items.push_back(SymMatrix::outer(path.row(l).transpose()));
  return MatrixSample(std::move(items));
}

double MatrixSample::max_norm() const {
  double m = 0.0;
  for (const auto& item : items_) m = std::max(m, operator_norm(item));
  return m;
}

SymMatrix empirical_mean(const MatrixSample& sample) {
  SymMatrix acc = SymMatrix::zero(sample.dim());
  for (const auto& m : sample.items()) acc += m;
  return acc * (1.0 / static_cast<double>(sample.size()));
}

SymMatrix truncated_mean(const MatrixSample& sample, double tau) {
  if (!(tau > 0.0)) throw DomainError("truncated_mean: tau must be positive");
  SymMatrix acc = SymMatrix::zero(sample.dim());
  for (const auto& m : sample.items()) acc += truncate_eigenvalues(m, tau);
  return acc * (1.0 / static_cast<double>(sample.size()));
}

SymMatrix covariance_estimator(const Path& y, bool center) {
  if (y.rows() < 1) throw DomainError("covariance_estimator: at least one observation is required");
  const auto n = static_cast<double>(y.rows());
  if (center) {
    const Eigen::RowVectorXd mean = y.colwise().mean();
    const Path c = y.rowwise() - mean;
    return SymMatrix(Eigen::MatrixXd(c.transpose() * c) / n);
  }
  const Eigen::MatrixXd g = y.transpose() * y;
  return SymMatrix(0.5 * (g + g.transpose()) / n);
}

LaggedCovariance lagged_covariance(const Path& y, std::size_t lag) {
  const Index n = y.rows();
  const auto h = static_cast<Index>(lag);
  if (lag < 1) throw DomainError("lagged_covariance: lag must be >= 1");
  if (n <= h) throw DomainError("lagged_covariance: need more observations than the lag");
  const Index p = y.cols();
  const Index count = n - h;
  const double inv = 1.0 / static_cast<double>(count);

  LaggedCovariance out;
  out.naive = cross_moment(y, 0, h, count) * inv;
  Eigen::MatrixXd aug(2 * p, 2 * p);
  aug.topLeftCorner(p, p) = cross_moment(y, 0, 0, count) * inv;
  aug.bottomRightCorner(p, p) = cross_moment(y, h, h, count) * inv;
  aug.topRightCorner(p, p) = out.naive;
  aug.bottomLeftCorner(p, p) = out.naive.transpose();
  out.augmented = SymMatrix(aug);
  return out;
}

Eigen::MatrixXd hmm_population_limit(const SymMatrix& sigma, const Eigen::MatrixXd& sigma1) {
  const Eigen::MatrixXd shifted = sigma.matrix() + Eigen::MatrixXd::Identity(sigma.dim(), sigma.dim());
  return shifted.llt().solve(sigma1.transpose()).transpose();
}

HmmEstimate hmm_estimate(const Path& y, const std::optional<HmmTruth>& truth) {
  if (y.rows() < 3) throw DomainError("hmm_estimate: need observations Y_0..Y_n with n >= 2");
  const Index n = y.rows() - 1;
  const Index p = y.cols();
  const double inv = 1.0 / static_cast<double>(n);

  HmmEstimate est;
  est.sigma_hat = SymMatrix(cross_moment(y, 0, 0, n) * inv);
  est.sigma1_hat = cross_moment(y, 1, 0, n) * inv;
  const Eigen::MatrixXd shifted = est.sigma_hat.matrix() + Eigen::MatrixXd::Identity(p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  est.a_hat = llt.solve(est.sigma1_hat.transpose()).transpose();

  if (truth) {
    if (truth->transition.rows() != p || truth->sigma.dim() != p || truth->sigma1.rows() != p)
      throw DomainError("hmm_estimate: truth dimension mismatch");
    est.versus_planted = decompose(est, truth->transition, truth->sigma, truth->sigma1);
    est.versus_limit = decompose(est, hmm_population_limit(truth->sigma, truth->sigma1), truth->sigma, truth->sigma1);
    if (truth->noise_covariance) {
      const double gap = (truth->noise_covariance->matrix() - Eigen::MatrixXd::Identity(p, p)).norm();
      if (gap > 1e-9) {
        std::ostringstream os;
        os << "observation noise covariance differs from the identity (Frobenius gap " << gap
           << "); the estimator's identity premise does not hold";
        est.notes.push_back(os.str());
      }
    }
  }
  return est;
}

RegressionFit min_norm_regression(const RegressionData& data) {
  const Index n = data.covariates.rows();
  if (n < 1) throw DomainError("min_norm_regression: at least one observation is required");
  if (data.responses.size() != n) throw DomainError("min_norm_regression: response length mismatch");
  const Eigen::MatrixXd g = data.covariates * data.covariates.transpose();
  const SymMatrix gram(0.5 * (g + g.transpose()));

  RegressionFit fit;
  fit.gram_rank = numerical_rank(gram);
  if (fit.gram_rank < n) {
    std::ostringstream os;
    os << "Y Y^T is rank deficient (rank " << fit.gram_rank << " of " << n << "); using the pseudo-inverse";
    fit.warnings.push_back(os.str());
  }
  fit.theta = data.covariates.transpose() * (pseudo_inverse(gram).matrix() * data.responses);
  return fit;
}

double excess_risk(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star, const SymMatrix& sigma) {
  if (theta_hat.size() != theta_star.size() || theta_hat.size() != sigma.dim())
    throw DomainError("excess_risk: dimension mismatch");
  const Eigen::VectorXd d = theta_hat - theta_star;
  return std::max(0.0, d.dot(sigma.matrix() * d));
}

MonteCarloRisk excess_risk_monte_carlo(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_star,
                                       const ProcessSpec& process, double noise_variance, std::size_t draws,
                                       std::uint64_t seed) {
  if (theta_hat.size() != theta_star.size() || theta_hat.size() != process.dim())
    throw DomainError("excess_risk_monte_carlo: dimension mismatch");
  if (draws < 2) throw DomainError("excess_risk_monte_carlo: need at least two draws");
  const Path y = stationary_draws(process, draws, split_seed(seed, 0));
  Rng rng(split_seed(seed, 1));
  const double sd = std::sqrt(noise_variance);

  double sum = 0.0;
  double sum_sq = 0.0;
  for (Index r = 0; r < y.rows(); ++r) {
    const double fit_star = y.row(r).dot(theta_star);
    const double z = fit_star + sd * rng.normal();
    const double a = z - y.row(r).dot(theta_hat);
    const double b = z - fit_star;
    const double v = a * a - b * b;
    sum += v;
    sum_sq += v * v;
  }
  const auto m = static_cast<double>(draws);
  MonteCarloRisk out;
  out.draws = draws;
  out.mean = sum / m;
  const double var = std::max(0.0, (sum_sq - m * out.mean * out.mean) / (m - 1.0));
  out.std_error = std::sqrt(var / m);
  return out;
}

double regression_variance_trace(const Eigen::MatrixXd& covariates, const SymMatrix& sigma) {
  if (covariates.cols() != sigma.dim()) throw DomainError("regression_variance_trace: dimension mismatch");
  const Eigen::MatrixXd g = covariates * covariates.transpose();
  const Eigen::MatrixXd ginv = pseudo_inverse(SymMatrix(0.5 * (g + g.transpose()))).matrix();
  const Eigen::MatrixXd c = ginv * covariates * sigma.matrix() * covariates.transpose() * ginv;
  return c.trace();
}

}  // namespace depmat
