#include "depmat/errors.hpp"
#include "depmat/procgen.hpp"
#include "depmat/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace depmat {
namespace {

// Gamma_{l,n} = 4 B B_xi sum_{i>l} min(i, n) alpha_i, summed term by term.
double brute_gamma(const CoeffFamily& f, double b, double b_xi, std::size_t l, std::size_t n, std::size_t terms) {
  long double s = 0.0L;
  for (std::size_t i = terms; i > l; --i) s += static_cast<long double>(std::min(i, n)) * coefficient(f, i);
  return 4.0 * b * b_xi * static_cast<double>(s);
}

ProcessSpec process(CbsSpec cbs, NoiseSpec::Law law) {
  ProcessSpec s;
  s.noise.dim = cbs.dim;
  s.latent = std::move(cbs);
  s.noise.law = law;
  return s;
}

// Batch-means standard error of the mean of a dependent series.
double batch_se(const std::vector<double>& x, std::size_t batches) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += x[b * len + i];
    means[b] /= static_cast<double>(len);
  }
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= static_cast<double>(batches);
  double v = 0.0;
  for (double m : means) v += (m - mu) * (m - mu);
  return std::sqrt(v / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

TEST(Coefficients, SumsMatchSeries) {
  const CoeffFamily g = GeometricCoeffs{0.5, 0.5};
  EXPECT_DOUBLE_EQ(coeff_sum(g), 1.0);
  EXPECT_NEAR(coeff_square_sum(g), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(coeff_lag_product_sum(g), 1.0 / 6.0, 1e-15);
  const CoeffFamily p = PolyDecayCoeffs{1.0, 3.0};
  long double s = 0.0L;
  for (std::size_t i = 2000000; i >= 1; --i) s += coefficient(p, i);
  EXPECT_NEAR(coeff_sum(p), static_cast<double>(s), 1e-10);
  EXPECT_THROW(validate(CoeffFamily{PolyDecayCoeffs{1.0, 2.0}}), DomainError);
  EXPECT_THROW(validate(CoeffFamily{GeometricCoeffs{1.0, 1.0}}), DomainError);
}

TEST(Gamma, GeometricCapIsSix) {
  // alpha_i = 2^-i, B_xi = 1 so A = B = 1.
  const auto prof = gamma_profile(GeometricCoeffs{0.5, 0.5}, 1.0, 1.0, 100);
  EXPECT_NEAR(prof.cap, 6.0, 1e-12);
  EXPECT_LE(prof.max, prof.cap);
}

TEST(Gamma, GeometricMatchesBruteForce) {
  for (double q : {0.2, 0.5, 0.9}) {
    const CoeffFamily f = GeometricCoeffs{0.7, q};
    for (std::size_t n : {1u, 2u, 17u, 60u}) {
      const auto prof = gamma_profile(f, 1.3, 0.8, n);
      for (std::size_t l = 1; l <= n; ++l) {
        const double ref = brute_gamma(f, 1.3, 0.8, l, n, 3000);
        EXPECT_NEAR(prof.per_index[l - 1], ref, 1e-9 * std::max(ref, 1e-300)) << "q=" << q << " n=" << n << " l=" << l;
      }
    }
  }
}

TEST(Gamma, PolynomialMatchesBruteForce) {
  const CoeffFamily f = PolyDecayCoeffs{1.0, 4.0};
  const std::size_t n = 30;
  const auto prof = gamma_profile(f, 2.0, 1.0, n);
  for (std::size_t l = 1; l <= n; ++l) {
    const double ref = brute_gamma(f, 2.0, 1.0, l, n, 4000000);
    EXPECT_NEAR(prof.per_index[l - 1], ref, 1e-9 * ref) << "l=" << l;
  }
  EXPECT_NEAR(prof.cap, 8.0 * (1.2020569031595942 - 1.0), 1e-9);  // 4 B B_xi (zeta(3) - 1)
  EXPECT_THROW(gamma_profile(PolyDecayCoeffs{1.0, 1.5}, 1.0, 1.0, 10), DomainError);
}

TEST(Gamma, SingleTapIsZeroAndProfilesAreMonotone) {
  const auto zero = gamma_profile(GeometricCoeffs{1.0, 0.0}, 1.0, 1.0, 25);
  for (double g : zero.per_index) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(zero.cap, 0.0);
  for (const CoeffFamily f : {CoeffFamily{GeometricCoeffs{1.0, 0.95}}, CoeffFamily{PolyDecayCoeffs{1.0, 2.5}}}) {
    const auto prof = gamma_profile(f, 1.0, 1.0, 500);
    for (std::size_t l = 1; l < prof.per_index.size(); ++l) {
      EXPECT_GE(prof.per_index[l - 1], prof.per_index[l]);
      EXPECT_GE(prof.per_index[l], 0.0);
    }
    EXPECT_EQ(prof.max, prof.per_index.front());
    EXPECT_LE(prof.max, prof.cap * (1.0 + 1e-12));
  }
}

TEST(Cim, RewritesAsGeometricCbs) {
  const auto g = cim_to_cbs(0.3, 0.5);
  EXPECT_EQ(g.alpha1, 0.3);
  EXPECT_EQ(g.ratio, 0.5);
  EXPECT_NEAR(coeff_sum(cim_to_cbs(1.0, 0.9)), 10.0, 1e-12);
  EXPECT_THROW(cim_to_cbs(1.0, 1.0), DomainError);
  EXPECT_NEAR(var_as_cim(0.5, 1.5, 3).envelope(), 3.0, 1e-12);
  EXPECT_THROW(var_as_cim(1.0, 1.0, 3), DomainError);
  const auto iid = gamma_profile(var_as_cim(0.0, 1.0, 3), 10);
  for (double x : iid.per_index) EXPECT_EQ(x, 0.0);
}

TEST(SimulateCbs, EnvelopeHoldsAndRunsAreDeterministic) {
  const CbsSpec spec = make_cbs(5, GeometricCoeffs{0.5, 0.5}, 1.0);
  EXPECT_DOUBLE_EQ(spec.envelope(), 1.0);
  const Path x = simulate_cbs(spec, 10000, 42);
  for (Index i = 0; i < x.rows(); ++i) ASSERT_LE(x.row(i).norm(), spec.envelope() + 1e-12);
  EXPECT_EQ(x, simulate_cbs(spec, 10000, 42));
  EXPECT_NE(x, simulate_cbs(spec, 10000, 43));
}

TEST(SimulateCbs, SingleTapIsIndependentInnovations) {
  const CbsSpec spec = make_cbs(3, GeometricCoeffs{1.0, 0.0}, 2.0);
  const Path x = simulate_cbs(spec, 20000, 1);
  const double c = 2.0 / std::sqrt(3.0);
  EXPECT_LE(x.cwiseAbs().maxCoeff(), c);
  const Eigen::MatrixXd lag = x.topRows(19999).transpose() * x.bottomRows(19999) / 19999.0;
  EXPECT_LT(lag.cwiseAbs().maxCoeff(), 5.0 * (c * c / 3.0) / std::sqrt(19999.0));
}

TEST(SimulateCbs, RejectsBadInputs) {
  CbsSpec spec = make_cbs(2, GeometricCoeffs{0.5, 0.5}, 1.0);
  spec.horizon_tol = 0.0;
  EXPECT_THROW(simulate_cbs(spec, 10, 1), DomainError);
  EXPECT_THROW(simulate_cbs(make_cbs(2, GeometricCoeffs{0.5, 0.5}, 1.0), 0, 1), DomainError);
}

TEST(SimulateCbs, StationaryMomentsMatchClosedForm) {
  const double b_xi = 1.0;
  const CoeffFamily f = GeometricCoeffs{0.6, 0.7};
  const CbsSpec spec = make_cbs(2, f, b_xi);
  const std::size_t n = 100000;
  const Path x = simulate_cbs(spec, n, 9);
  const double level = b_xi * b_xi / (3.0 * 2.0);  // c^2 / 3, c = B_xi / sqrt(p)
  const double var_ref = coeff_square_sum(f) * level;
  const double lag_ref = coeff_lag_product_sum(f) * level;
  std::vector<double> sq(n), lag(n - 1);
  for (std::size_t i = 0; i < n; ++i) sq[i] = x(static_cast<Index>(i), 0) * x(static_cast<Index>(i), 0);
  for (std::size_t i = 0; i + 1 < n; ++i)
    lag[i] = x(static_cast<Index>(i), 1) * x(static_cast<Index>(i + 1), 1);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
  };
  EXPECT_NEAR(mean(sq), var_ref, 5.0 * batch_se(sq, 50));
  EXPECT_NEAR(mean(lag), lag_ref, 5.0 * batch_se(lag, 50));

  const auto pm = population_moments(process(spec, BoundedNoise{0.0}));
  EXPECT_NEAR(pm.sigma(0, 0), var_ref, 1e-15);
  EXPECT_NEAR(pm.lag1(1, 1), lag_ref, 1e-15);
  EXPECT_NEAR(pm.eff_rank, 2.0, 1e-12);
}

TEST(SimulateVar, RotationMatchesLyapunovFixedPoint) {
  const double th = 0.4;
  Eigen::MatrixXd a(2, 2);
  a << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  a *= 0.9;
  VarSpec spec;
  spec.transition = a;
  spec.innovation_bound = 1.0;
  // Oracle: iterate S <- A S A^T + S_xi to its fixed point.
  const Eigen::MatrixXd s_xi = Eigen::MatrixXd::Identity(2, 2) / 6.0;
  Eigen::MatrixXd s = s_xi;
  for (int k = 0; k < 2000; ++k) s = a * s * a.transpose() + s_xi;

  const Path x = simulate_var(spec, 100000, 3);
  const Eigen::MatrixXd emp = x.transpose() * x / static_cast<double>(x.rows());
  EXPECT_LT((emp - s).norm(), 0.05 * s.norm());
  EXPECT_LT((stationary_covariance(a, SymMatrix(s_xi)).matrix() - s).norm(), 1e-12);
  EXPECT_NEAR(spec.envelope(), 10.0, 1e-9);
  for (Index i = 0; i < x.rows(); ++i) ASSERT_LE(x.row(i).norm(), spec.envelope() + 1e-12);
}

TEST(Noise, ZeroNoiseLeavesLatentUntouched) {
  const ProcessSpec spec = process(make_cbs(4, GeometricCoeffs{0.5, 0.5}, 1.0), BoundedNoise{0.0});
  const Path y = simulate_observations(spec, 500, 17);
  EXPECT_EQ(y, simulate_latent(spec.latent, 500, split_seed(17, 0)));
}

TEST(Noise, DimensionMismatchIsRejected) {
  ProcessSpec spec = process(make_cbs(4, GeometricCoeffs{0.5, 0.5}, 1.0), BoundedNoise{1.0});
  spec.noise.dim = 3;
  EXPECT_THROW(simulate_observations(spec, 10, 1), DomainError);
}

TEST(Noise, CenteredAndMomentsMatch) {
  NoiseSpec noise;
  noise.dim = 3;
  noise.law = PolyMomentNoise{6.0, 1.0};
  const std::size_t n = 100000;
  const Path eps = simulate_noise(noise, n, 5);
  std::vector<double> r2(n);
  for (std::size_t i = 0; i < n; ++i) r2[i] = eps.row(static_cast<Index>(i)).squaredNorm();
  for (Index j = 0; j < 3; ++j) {
    const double sd = std::sqrt((eps.col(j).array().square().mean()) / static_cast<double>(n));
    EXPECT_LT(std::abs(eps.col(j).mean()), 5.0 * sd);
  }
  EXPECT_NEAR(Eigen::Map<Eigen::VectorXd>(r2.data(), static_cast<Index>(n)).mean(), noise.second_moment(),
              5.0 * batch_se(r2, 100));
}

TEST(Noise, TailsRespectTheirBounds) {
  const std::size_t n = 100000;
  for (const NoiseSpec::Law law : {NoiseSpec::Law{PolyMomentNoise{6.0, 1.0}}, NoiseSpec::Law{ExpMomentNoise{2.0, 1.5}}}) {
    NoiseSpec noise;
    noise.dim = 4;
    noise.law = law;
    const Path eps = simulate_noise(noise, n, 77);
    for (double t : {1.0, 4.0, 16.0}) {
      double hits = 0.0;
      for (Index i = 0; i < eps.rows(); ++i) hits += eps.row(i).squaredNorm() >= t ? 1.0 : 0.0;
      const double freq = hits / static_cast<double>(n);
      const double se = std::sqrt(std::max(freq * (1.0 - freq), 1.0 / n) / static_cast<double>(n));
      // The bound printed for F_eps(t / 4) is 2^k times the one at t.
      double k = 0.0, loose = 0.0;
      if (const auto* pm = std::get_if<PolyMomentNoise>(&law)) {
        k = pm->k;
        loose = std::pow(2.0, k) * pm->lambda * std::pow(t, -k / 2.0);
      } else {
        const auto& em = std::get<ExpMomentNoise>(law);
        k = em.k;
        loose = std::exp(-std::pow(t, k / 2.0) / (std::pow(2.0, k) * em.lambda));
      }
      EXPECT_LE(freq, loose + 5.0 * se) << noise.label() << " t=" << t;
      EXPECT_LE(freq, noise.tail(t) + 5.0 * se) << noise.label() << " t=" << t;
    }
  }
}

TEST(TailModel, CompositeExamples) {
  const TailModel zero = tail_model(process(make_cbs(2, GeometricCoeffs{0.5, 0.5}, 1.0), BoundedNoise{0.0}));
  EXPECT_EQ(zero(0.0), 1.0);
  EXPECT_EQ(zero(4.0), 1.0);
  EXPECT_EQ(zero(4.0 + 1e-9), 0.0);
  EXPECT_NE(zero.moment_note.find("upper bound, not tight"), std::string::npos);
  EXPECT_NEAR(zero.moment_bound, std::sqrt(8.0), 1e-15);

  const TailModel poly = tail_model(process(make_cbs(2, GeometricCoeffs{0.5, 0.5}, 1.0), PolyMomentNoise{6.0, 1.0}));
  // F(17) = 1{17 <= 4} + F_eps(17 / 4) = (17 / 4)^-3 = 64 / 4913
  EXPECT_NEAR(poly(17.0), 64.0 / 4913.0, 1e-15);
  EXPECT_EQ(poly(0.0), 1.0);
  double prev = 1.0;
  for (double t = 0.5; t < 100.0; t *= 1.3) {
    EXPECT_LE(poly(t), prev);
    prev = poly(t);
  }
}

TEST(PopulationMoments, SpikedSpectrumKeepsEffectiveRank) {
  for (Index p : {10, 50, 100}) {
    CbsSpec cbs = make_cbs(p, GeometricCoeffs{0.5, 0.5}, 1.0);
    cbs.spectrum = {Spectrum::Kind::spiked, 5.0};
    const auto pm = population_moments(process(cbs, BoundedNoise{0.0}));
    EXPECT_NEAR(pm.eff_rank, 5.0, 1e-12);
    EXPECT_NEAR(operator_norm(pm.sigma), pm.sigma_norm, 1e-15);
  }
}

TEST(StationaryDraws, MatchMarginalCovariance) {
  const ProcessSpec spec = process(make_cbs(3, GeometricCoeffs{0.5, 0.5}, 1.0), BoundedNoise{0.3});
  const Path d = stationary_draws(spec, 50000, 4);
  const Eigen::MatrixXd emp = d.transpose() * d / static_cast<double>(d.rows());
  const auto pm = population_moments(spec);
  EXPECT_LT((emp - pm.sigma.matrix()).norm(), 0.03 * pm.sigma.frobenius_norm());
}

}  // namespace
}  // namespace depmat
