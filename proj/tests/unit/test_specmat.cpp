#include "depmat/errors.hpp"
#include "depmat/specmat.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

namespace depmat {
namespace {

using testing::random_psd;
using testing::random_sym;

SymMatrix diag(std::initializer_list<double> d) {
  Eigen::VectorXd v(static_cast<Index>(d.size()));
  Index i = 0;
  for (double x : d) v(i++) = x;
  return SymMatrix::diagonal(v);
}

TEST(SymMatrix, SymmetrizesSmallAsymmetry) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0 + 1e-12, 3.0;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SymMatrix, RejectsAsymmetricOrNonFinite) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 0.0, 3.0;
  EXPECT_THROW(SymMatrix{m}, DomainError);
  m << 1.0, 0.0, 0.0, std::numeric_limits<double>::infinity();
  EXPECT_THROW(SymMatrix{m}, DomainError);
  EXPECT_THROW(SymMatrix{Eigen::MatrixXd(2, 3)}, DomainError);
}

TEST(SymEig, SmallExamples) {
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  const auto e = sym_eig(SymMatrix(m));
  EXPECT_NEAR(e.eigenvalues(0), 3.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues(1), 1.0, 1e-14);

  const auto id = sym_eig(SymMatrix::identity(5));
  for (Index i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(id.eigenvalues(i), 1.0);

  const auto d = sym_eig(diag({4.0, -2.0, 0.0}));
  EXPECT_DOUBLE_EQ(d.eigenvalues(0), 4.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues(1), 0.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues(2), -2.0);
}

TEST(SymEig, AgreesWithEigenOnRandomMatrices) {
  Rng rng(11);
  for (Index p : {1, 2, 7, 30, 80}) {
    const SymMatrix m = random_sym(rng, p);
    const auto mine = sym_eig(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m.matrix());
    const Eigen::VectorXd sorted = ref.eigenvalues().reverse();
    EXPECT_LE((mine.eigenvalues - sorted).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, m.frobenius_norm()));
    for (Index i = 1; i < p; ++i) EXPECT_GE(mine.eigenvalues(i - 1), mine.eigenvalues(i));
    const Eigen::MatrixXd& q = mine.basis;
    EXPECT_LE((q * q.transpose() - Eigen::MatrixXd::Identity(p, p)).norm(), 1e-10 * static_cast<double>(p));
    EXPECT_LE((mine.recompose(mine.eigenvalues).matrix() - m.matrix()).norm(),
              1e-10 * std::max(1.0, m.frobenius_norm()));
  }
}

TEST(SymEig, HandlesDegenerateSpectra) {
  Rng rng(5);
  const SymMatrix m = random_psd(rng, 40, 3);  // 37-fold zero eigenvalue
  const auto e = sym_eig(m);
  EXPECT_LE((e.recompose(e.eigenvalues).matrix() - m.matrix()).norm(), 1e-10 * m.frobenius_norm());
  EXPECT_NEAR(e.eigenvalues(3), 0.0, 1e-10 * m.frobenius_norm());
}

TEST(OperatorNorm, Examples) {
  EXPECT_DOUBLE_EQ(operator_norm(diag({3.0, -5.0})), 5.0);
  EXPECT_EQ(operator_norm(SymMatrix::zero(4)), 0.0);
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  EXPECT_NEAR(operator_norm(SymMatrix(m)), 3.0, 1e-14);
}

TEST(SpectralNorm, MatchesSingularValues) {
  Rng rng(3);
  Eigen::MatrixXd a(6, 4);
  for (Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  EXPECT_NEAR(spectral_norm(a), svd.singularValues()(0), 1e-10);
}

TEST(EffectiveRank, Examples) {
  EXPECT_DOUBLE_EQ(effective_rank(SymMatrix::identity(4)), 4.0);
  EXPECT_DOUBLE_EQ(effective_rank(diag({2.0, 1.0, 1.0})), 2.0);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(9);
  e1(0) = 1.0;
  EXPECT_DOUBLE_EQ(effective_rank(SymMatrix::diagonal(e1)), 1.0);
}

TEST(EffectiveRank, ErrorsAndTolerance) {
  EXPECT_THROW(effective_rank(SymMatrix::zero(3)), DomainError);
  EXPECT_THROW(effective_rank(diag({1.0, -0.1})), DomainError);
  EXPECT_NO_THROW(effective_rank(diag({1.0, -1e-12})));
}

TEST(EffectiveRank, ScaleInvariantAndBounded) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const SymMatrix m = random_psd(rng, 12, 5);
    const double r = effective_rank(m);
    EXPECT_GE(r, 1.0);
    EXPECT_LE(r, 5.0 + 1e-9);
    EXPECT_NEAR(effective_rank(m * 37.5), r, 1e-10 * r);
  }
}

TEST(Truncate, Examples) {
  EXPECT_EQ(truncate_eigenvalues(diag({3.0, -5.0}), 2.0).matrix(), diag({2.0, -2.0}).matrix());
  EXPECT_EQ(truncate_eigenvalues(diag({3.0, -5.0}), 4.0).matrix(), diag({3.0, -4.0}).matrix());
  Rng rng(1);
  const SymMatrix m = random_sym(rng, 6);
  EXPECT_EQ(truncate_eigenvalues(m, operator_norm(m) + 1.0), m);
  EXPECT_THROW(truncate_eigenvalues(m, 0.0), DomainError);
  EXPECT_THROW(truncate_eigenvalues(m, -1.0), DomainError);
}

TEST(Truncate, IdempotentCappedAndLipschitz) {
  Rng rng(2024);
  for (int k = 0; k < 100; ++k) {
    const Index p = 1 + static_cast<Index>(rng.uniform() * 15);
    const SymMatrix a = random_sym(rng, p);
    const SymMatrix b = random_sym(rng, p);
    const double tau = 0.05 + 2.0 * rng.uniform();
    const SymMatrix ta = truncate_eigenvalues(a, tau);
    EXPECT_LE((truncate_eigenvalues(ta, tau) - ta).frobenius_norm(), 1e-10);
    EXPECT_LE(operator_norm(ta), tau + 1e-10);
    EXPECT_LE((ta - truncate_eigenvalues(b, tau)).frobenius_norm(), (a - b).frobenius_norm() + 1e-10);
  }
}

TEST(PseudoInverse, Examples) {
  EXPECT_EQ(pseudo_inverse(diag({2.0, 0.0})).matrix(), diag({0.5, 0.0}).matrix());
  EXPECT_EQ(pseudo_inverse(SymMatrix::identity(3)).matrix(), SymMatrix::identity(3).matrix());
  EXPECT_EQ(pseudo_inverse(diag({4.0, 1e-15}), 1e-12).matrix(), diag({0.25, 0.0}).matrix());
}

TEST(PseudoInverse, PenroseIdentityOnRankDeficient) {
  Rng rng(77);
  for (int k = 0; k < 20; ++k) {
    const SymMatrix m = random_psd(rng, 15, 1 + k % 10);
    const SymMatrix pinv = pseudo_inverse(m);
    const Eigen::MatrixXd back = m.matrix() * pinv.matrix() * m.matrix();
    EXPECT_LE((back - m.matrix()).norm(), 1e-8 * m.frobenius_norm());
    EXPECT_EQ(numerical_rank(m, 1e-10), 1 + k % 10);
  }
}

}  // namespace
}  // namespace depmat
