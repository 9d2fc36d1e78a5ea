#pragma once

// Dense symmetric spectral linear algebra.

#include <Eigen/Dense>

#include <cstddef>

namespace depmat {

using Index = Eigen::Index;

/// Dense real symmetric matrix. Symmetry is exact: every constructor
/// replaces the input by (M + M^T) / 2, and inputs whose asymmetry exceeds
/// 1e-8 relative (Frobenius) are rejected.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(Index p);
  static SymMatrix identity(Index p);
  static SymMatrix diagonal(const Eigen::VectorXd& d);
  /// y y^T
  static SymMatrix outer(const Eigen::VectorXd& y);

  Index dim() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double c);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double c, SymMatrix a) { return a *= c; }
  friend SymMatrix operator*(SymMatrix a, double c) { return a *= c; }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  struct Trusted {};
  SymMatrix(Eigen::MatrixXd m, Trusted) : m_(std::move(m)) {}

  Eigen::MatrixXd m_;
};

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // non-increasing
  Eigen::MatrixXd basis;        // column k is the eigenvector of eigenvalues[k]
  int sweeps = 0;

  /// Q diag(values) Q^T for a replacement spectrum on the same basis.
  SymMatrix recompose(const Eigen::VectorXd& values) const;
};

/// Cyclic Jacobi eigendecomposition. Stops once the off-diagonal Frobenius
/// norm falls below 1e-14 ||M||_F; throws NumericalError after 100 sweeps.
SpectralDecomposition sym_eig(const SymMatrix& m);

/// max_i |lambda_i|
double operator_norm(const SymMatrix& m);

/// Largest singular value of an arbitrary real matrix.
double spectral_norm(const Eigen::MatrixXd& m);

/// Tr(M) / ||M|| for PSD, nonzero M. Eigenvalues in [-1e-10 ||M||, 0) count
/// as zero; anything more negative is a DomainError.
double effective_rank(const SymMatrix& m);

/// Scalar clamp to [-tau, tau].
inline double clamp_scalar(double x, double tau) {
  return x < -tau ? -tau : (x > tau ? tau : x);
}

/// Clamps every eigenvalue to [-tau, tau]. When no eigenvalue exceeds tau in
/// magnitude the input is returned unchanged (bitwise).
SymMatrix truncate_eigenvalues(const SymMatrix& m, double tau);

/// Moore-Penrose inverse: eigenvalues with |lambda| <= rcond * max|lambda|
/// map to zero, the rest to 1 / lambda.
SymMatrix pseudo_inverse(const SymMatrix& m, double rcond = 1e-12);

/// Number of eigenvalues above rcond * max|lambda| in magnitude.
Index numerical_rank(const SymMatrix& m, double rcond = 1e-12);

}  // namespace depmat
