#include "depmat/specmat.hpp"

#include "depmat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace depmat {

namespace {

constexpr double kAsymmetryTol = 1e-8;
constexpr double kOffDiagTol = 1e-14;
constexpr int kMaxSweeps = 100;
constexpr double kPsdTol = 1e-10;

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  const Index p = a.rows();
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// One Jacobi rotation annihilating a(k, l), k < l. Updates a in place
// (both triangles) and accumulates the rotation into v.
void rotate(Eigen::MatrixXd& a, Eigen::MatrixXd& v, Index k, Index l) {
  const double akl = a(k, l);
  const double theta = (a(l, l) - a(k, k)) / (2.0 * akl);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Index p = a.rows();

  for (Index i = 0; i < p; ++i) {
    if (i == k || i == l) continue;
    const double aik = a(i, k);
    const double ail = a(i, l);
    const double nk = c * aik - s * ail;
    const double nl = s * aik + c * ail;
    a(i, k) = nk;
    a(k, i) = nk;
    a(i, l) = nl;
    a(l, i) = nl;
  }
  a(k, k) -= t * akl;
  a(l, l) += t * akl;
  a(k, l) = 0.0;
  a(l, k) = 0.0;

  double* vk = v.col(k).data();
  double* vl = v.col(l).data();
  for (Index i = 0; i < p; ++i) {
    const double x = vk[i];
    const double y = vl[i];
    vk[i] = c * x - s * y;
    vl[i] = s * x + c * y;
  }
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("SymMatrix: matrix is not square");
  if (!m.allFinite()) throw DomainError("SymMatrix: non-finite entry");
  const double scale = m.norm();
  const double asym = (m - m.transpose()).norm();
  if (asym > kAsymmetryTol * scale) {
    std::ostringstream os;
    os << "SymMatrix: asymmetry " << asym << " exceeds tolerance relative to norm " << scale;
    throw DomainError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(Index p) { return {Eigen::MatrixXd::Zero(p, p), Trusted{}}; }

SymMatrix SymMatrix::identity(Index p) { return {Eigen::MatrixXd::Identity(p, p), Trusted{}}; }

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  if (!d.allFinite()) throw DomainError("SymMatrix::diagonal: non-finite entry");
  return {Eigen::MatrixXd(d.asDiagonal()), Trusted{}};
}

SymMatrix SymMatrix::outer(const Eigen::VectorXd& y) {
  if (!y.allFinite()) throw DomainError("SymMatrix::outer: non-finite entry");
  return {y * y.transpose(), Trusted{}};
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.dim() != dim()) throw DomainError("SymMatrix: dimension mismatch");
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.dim() != dim()) throw DomainError("SymMatrix: dimension mismatch");
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
  m_ *= c;
  return *this;
}

SymMatrix SpectralDecomposition::recompose(const Eigen::VectorXd& values) const {
  const Eigen::MatrixXd r = basis * values.asDiagonal() * basis.transpose();
  // Rounding leaves r symmetric only to ~1e-16 relative.
  return SymMatrix(0.5 * (r + r.transpose()));
}

SpectralDecomposition sym_eig(const SymMatrix& m) {
  const Index p = m.dim();
  Eigen::MatrixXd a = m.matrix();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(p, p);
  const double threshold = kOffDiagTol * m.frobenius_norm();

  int sweep = 0;
  double off = off_diagonal_norm(a);
  while (off > threshold) {
    if (sweep == kMaxSweeps)
      throw NumericalError("sym_eig: Jacobi iteration did not converge", off);
    for (Index k = 0; k + 1 < p; ++k) {
      for (Index l = k + 1; l < p; ++l) {
        const double akl = a(k, l);
        if (akl == 0.0) continue;
        // Below the diagonal's rounding floor the rotation is a no-op.
        const double floor = 1e-18 * (std::abs(a(k, k)) + std::abs(a(l, l)));
        if (std::abs(akl) < floor) {
          a(k, l) = 0.0;
          a(l, k) = 0.0;
          continue;
        }
        rotate(a, v, k, l);
      }
    }
    ++sweep;
    off = off_diagonal_norm(a);
  }

  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });

  SpectralDecomposition out;
  out.eigenvalues.resize(p);
  out.basis.resize(p, p);
  for (Index k = 0; k < p; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues[k] = a(src, src);
    out.basis.col(k) = v.col(src);
  }
  out.sweeps = sweep;
  return out;
}

double operator_norm(const SymMatrix& m) {
  if (m.dim() == 0) return 0.0;
  const auto eig = sym_eig(m);
  return std::max(std::abs(eig.eigenvalues[0]), std::abs(eig.eigenvalues[m.dim() - 1]));
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram =
      m.rows() >= m.cols() ? Eigen::MatrixXd(m.transpose() * m) : Eigen::MatrixXd(m * m.transpose());
  const auto eig = sym_eig(SymMatrix(0.5 * (gram + gram.transpose())));
  return std::sqrt(std::max(eig.eigenvalues[0], 0.0));
}

double effective_rank(const SymMatrix& m) {
  const auto eig = sym_eig(m);
  const Index p = m.dim();
  const double top = p == 0 ? 0.0 : std::max(std::abs(eig.eigenvalues[0]), std::abs(eig.eigenvalues[p - 1]));
  if (top == 0.0) throw DomainError("effective_rank: zero matrix");
  const double lowest = eig.eigenvalues[p - 1];
  if (lowest < -kPsdTol * top) {
    std::ostringstream os;
    os << "effective_rank: matrix is not positive semi-definite (eigenvalue " << lowest << ")";
    throw DomainError(os.str());
  }
  double trace = 0.0;
  for (Index k = 0; k < p; ++k) trace += std::max(eig.eigenvalues[k], 0.0);
  return trace / eig.eigenvalues[0];
}

SymMatrix truncate_eigenvalues(const SymMatrix& m, double tau) {
  if (!(tau > 0.0)) throw DomainError("truncate_eigenvalues: tau must be positive");
  const auto eig = sym_eig(m);
  const Index p = m.dim();
  bool clipped = false;
  Eigen::VectorXd values(p);
  for (Index k = 0; k < p; ++k) {
    values[k] = clamp_scalar(eig.eigenvalues[k], tau);
    clipped = clipped || values[k] != eig.eigenvalues[k];
  }
  if (!clipped) return m;
  return eig.recompose(values);
}

SymMatrix pseudo_inverse(const SymMatrix& m, double rcond) {
  if (!(rcond > 0.0)) throw DomainError("pseudo_inverse: rcond must be positive");
  const Index p = m.dim();
  if (p == 0) return m;
  const auto eig = sym_eig(m);
  const double top = std::max(std::abs(eig.eigenvalues[0]), std::abs(eig.eigenvalues[p - 1]));
  Eigen::VectorXd values(p);
  for (Index k = 0; k < p; ++k) {
    const double l = eig.eigenvalues[k];
    values[k] = (top == 0.0 || std::abs(l) <= rcond * top) ? 0.0 : 1.0 / l;
  }
  return eig.recompose(values);
}

Index numerical_rank(const SymMatrix& m, double rcond) {
  const Index p = m.dim();
  if (p == 0) return 0;
  const auto eig = sym_eig(m);
  const double top = std::max(std::abs(eig.eigenvalues[0]), std::abs(eig.eigenvalues[p - 1]));
  Index r = 0;
  for (Index k = 0; k < p; ++k)
    if (top > 0.0 && std::abs(eig.eigenvalues[k]) > rcond * top) ++r;
  return r;
}

}  // namespace depmat
