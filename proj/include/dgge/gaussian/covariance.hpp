#pragma once

#include "dgge/core.hpp"

#include <cmath>
#include <utility>

namespace dgge {

/// Two-point correlation matrix C_ij = <c_i^dag c_j> of a particle-number
/// conserving Gaussian fermionic state.
///
/// The wrapper does not validate on construction (hot loops build many of
/// these); use `check_valid()` or the individual diagnostics when the input is
/// untrusted.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;
  explicit CovarianceMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("covariance matrix must be square");
  }

  static CovarianceMatrix zero(Index dim) { return CovarianceMatrix(Matrix::Zero(dim, dim)); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(Index i, Index j) const { return m_(i, j); }

  double trace() const { return m_.diagonal().real().sum(); }

  /// Max elementwise |C - C^dag|.
  double hermiticity_residual() const {
    if (dim() == 0) return 0.0;
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  }

  /// ||C^2 - C||_F, zero for pure states.
  double purity_residual() const { return (m_ * m_ - m_).norm(); }

  RealVector spectrum() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  /// Covariance of the leftmost `n` sites.
  CovarianceMatrix leading_block(Index n) const {
    return CovarianceMatrix(m_.topLeftCorner(n, n));
  }

  /// Throws InvalidState unless C is Hermitian with spectrum in [0, 1].
  void check_valid(double herm_tol = 1e-12, double spec_tol = 1e-10) const {
    if (hermiticity_residual() > herm_tol) throw InvalidState("covariance matrix is not Hermitian");
    if (dim() == 0) return;
    RealVector ev = spectrum();
    if (ev.minCoeff() < -spec_tol || ev.maxCoeff() > 1.0 + spec_tol)
      throw InvalidState("covariance spectrum outside [0, 1]");
  }

  friend CovarianceMatrix operator-(const CovarianceMatrix& a, const CovarianceMatrix& b) {
    return CovarianceMatrix(a.m_ - b.m_);
  }

 private:
  Matrix m_;
};

/// Covariance of the Slater determinant whose occupied orbitals are the
/// columns of `orbitals` (orthonormal): C_ij = sum_k conj(V_ik) V_jk.
inline CovarianceMatrix covariance_from_orbitals(const Matrix& orbitals) {
  return CovarianceMatrix((orbitals.conjugate() * orbitals.transpose()).eval());
}

}  // namespace dgge
