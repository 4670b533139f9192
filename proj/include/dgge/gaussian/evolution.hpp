#pragma once

#include "dgge/gaussian/covariance.hpp"

namespace dgge {

/// Single-particle hopping matrix h_ij = delta_{i,j+1} + delta_{i,j-1}
/// (wrap-around bonds iff periodic). For L = 2 with periodic boundaries the two
/// bonds coincide and h_01 = 2.
inline RealMatrix hopping_matrix(const LatticeSpec& lattice) {
  const Index n = lattice.sites();
  RealMatrix h = RealMatrix::Zero(n, n);
  const Index bonds = lattice.boundary() == Boundary::periodic ? n : n - 1;
  for (Index j = 0; j < bonds; ++j) {
    const Index k = (j + 1) % n;
    h(j, k) += 1.0;
    h(k, j) += 1.0;
  }
  return h;
}

/// Free evolution C(t) = e^{iht} C0 e^{-iht} on a tight-binding chain.
///
/// h is diagonalised once, h = W diag(e) W^T, and C0 is stored in the
/// eigenbasis so each time costs two dense products.
class TightBindingEvolver {
 public:
  TightBindingEvolver(const LatticeSpec& lattice, const CovarianceMatrix& initial)
      : lattice_(lattice) {
    if (initial.dim() != lattice.sites())
      throw std::invalid_argument("initial covariance does not match the lattice size");
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(hopping_matrix(lattice));
    energies_ = es.eigenvalues();
    modes_ = es.eigenvectors().cast<Complex>();
    initial_in_modes_ = modes_.adjoint() * initial.matrix() * modes_;
  }

  const LatticeSpec& lattice() const { return lattice_; }
  const RealVector& energies() const { return energies_; }

  CovarianceMatrix at(double t) const {
    const Index n = energies_.size();
    Matrix rotated(n, n);
    for (Index b = 0; b < n; ++b)
      for (Index a = 0; a < n; ++a)
        rotated(a, b) = initial_in_modes_(a, b) * std::polar(1.0, (energies_(a) - energies_(b)) * t);
    Matrix c = modes_ * rotated * modes_.adjoint();
    // Restore exact Hermiticity lost to rounding.
    c = (0.5 * (c + c.adjoint())).eval();
    return CovarianceMatrix(std::move(c));
  }

 private:
  LatticeSpec lattice_;
  RealVector energies_;
  Matrix modes_;
  Matrix initial_in_modes_;
};

/// One-shot evolution; prefer TightBindingEvolver when evolving to many times.
inline CovarianceMatrix evolve(const CovarianceMatrix& initial, double t, const LatticeSpec& lattice) {
  return TightBindingEvolver(lattice, initial).at(t);
}

}  // namespace dgge
