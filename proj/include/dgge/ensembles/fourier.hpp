#pragma once

#include "dgge/gaussian/covariance.hpp"

#include <numbers>

namespace dgge {

/// Momentum-space change of basis F_kj = e^{2 pi i k j / L} / sqrt(L).
/// Momentum occupations of a state are [F C F^dag]_kk.
class FourierBasis {
 public:
  explicit FourierBasis(Index sites) : f_(sites, sites) {
    if (sites < 1) throw std::invalid_argument("Fourier basis needs at least one site");
    const double norm = 1.0 / std::sqrt(static_cast<double>(sites));
    for (Index k = 0; k < sites; ++k)
      for (Index j = 0; j < sites; ++j) f_(k, j) = std::polar(norm, phase(k * j));
  }

  Index sites() const { return f_.rows(); }
  const Matrix& matrix() const { return f_; }

  std::vector<double> momentum_occupations(const CovarianceMatrix& c) const {
    const Matrix m = f_ * c.matrix() * f_.adjoint();
    std::vector<double> n(static_cast<std::size_t>(sites()));
    for (Index k = 0; k < sites(); ++k) n[static_cast<std::size_t>(k)] = m(k, k).real();
    return n;
  }

  /// F^dag diag(occupied) F, the covariance of the momentum eigenstate with the
  /// given occupied momenta. The result is circulant, so it is filled from its
  /// first row in O(L * N).
  CovarianceMatrix eigenstate_covariance(const std::vector<std::uint8_t>& occupied) const {
    const Index n = sites();
    if (static_cast<Index>(occupied.size()) != n)
      throw std::invalid_argument("occupation pattern does not match the basis size");
    Vector row = Vector::Zero(n);  // row(d) = C_{i, i+d}
    for (Index k = 0; k < n; ++k) {
      if (!occupied[static_cast<std::size_t>(k)]) continue;
      for (Index d = 0; d < n; ++d) row(d) += std::polar(1.0 / static_cast<double>(n), phase(k * d));
    }
    Matrix c(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) c(i, j) = row(((j - i) % n + n) % n);
    return CovarianceMatrix(std::move(c));
  }

  /// F^dag W W^dag F for a matrix W of occupied momentum-space orbitals.
  CovarianceMatrix real_space_covariance(const Matrix& momentum_orbitals) const {
    const Matrix y = f_.adjoint() * momentum_orbitals;
    return CovarianceMatrix((y * y.adjoint()).eval());
  }

 private:
  double phase(Index kj) const {
    const Index n = f_.rows();
    return 2.0 * std::numbers::pi * static_cast<double>(kj % n) / static_cast<double>(n);
  }

  Matrix f_;
};

}  // namespace dgge
