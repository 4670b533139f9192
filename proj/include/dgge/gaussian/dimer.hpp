#pragma once

#include "dgge/gaussian/covariance.hpp"

#include <numbers>

namespace dgge {

/// Amplitude of the dimer product state prod_j (c^dag_{2j} + alpha c^dag_{2j+1}) |0>.
struct DimerParams {
  Complex alpha{0.0, 0.0};

  static DimerParams from_polar(double modulus, double phase) {
    return DimerParams{std::polar(modulus, phase)};
  }

  double modulus() const { return std::abs(alpha); }
  double phase() const { return std::arg(alpha); }
  /// Amplitude of the first harmonic of n(k): |alpha| / (1 + |alpha|^2), in [0, 1/2].
  double epsilon() const {
    const double a0 = modulus();
    return a0 / (1.0 + a0 * a0);
  }
};

/// Covariance of the dimer state on `sites` sites: L/2 identical blocks
///   [[1, alpha], [conj(alpha), |alpha|^2]] / (1 + |alpha|^2)
/// on the pairs (2j, 2j+1). alpha = 0 is the Neel state.
inline CovarianceMatrix build_dimer_covariance(Index sites, Complex alpha) {
  if (sites < 2 || sites % 2 != 0)
    throw std::invalid_argument("dimer state needs an even number of sites >= 2");
  const double norm = 1.0 + std::norm(alpha);
  Matrix c = Matrix::Zero(sites, sites);
  for (Index j = 0; j < sites; j += 2) {
    c(j, j) = 1.0 / norm;
    c(j, j + 1) = alpha / norm;
    c(j + 1, j) = std::conj(alpha) / norm;
    c(j + 1, j + 1) = std::norm(alpha) / norm;
  }
  return CovarianceMatrix(std::move(c));
}

/// Momentum occupations of the dimer state,
///   n(k) = 1/2 + Re(e^{-ik} alpha / (1 + |alpha|^2)),  k = 2 pi m / L.
/// Entry m equals [F C F^dag]_{mm} with F_{kj} = e^{2 pi i k j / L} / sqrt(L).
inline std::vector<double> occupation_spectrum(Complex alpha, Index sites) {
  if (sites < 1) throw std::invalid_argument("occupation spectrum needs at least one site");
  const Complex a = alpha / (1.0 + std::norm(alpha));
  std::vector<double> n(static_cast<std::size_t>(sites));
  for (Index m = 0; m < sites; ++m) {
    const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(sites);
    n[static_cast<std::size_t>(m)] = 0.5 + (std::polar(1.0, -k) * a).real();
  }
  return n;
}

}  // namespace dgge
