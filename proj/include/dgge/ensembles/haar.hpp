#pragma once

#include "dgge/core.hpp"

#include <random>
#include <string>

namespace dgge {

enum class Group { unitary, orthogonal };

inline std::string to_string(Group g) { return g == Group::unitary ? "unitary" : "orthogonal"; }

inline Group group_from_string(const std::string& s) {
  if (s == "unitary") return Group::unitary;
  if (s == "orthogonal") return Group::orthogonal;
  throw std::invalid_argument("unknown symmetry group '" + s + "'");
}

namespace detail {

// Q from the QR decomposition of a Gaussian matrix, with columns rephased by
// R_ii/|R_ii| so the result is Haar distributed (Mezzadri's construction).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> haar_columns(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& gaussian) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index rows = gaussian.rows();
  const Index cols = gaussian.cols();
  Eigen::HouseholderQR<Mat> qr(gaussian);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  const auto& r = qr.matrixQR();
  for (Index j = 0; j < cols; ++j) {
    const Scalar d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

}  // namespace detail

/// Haar-random L x N isometry (first N columns of a Haar unitary).
template <class Urbg>
Matrix haar_unitary_columns(Index sites, Index columns, Urbg& rng) {
  std::normal_distribution<double> g;
  Matrix z(sites, columns);
  for (Index j = 0; j < columns; ++j)
    for (Index i = 0; i < sites; ++i) z(i, j) = Complex(g(rng), g(rng));
  return detail::haar_columns(z);
}

/// Haar-random L x N real isometry (first N columns of a Haar orthogonal matrix).
template <class Urbg>
RealMatrix haar_orthogonal_columns(Index sites, Index columns, Urbg& rng) {
  std::normal_distribution<double> g;
  RealMatrix z(sites, columns);
  for (Index j = 0; j < columns; ++j)
    for (Index i = 0; i < sites; ++i) z(i, j) = g(rng);
  return detail::haar_columns(z);
}

template <class Urbg>
Matrix haar_unitary(Index sites, Urbg& rng) {
  if (sites < 1) throw std::invalid_argument("matrix size must be positive");
  return haar_unitary_columns(sites, sites, rng);
}

template <class Urbg>
RealMatrix haar_orthogonal(Index sites, Urbg& rng) {
  if (sites < 1) throw std::invalid_argument("matrix size must be positive");
  return haar_orthogonal_columns(sites, sites, rng);
}

/// Haar isometry for either group, as a complex matrix.
template <class Urbg>
Matrix haar_columns(Group group, Index sites, Index columns, Urbg& rng) {
  if (group == Group::unitary) return haar_unitary_columns(sites, columns, rng);
  return haar_orthogonal_columns(sites, columns, rng).template cast<Complex>();
}

}  // namespace dgge
