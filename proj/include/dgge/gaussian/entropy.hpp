#pragma once

#include "dgge/gaussian/covariance.hpp"

#include <algorithm>
#include <cmath>

namespace dgge {

namespace detail {
inline double binary_entropy(double x) {
  double s = 0.0;
  if (x > 0.0) s -= x * std::log(x);
  if (x < 1.0) s -= (1.0 - x) * std::log(1.0 - x);
  return s;
}
}  // namespace detail

/// Entanglement entropy (nats) of the Gaussian state with covariance `block`:
///   S = -sum_a [l_a ln l_a + (1 - l_a) ln(1 - l_a)].
/// Eigenvalues within kSpectrumTolerance of [0, 1] are clamped.
inline double entanglement_entropy(const Matrix& block) {
  if (block.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(block, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Index a = 0; a < es.eigenvalues().size(); ++a) {
    const double l = es.eigenvalues()(a);
    if (l < -kSpectrumTolerance || l > 1.0 + kSpectrumTolerance)
      throw InvalidState("covariance eigenvalue " + std::to_string(l) + " outside [0, 1]");
    s += detail::binary_entropy(std::clamp(l, 0.0, 1.0));
  }
  return s;
}

inline double entanglement_entropy(const CovarianceMatrix& block) {
  return entanglement_entropy(block.matrix());
}

/// Mean of the bipartite entropies of the cuts A1 = first m sites,
/// m = 1..L_A, divided by L_A. The m = L_A term is the entropy of the whole
/// (pure) subsystem and vanishes up to rounding.
inline double space_averaged_entropy(const CovarianceMatrix& subsystem_state) {
  const Index la = subsystem_state.dim();
  if (la < 1) throw std::invalid_argument("empty subsystem");
  double sum = 0.0;
  for (Index m = 1; m <= la; ++m)
    sum += entanglement_entropy(subsystem_state.matrix().topLeftCorner(m, m).eval());
  return sum / static_cast<double>(la);
}

}  // namespace dgge
