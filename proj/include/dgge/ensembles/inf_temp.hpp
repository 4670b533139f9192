#pragma once

// Infinite-temperature ensembles on the subsystem: uniformly random Gaussian
// states of fixed particle number, optionally constrained by the T R_{pi/2}
// reality structure, mixed over particle-number sectors with the
// hypergeometric weights p(N_A).

#include "dgge/ensembles/haar.hpp"
#include "dgge/gaussian/covariance.hpp"

#include <cmath>
#include <random>

namespace dgge {

/// Diagonal of R_{pi/2}: phase i on every second site (sites 2, 4, ... in
/// one-based counting, i.e. odd zero-based indices), 1 elsewhere.
inline Vector quarter_phase_diagonal(Index sites) {
  Vector r(sites);
  for (Index j = 0; j < sites; ++j) r(j) = (j % 2 == 1) ? Complex(0.0, 1.0) : Complex(1.0, 0.0);
  return r;
}

/// R C R^dag, real for states in the orthogonal sector.
inline Matrix rotate_quarter_phase(const Matrix& c) {
  const Vector r = quarter_phase_diagonal(c.rows());
  return r.asDiagonal() * c * r.conjugate().asDiagonal();
}

/// C = R^dag Q D_{L_A,N_A} Q^dag R with Q Haar in O(L_A) or U(L_A).
template <class Urbg>
CovarianceMatrix build_inf_temp_covariance(Index sites, Index particles, Group group, Urbg& rng) {
  if (sites < 1) throw std::invalid_argument("subsystem must have at least one site");
  if (particles < 0 || particles > sites) throw std::invalid_argument("particle number outside [0, L_A]");
  if (particles == 0) return CovarianceMatrix::zero(sites);
  const Matrix q = haar_columns(group, sites, particles, rng);
  const Vector r = quarter_phase_diagonal(sites);
  Matrix c = r.conjugate().asDiagonal() * (q * q.adjoint()) * r.asDiagonal();
  return CovarianceMatrix(std::move(c));
}

namespace detail {
inline double log_binomial(Index n, Index k) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}
}  // namespace detail

/// p(N_A) = binom(L_A, N_A) binom(L - L_A, M - N_A) / binom(L, M), for
/// N_A = 0..min(L_A, M). Normalised to sum to one.
inline std::vector<double> number_distribution(Index sites, Index particles, Index subsystem) {
  if (particles < 0 || particles > sites) throw std::invalid_argument("particle number outside [0, L]");
  if (subsystem < 1 || subsystem > sites) throw std::invalid_argument("subsystem size outside [1, L]");
  const Index top = std::min(subsystem, particles);
  std::vector<double> p(static_cast<std::size_t>(top + 1), 0.0);
  const double log_norm = detail::log_binomial(sites, particles);
  double total = 0.0;
  for (Index na = 0; na <= top; ++na) {
    const Index nb = particles - na;
    if (nb < 0 || nb > sites - subsystem) continue;
    const double lp = detail::log_binomial(subsystem, na) + detail::log_binomial(sites - subsystem, nb) - log_norm;
    p[static_cast<std::size_t>(na)] = std::exp(lp);
    total += p[static_cast<std::size_t>(na)];
  }
  for (auto& x : p) x /= total;
  return p;
}

/// Grand-canonical infinite-temperature ensemble on a subsystem of L_A sites
/// of an L-site chain holding N particles: draw N_A ~ p(N_A), then a uniformly
/// random state of that sector.
class InfTempEnsemble {
 public:
  InfTempEnsemble(Index sites, Index particles, Index subsystem, Group group)
      : subsystem_(subsystem),
        group_(group),
        weights_(number_distribution(sites, particles, subsystem)),
        pick_(weights_.begin(), weights_.end()) {}

  Index subsystem_sites() const { return subsystem_; }
  Group group() const { return group_; }
  const std::vector<double>& sector_weights() const { return weights_; }

  template <class Urbg>
  CovarianceMatrix sample(Urbg& rng) {
    const auto na = static_cast<Index>(pick_(rng));
    return build_inf_temp_covariance(subsystem_, na, group_, rng);
  }

 private:
  Index subsystem_;
  Group group_;
  std::vector<double> weights_;
  std::discrete_distribution<std::size_t> pick_;
};

}  // namespace dgge
