#pragma once

// Projective density measurements on Gaussian states.
//
// Measuring n_l with outcome z maps the covariance matrix to
//   C'_ij = C_ij + (-1)^z C_il C_lj / P_z,   P_z = 1 - z - (-1)^z C_ll,
// for i, j != l, and decouples site l (C'_ll = z, rest of row/column zero).
// Measuring the whole bath is a sequence of such rank-one updates. A closed
// determinant form gives the same probabilities and post-measurement states and
// is kept as an independent route.

#include "dgge/gaussian/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace dgge {

struct SiteMeasurement {
  CovarianceMatrix state;
  double probability = 0.0;
};

/// Outcome of measuring every bath site.
struct MeasurementRecord {
  Outcomes outcomes;
  double probability = 0.0;
  /// ln P(z_B); stays finite for large baths where P(z_B) underflows.
  double log_probability = 0.0;
  /// Post-measurement covariance of the subsystem A (L_A x L_A).
  CovarianceMatrix post_state;

  int bath_particles() const {
    int n = 0;
    for (auto z : outcomes) n += z;
    return n;
  }
};

inline SiteMeasurement measure_site(const CovarianceMatrix& state, Index site, int z) {
  const Matrix& c = state.matrix();
  const Index n = c.rows();
  if (site < 0 || site >= n) throw std::out_of_range("measured site outside the lattice");
  if (z != 0 && z != 1) throw std::invalid_argument("measurement outcome must be 0 or 1");
  const double cll = c(site, site).real();
  const double pz = z == 1 ? cll : 1.0 - cll;
  if (pz < kForbiddenThreshold)
    throw ForbiddenOutcome("outcome " + std::to_string(z) + " at site " + std::to_string(site) +
                           " has zero probability");
  const double sign = z == 1 ? -1.0 : 1.0;
  Matrix out = c + (sign / pz) * c.col(site) * c.row(site);
  out.row(site).setZero();
  out.col(site).setZero();
  out(site, site) = static_cast<double>(z);
  return {CovarianceMatrix(std::move(out)), pz};
}

namespace detail {

/// Sequential left-to-right measurement of the bath.
///
/// The working copy is laid out as [A | B reversed], so the leftmost unmeasured
/// bath site is always the last active index and every update acts on a
/// shrinking top-left block. Only the lower triangle is maintained.
///
/// `choose(b, p1)` returns the outcome for bath site b given the conditional
/// probability p1 of finding it occupied.
template <class Chooser>
std::optional<MeasurementRecord> sweep_bath(const Matrix& c, const LatticeSpec& lattice,
                                            Chooser&& choose) {
  const Index L = lattice.sites();
  const Index la = lattice.subsystem_sites();
  const Index lb = lattice.bath_sites();
  if (c.rows() != L || c.cols() != L)
    throw std::invalid_argument("covariance matrix does not match the lattice");

  auto site_of = [&](Index w) { return w < la ? w : la + (L - 1 - w); };
  Matrix work(L, L);
  for (Index j = 0; j < L; ++j) {
    const Index sj = site_of(j);
    for (Index i = j; i < L; ++i) work(i, j) = c(site_of(i), sj);
  }

  MeasurementRecord rec;
  rec.outcomes.resize(static_cast<std::size_t>(lb));
  double log_p = 0.0;
  for (Index b = 0; b < lb; ++b) {
    const Index p = L - 1 - b;
    const double p1 = std::clamp(work(p, p).real(), 0.0, 1.0);
    const int z = choose(b, p1);
    const double pz = z == 1 ? p1 : 1.0 - p1;
    if (pz < kForbiddenThreshold) return std::nullopt;
    log_p += std::log(pz);
    rec.outcomes[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(z);
    if (p == 0) continue;
    const Vector v = work.row(p).head(p).adjoint();
    const double weight = (z == 1 ? -1.0 : 1.0) / pz;
    work.topLeftCorner(p, p).template selfadjointView<Eigen::Lower>().rankUpdate(v, weight);
  }

  Matrix post = work.topLeftCorner(la, la).template selfadjointView<Eigen::Lower>();
  for (Index i = 0; i < la; ++i) post(i, i) = post(i, i).real();
  rec.log_probability = log_p;
  rec.probability = std::exp(log_p);
  rec.post_state = CovarianceMatrix(std::move(post));
  return rec;
}

inline void check_outcomes(const LatticeSpec& lattice, const Outcomes& z) {
  if (static_cast<Index>(z.size()) != lattice.bath_sites())
    throw std::invalid_argument("outcome string length differs from the bath size");
  for (auto b : z)
    if (b > 1) throw std::invalid_argument("outcomes must be 0 or 1");
}

}  // namespace detail

/// Iterative measurement of the whole bath; nullopt if some conditional
/// probability falls below kForbiddenThreshold.
inline std::optional<MeasurementRecord> try_measure_region(const CovarianceMatrix& state,
                                                           const LatticeSpec& lattice,
                                                           const Outcomes& z) {
  detail::check_outcomes(lattice, z);
  return detail::sweep_bath(state.matrix(), lattice,
                            [&](Index b, double) { return static_cast<int>(z[static_cast<std::size_t>(b)]); });
}

inline MeasurementRecord measure_region_iterative(const CovarianceMatrix& state,
                                                  const LatticeSpec& lattice, const Outcomes& z) {
  auto rec = try_measure_region(state, lattice, z);
  if (!rec) throw ForbiddenOutcome("bath outcome string has zero probability");
  return std::move(*rec);
}

/// Determinant form:
///   P(z) = det[(1 - D)/2 + C_B D],  D = diag(+1 if z_b = 1 else -1),
/// and each post-measurement entry C'_ij (i, j in A) is the bordered
/// determinant
///   det [[C_ij, (C_ib d_b)_b], [(C_bj)_b, (1 - D)/2 + C_B D]] / P(z).
/// The threshold applies to the joint probability, so this route is meant for
/// small baths (cross-checks), not production sampling.
inline MeasurementRecord measure_region_determinant(const CovarianceMatrix& state,
                                                    const LatticeSpec& lattice, const Outcomes& z) {
  detail::check_outcomes(lattice, z);
  const Matrix& c = state.matrix();
  if (c.rows() != lattice.sites()) throw std::invalid_argument("covariance matrix does not match the lattice");
  const Index la = lattice.subsystem_sites();
  const Index lb = lattice.bath_sites();
  const Index b0 = lattice.bath_begin();

  RealVector d(lb);
  for (Index b = 0; b < lb; ++b) d(b) = z[static_cast<std::size_t>(b)] ? 1.0 : -1.0;

  Matrix core = c.block(b0, b0, lb, lb) * d.asDiagonal();
  for (Index b = 0; b < lb; ++b) core(b, b) += 0.5 * (1.0 - d(b));

  const Complex det = core.fullPivLu().determinant();
  if (std::abs(det) < kForbiddenThreshold)
    throw ForbiddenOutcome("bath outcome string has zero probability");
  const double p = det.real();

  Matrix bordered(lb + 1, lb + 1);
  bordered.bottomRightCorner(lb, lb) = core;
  Matrix post(la, la);
  for (Index j = 0; j < la; ++j) {
    bordered.block(1, 0, lb, 1) = c.block(b0, j, lb, 1);
    for (Index i = 0; i < la; ++i) {
      bordered(0, 0) = c(i, j);
      bordered.block(0, 1, 1, lb) = c.block(i, b0, 1, lb) * d.asDiagonal();
      post(i, j) = bordered.fullPivLu().determinant() / p;
    }
  }

  MeasurementRecord rec;
  rec.outcomes = z;
  rec.probability = p;
  rec.log_probability = std::log(p);
  rec.post_state = CovarianceMatrix(std::move(post));
  return rec;
}

}  // namespace dgge
