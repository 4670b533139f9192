#pragma once

// Sampling the projected ensemble: bath outcome strings z_B with probability
// P(z_B) and their post-measurement subsystem states.

#include "dgge/gaussian/measurement.hpp"

#include <random>

namespace dgge {

/// Exact sample: sweeps the bath left to right, drawing each outcome from its
/// conditional probability P(z = 1) = C_ll of the partially measured state.
/// Outcomes whose conditional probability is below the forbidden threshold are
/// never drawn.
template <class Urbg>
MeasurementRecord pe_direct_sample(const CovarianceMatrix& state, const LatticeSpec& lattice, Urbg& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto choose = [&](Index, double p1) {
    if (p1 < kForbiddenThreshold) return 0;
    if (1.0 - p1 < kForbiddenThreshold) return 1;
    return u(rng) < p1 ? 1 : 0;
  };
  auto rec = detail::sweep_bath(state.matrix(), lattice, choose);
  if (!rec) throw InvalidState("direct sampling reached an outcome with zero probability");
  return std::move(*rec);
}

/// Metropolis chain over bath outcome strings.
struct ChainState {
  MeasurementRecord record;
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  /// Proposals rejected because the flipped string has zero probability.
  std::uint64_t forbidden = 0;

  const Outcomes& outcomes() const { return record.outcomes; }
  double log_probability() const { return record.log_probability; }
  double acceptance_rate() const {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

/// Starts from a uniformly random string; if that string is forbidden the
/// chain starts from a direct sample instead.
template <class Urbg>
ChainState pe_chain_start(const CovarianceMatrix& state, const LatticeSpec& lattice, Urbg& rng) {
  std::bernoulli_distribution coin(0.5);
  Outcomes z(static_cast<std::size_t>(lattice.bath_sites()));
  for (auto& b : z) b = coin(rng) ? 1 : 0;
  ChainState chain;
  if (auto rec = try_measure_region(state, lattice, z)) {
    chain.record = std::move(*rec);
  } else {
    chain.record = pe_direct_sample(state, lattice, rng);
  }
  return chain;
}

/// Flips one uniformly chosen bath outcome and accepts with probability
/// min(1, P(z')/P(z)). Returns whether the proposal was accepted.
template <class Urbg>
bool pe_metropolis_step(ChainState& chain, const CovarianceMatrix& state, const LatticeSpec& lattice, Urbg& rng) {
  const Index lb = lattice.bath_sites();
  std::uniform_int_distribution<Index> site(0, lb - 1);
  Outcomes z = chain.record.outcomes;
  z[static_cast<std::size_t>(site(rng))] ^= 1u;
  ++chain.proposed;
  auto rec = try_measure_region(state, lattice, z);
  if (!rec) {
    ++chain.forbidden;
    return false;
  }
  const double log_ratio = rec->log_probability - chain.record.log_probability;
  if (log_ratio < 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= std::exp(log_ratio)) return false;
  chain.record = std::move(*rec);
  ++chain.accepted;
  return true;
}

/// Burn-in length used by the runners: 10 proposals per bath site.
inline std::uint64_t default_burn_in(const LatticeSpec& lattice) {
  return 10 * static_cast<std::uint64_t>(lattice.bath_sites());
}

}  // namespace dgge
