#pragma once

// Samplers producing post-measurement subsystem states for every ensemble
// kind. Representative-state ensembles draw a whole-chain state and measure its
// bath exactly like the projected ensemble; the infinite-temperature ensembles
// are sampled directly on the subsystem.

#include "dgge/ensembles/ensemble_spec.hpp"
#include "dgge/ensembles/generalized_haar.hpp"
#include "dgge/ensembles/inf_temp.hpp"
#include "dgge/ensembles/single_eigenstate.hpp"
#include "dgge/gaussian/dimer.hpp"
#include "dgge/gaussian/evolution.hpp"
#include "dgge/montecarlo/projected.hpp"

#include <optional>

namespace dgge {

class EnsembleSampler {
 public:
  explicit EnsembleSampler(EnsembleSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const Index L = spec_.lattice.sites();
    switch (spec_.kind) {
      case EnsembleKind::projected:
        state_ = evolve(build_dimer_covariance(L, spec_.alpha), spec_.time, spec_.lattice);
        break;
      case EnsembleKind::single_eigenstate:
        eigenstates_.emplace(spec_.occupations, spec_.particles);
        break;
      case EnsembleKind::generalized_haar:
        basis_.emplace(L);
        break;
      case EnsembleKind::inf_temp_orthogonal:
      case EnsembleKind::inf_temp_unitary:
        inf_temp_.emplace(L, spec_.particles, spec_.lattice.subsystem_sites(),
                          spec_.kind == EnsembleKind::inf_temp_orthogonal ? Group::orthogonal : Group::unitary);
        break;
    }
  }

  /// Projected ensemble of a given state (already evolved).
  EnsembleSampler(const CovarianceMatrix& state, const LatticeSpec& lattice) : state_(state) {
    spec_.kind = EnsembleKind::projected;
    spec_.lattice = lattice;
    if (state.dim() != lattice.sites()) throw std::invalid_argument("state does not match the lattice");
  }

  const EnsembleSpec& spec() const { return spec_; }

  template <class Urbg>
  CovarianceMatrix sample(Urbg& rng) {
    switch (spec_.kind) {
      case EnsembleKind::projected:
        return pe_direct_sample(*state_, spec_.lattice, rng).post_state;
      case EnsembleKind::single_eigenstate:
        return pe_direct_sample(eigenstates_->sample(rng), spec_.lattice, rng).post_state;
      case EnsembleKind::generalized_haar: {
        const Index L = spec_.lattice.sites();
        if (!chain_) {
          chain_.emplace(GeneralizedHaarChain::from_haar(spec_.multipliers, spec_.particles, spec_.group, rng));
          chain_->advance(10 * static_cast<std::uint64_t>(L * L), rng);
        }
        chain_->advance(spec_.thin ? spec_.thin : static_cast<std::uint64_t>(L), rng);
        return pe_direct_sample(chain_->covariance(*basis_), spec_.lattice, rng).post_state;
      }
      case EnsembleKind::inf_temp_orthogonal:
      case EnsembleKind::inf_temp_unitary:
        return inf_temp_->sample(rng);
    }
    throw std::logic_error("unhandled ensemble kind");
  }

 private:
  EnsembleSpec spec_;
  std::optional<CovarianceMatrix> state_;
  std::optional<SingleEigenstateSampler> eigenstates_;
  std::optional<FourierBasis> basis_;
  std::optional<GeneralizedHaarChain> chain_;
  std::optional<InfTempEnsemble> inf_temp_;
};

}  // namespace dgge
