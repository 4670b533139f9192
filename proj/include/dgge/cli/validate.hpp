#pragma once

// Quick invariant checks run by `dgge validate`.

#include "dgge/cli/runner.hpp"
#include "dgge/ensembles/fourier.hpp"

#include <string>

namespace dgge {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string format_value(const char* label, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s = %.3g", label, x);
  return buf;
}

inline Outcomes outcomes_from_index(std::uint64_t bits, Index length) {
  Outcomes z(static_cast<std::size_t>(length));
  for (Index b = 0; b < length; ++b) z[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>((bits >> b) & 1u);
  return z;
}

}  // namespace detail

inline std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(derive_seed(seed, {5}));
  const LatticeSpec lattice(10, 3);
  const Index lb = lattice.bath_sites();
  const auto state = covariance_from_orbitals(haar_columns(Group::unitary, 10, 4, rng));

  // Enumerate every bath string once for three checks.
  double total = 0.0, route_gap = 0.0;
  Matrix first_moment = Matrix::Zero(3, 3);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << lb); ++bits) {
    const auto z = detail::outcomes_from_index(bits, lb);
    const auto rec = try_measure_region(state, lattice, z);
    if (!rec) continue;
    total += rec->probability;
    first_moment += rec->probability * rec->post_state.matrix();
    const auto det = measure_region_determinant(state, lattice, z);
    route_gap = std::max(route_gap, std::abs(det.probability - rec->probability));
    route_gap = std::max(route_gap, (det.post_state.matrix() - rec->post_state.matrix()).cwiseAbs().maxCoeff());
  }
  out.push_back({"outcome probabilities sum to one", std::abs(total - 1.0) < 1e-10,
                 detail::format_value("|sum - 1|", std::abs(total - 1.0))});
  out.push_back({"iterative and determinant measurement agree", route_gap < 1e-8,
                 detail::format_value("max gap", route_gap)});
  const double moment_gap = (first_moment - state.matrix().topLeftCorner(3, 3)).cwiseAbs().maxCoeff();
  out.push_back({"projected-ensemble mean equals the reduced covariance", moment_gap < 1e-10,
                 detail::format_value("max gap", moment_gap)});

  const Complex alpha = std::polar(0.5, std::sqrt(5.0));
  const auto dimer = build_dimer_covariance(16, alpha);
  const auto occupations = occupation_spectrum(alpha, 16);
  const auto measured = FourierBasis(16).momentum_occupations(dimer);
  double occ_gap = 0.0;
  for (std::size_t k = 0; k < occupations.size(); ++k) occ_gap = std::max(occ_gap, std::abs(measured[k] - occupations[k]));
  out.push_back({"dimer momentum occupations match n(k)", occ_gap < 1e-12, detail::format_value("max gap", occ_gap)});

  const TightBindingEvolver evolver(LatticeSpec(16, 2), dimer);
  const auto late = FourierBasis(16).momentum_occupations(evolver.at(7.3));
  double conserved_gap = 0.0;
  for (std::size_t k = 0; k < late.size(); ++k) conserved_gap = std::max(conserved_gap, std::abs(late[k] - occupations[k]));
  out.push_back({"evolution conserves momentum occupations", conserved_gap < 1e-10,
                 detail::format_value("max gap", conserved_gap)});

  double p_sum = 0.0;
  for (double p : number_distribution(32, 16, 6)) p_sum += p;
  out.push_back({"subsystem number distribution is normalised", std::abs(p_sum - 1.0) < 1e-12,
                 detail::format_value("|sum - 1|", std::abs(p_sum - 1.0))});

  nlohmann::json cfg{{"seed", seed},
                     {"lattice", {{"L", 8}, {"L_A", 2}}},
                     {"initial_state", {{"alpha_modulus", 0.5}, {"alpha_phase", std::sqrt(5.0)}}},
                     {"time_grid", {{"t_max", 2}}},
                     {"samplers", {{"samples", 200}, {"replicas", 2}}},
                     {"ensembles", {{{"kind", "single_eigenstate"}}}}};
  const auto config = parse_config(cfg);
  RunOptions serial, pooled;
  pooled.workers = 2;
  const auto a = run_pe_vs_ensemble(config, serial);
  const auto b = run_pe_vs_ensemble(config, pooled);
  const bool same = nlohmann::json(a.series) == nlohmann::json(b.series);
  out.push_back({"runs are reproducible for any worker count", same, same ? "identical" : "differ"});
  return out;
}

}  // namespace dgge
