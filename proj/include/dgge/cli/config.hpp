#pragma once

// Declarative experiment description, read from one JSON file.

#include "dgge/ensembles/ensemble_spec.hpp"
#include "dgge/ensembles/generalized_haar.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>

namespace dgge {

enum class PeSampler { direct, metropolis };

struct ReferenceConfig {
  EnsembleKind kind = EnsembleKind::single_eigenstate;
  std::string label;
  /// generalized_haar only: "gaussian", "calibrate" or a path to a multipliers file.
  std::string multipliers = "gaussian";
  Group group = Group::unitary;
  std::uint64_t thin = 0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  Index sites = 16;
  Index subsystem_sites = 2;
  Boundary boundary = Boundary::periodic;
  double alpha_modulus = 0.0;
  double alpha_phase = 0.0;
  double t_min = 0.0;  // 0 selects dt
  double t_max = 4.0;
  double dt = 1.0;
  PeSampler sampler = PeSampler::direct;
  /// Total samples per time step and per reference ensemble, over all replicas.
  std::uint64_t samples = 1000;
  int replicas = 4;
  int k_max = 3;
  std::vector<ReferenceConfig> ensembles;
  CalibrationOptions calibration;
  std::string initial_multipliers = "gaussian";
  Group number_group = Group::orthogonal;
  std::uint64_t number_samples = 100000;
  /// The document this config was parsed from; identifies checkpoints.
  nlohmann::json source;

  LatticeSpec lattice() const { return LatticeSpec(sites, subsystem_sites, boundary); }
  Complex alpha() const { return std::polar(alpha_modulus, alpha_phase); }
  Index particles() const { return sites / 2; }

  /// Grid indices i with t_min <= i dt <= t_max; t_min defaults to dt.
  std::vector<std::uint64_t> time_indices() const {
    const auto first = std::max(1L, static_cast<long>(std::ceil((t_min > 0.0 ? t_min : dt) / dt - 1e-9)));
    const auto last = static_cast<long>(std::floor(t_max / dt + 1e-9));
    std::vector<std::uint64_t> idx;
    for (long i = first; i <= last; ++i) idx.push_back(static_cast<std::uint64_t>(i));
    return idx;
  }

  std::vector<double> times() const {
    std::vector<double> ts;
    for (auto i : time_indices()) ts.push_back(static_cast<double>(i) * dt);
    return ts;
  }

  void validate() const {
    if (sites < 2 || sites % 2 != 0) throw ConfigError("lattice.L must be even and at least 2");
    if (subsystem_sites < 1 || subsystem_sites >= sites) throw ConfigError("lattice.L_A must lie in [1, L)");
    if (!(dt > 0.0) || !(t_max >= dt) || !(t_min >= 0.0)) throw ConfigError("time_grid needs 0 < dt <= t_max");
    if (time_indices().empty()) throw ConfigError("time_grid is empty");
    if (replicas < 1) throw ConfigError("samplers.replicas must be positive");
    if (samples < static_cast<std::uint64_t>(replicas)) throw ConfigError("need at least one sample per replica");
    if (k_max < 1 || k_max > 3) throw ConfigError("k_max must be 1, 2 or 3");
    MomentAccumulator_check(subsystem_sites, k_max);
  }

 private:
  static void MomentAccumulator_check(Index la, int k) {
    Index entries = 1;
    for (int m = 0; m < k; ++m) entries *= la * la;
    if (entries > (Index{1} << 22)) throw ConfigError("moment tensors too large for L_A and k_max");
  }
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.contains("seed")) throw ConfigError("config must set an explicit \"seed\"");
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& lat = j.at("lattice");
    c.sites = lat.at("L").get<Index>();
    c.subsystem_sites = lat.at("L_A").get<Index>();
    c.boundary = boundary_from_string(detail::get_or<std::string>(lat, "boundary", "periodic"));
    if (j.contains("initial_state")) {
      const auto& s = j.at("initial_state");
      c.alpha_modulus = detail::get_or(s, "alpha_modulus", 0.0);
      c.alpha_phase = detail::get_or(s, "alpha_phase", 0.0);
    }
    if (j.contains("time_grid")) {
      const auto& g = j.at("time_grid");
      c.t_min = detail::get_or(g, "t_min", c.t_min);
      c.t_max = detail::get_or(g, "t_max", c.t_max);
      c.dt = detail::get_or(g, "dt", c.dt);
    }
    if (j.contains("samplers")) {
      const auto& s = j.at("samplers");
      const auto kind = detail::get_or<std::string>(s, "kind", "direct");
      if (kind == "direct") c.sampler = PeSampler::direct;
      else if (kind == "metropolis") c.sampler = PeSampler::metropolis;
      else throw ConfigError("samplers.kind must be \"direct\" or \"metropolis\"");
      c.samples = detail::get_or(s, "samples", c.samples);
      c.replicas = detail::get_or(s, "replicas", c.replicas);
    }
    c.k_max = detail::get_or(j, "k_max", c.k_max);
    if (j.contains("ensembles")) {
      for (const auto& e : j.at("ensembles")) {
        ReferenceConfig r;
        r.kind = ensemble_kind_from_string(e.at("kind").get<std::string>());
        if (r.kind == EnsembleKind::projected) throw ConfigError("the projected ensemble is always sampled; list only references");
        r.label = detail::get_or<std::string>(e, "label", to_string(r.kind));
        r.multipliers = detail::get_or<std::string>(e, "multipliers", r.multipliers);
        r.group = group_from_string(detail::get_or<std::string>(e, "group", "unitary"));
        r.thin = detail::get_or<std::uint64_t>(e, "thin", 0);
        c.ensembles.push_back(std::move(r));
      }
    }
    if (j.contains("calibration")) {
      const auto& k = j.at("calibration");
      c.calibration.group = group_from_string(detail::get_or<std::string>(k, "group", "unitary"));
      c.calibration.iterations = detail::get_or(k, "iterations", c.calibration.iterations);
      c.calibration.chain_steps = detail::get_or(k, "chain_steps", c.calibration.chain_steps);
      c.calibration.burn_in = detail::get_or(k, "burn_in", c.calibration.burn_in);
      c.calibration.step = detail::get_or(k, "step", c.calibration.step);
      c.calibration.eta = detail::get_or(k, "eta", c.calibration.eta);
      c.calibration.tail_fraction = detail::get_or(k, "tail_fraction", c.calibration.tail_fraction);
      c.initial_multipliers = detail::get_or<std::string>(k, "initial", c.initial_multipliers);
    }
    if (j.contains("number_dist")) {
      const auto& n = j.at("number_dist");
      c.number_group = group_from_string(detail::get_or<std::string>(n, "group", "orthogonal"));
      c.number_samples = detail::get_or(n, "samples", c.number_samples);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.source = j;
  c.validate();
  return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {}) {
  auto j = read_json_file(path);
  if (seed_override) j["seed"] = *seed_override;
  return parse_config(j);
}

}  // namespace dgge
