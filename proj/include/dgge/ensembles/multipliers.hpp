#pragma once

#include "dgge/core.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

namespace dgge {

/// Per-momentum multipliers of the generalized Haar weight
/// exp(-sum_k omega_k X_k), stored as omega_k = L z(2 pi k / L) in the
/// zero-sum gauge. `gamma` and `offset` are only filled by the Gaussian
/// approximation: the un-shifted multipliers are omega + offset.
struct Multipliers {
  std::vector<double> omega;
  std::vector<double> gamma;
  double offset = 0.0;

  static Multipliers zero(Index sites) { return {std::vector<double>(static_cast<std::size_t>(sites), 0.0), {}, 0.0}; }

  Index sites() const { return static_cast<Index>(omega.size()); }

  /// z(k) = omega_k / L.
  std::vector<double> z() const {
    std::vector<double> out(omega);
    for (double& x : out) x /= static_cast<double>(omega.size());
    return out;
  }

  void recenter() {
    if (omega.empty()) return;
    const double mean = std::accumulate(omega.begin(), omega.end(), 0.0) / static_cast<double>(omega.size());
    for (double& x : omega) x -= mean;
    offset += mean;
  }

  double sum() const { return std::accumulate(omega.begin(), omega.end(), 0.0); }
};

/// Large-L Gaussian solution for the multipliers, shifted to the zero-sum gauge.
inline Multipliers gaussian_omega(const std::vector<double>& occupations) {
  const std::size_t L = occupations.size();
  if (L == 0) throw std::invalid_argument("empty occupation vector");
  double mean = 0.0;
  for (double x : occupations) {
    if (!(x > 0.0 && x < 1.0))
      throw std::invalid_argument("Gaussian multipliers need occupations strictly inside (0, 1)");
    mean += x;
  }
  mean /= static_cast<double>(L);
  const double l = static_cast<double>(L);
  Multipliers m;
  m.omega.resize(L);
  m.gamma.resize(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double nk = occupations[k];
    m.omega[k] = -l * (nk - mean) / ((1.0 - nk) * nk);
    m.gamma[k] = l * (1.0 - mean) / (1.0 - nk);
  }
  m.recenter();
  return m;
}

/// (2/L) sum_k v_k cos(m (2 pi k / L - theta)): amplitude of the m-th
/// harmonic of a function sampled on the momentum grid.
inline double harmonic_amplitude(const std::vector<double>& values, int harmonic, double theta = 0.0) {
  const double L = static_cast<double>(values.size());
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k)
    s += values[k] * std::cos(harmonic * (2.0 * std::numbers::pi * static_cast<double>(k) / L - theta));
  return 2.0 * s / L;
}

inline void to_json(nlohmann::json& j, const Multipliers& m) {
  j = nlohmann::json{{"L", m.omega.size()}, {"omega", m.omega}};
  if (!m.gamma.empty()) j["gamma"] = m.gamma;
  if (m.offset != 0.0) j["offset"] = m.offset;
}

inline void from_json(const nlohmann::json& j, Multipliers& m) {
  const auto L = j.at("L").get<std::size_t>();
  m.omega = j.at("omega").get<std::vector<double>>();
  if (m.omega.size() != L) throw ConfigError("multiplier file: omega has " + std::to_string(m.omega.size()) +
                                             " entries, expected L = " + std::to_string(L));
  m.gamma = j.value("gamma", std::vector<double>{});
  m.offset = j.value("offset", 0.0);
  for (double x : m.omega)
    if (!std::isfinite(x)) throw ConfigError("multiplier file: non-finite omega");
}

}  // namespace dgge
