#pragma once

// Common vocabulary: matrix aliases, error types, lattice geometry and
// seed derivation shared by every part of the library.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgge {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Measurement outcomes on the bath, one entry (0 or 1) per bath site,
/// ordered from the leftmost bath site to the rightmost.
using Outcomes = std::vector<std::uint8_t>;

// ---------------------------------------------------------------------------
// Errors

/// A measurement outcome whose (conditional) probability is numerically zero.
class ForbiddenOutcome : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A covariance matrix that is not a valid fermionic state.
class InvalidState : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CalibrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Outcomes with a conditional probability below this are treated as impossible.
inline constexpr double kForbiddenThreshold = 1e-12;

/// Eigenvalues of a covariance matrix may leave [0, 1] by this much before
/// the state is rejected; inside the band they are clamped.
inline constexpr double kSpectrumTolerance = 1e-8;

// ---------------------------------------------------------------------------
// Lattice

enum class Boundary { periodic, open };

inline std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "open") return Boundary::open;
  throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

/// Chain of `sites` sites split into a subsystem A (the leftmost
/// `subsystem_sites` sites, indices [0, L_A)) and a bath B (indices [L_A, L)).
/// Indices are zero-based throughout the library.
class LatticeSpec {
 public:
  LatticeSpec(Index sites, Index subsystem_sites, Boundary boundary = Boundary::periodic)
      : sites_(sites), subsystem_(subsystem_sites), boundary_(boundary) {
    if (sites_ < 2) throw std::invalid_argument("lattice needs at least two sites");
    if (subsystem_ < 1 || subsystem_ >= sites_)
      throw std::invalid_argument("subsystem and bath must both be non-empty");
  }

  Index sites() const { return sites_; }
  Index subsystem_sites() const { return subsystem_; }
  Index bath_sites() const { return sites_ - subsystem_; }
  Index bath_begin() const { return subsystem_; }
  Boundary boundary() const { return boundary_; }
  bool in_subsystem(Index site) const { return site >= 0 && site < subsystem_; }

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

 private:
  Index sites_;
  Index subsystem_;
  Boundary boundary_;
};

// ---------------------------------------------------------------------------
// Seeds
//
// All randomness descends from one 64-bit root seed. A stream is identified by
// a short path of integers (e.g. {tag, time index, replica, chunk}); its seed
// is obtained by folding each path element into the root with SplitMix64:
//
//   s_0 = root,  s_{i+1} = splitmix64(s_i ^ splitmix64(p_i + 0x9e3779b97f4a7c15 * (i + 1)))
//
// Distinct paths give statistically independent mt19937_64 streams.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = root;
  std::uint64_t i = 0;
  for (auto p : path) {
    ++i;
    s = splitmix64(s ^ splitmix64(p + 0x9e3779b97f4a7c15ULL * i));
  }
  return s;
}

}  // namespace dgge
