#pragma once

// Generalized (canonical) Haar ensemble: momentum-space unitaries U~ weighted
// by exp(-Tr[Omega U~ D U~^dag]) = exp(-sum_k omega_k X_k), with
// X_k = sum_{i<N} |U~_ki|^2, sampled by a Metropolis-Hastings walk of 2x2
// rotations, plus the gradient-descent calibration of the multipliers.

#include "dgge/ensembles/fourier.hpp"
#include "dgge/ensembles/haar.hpp"
#include "dgge/ensembles/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

namespace dgge {

enum class RotationAxis { x, y, z };

/// U~' = U~ exp(i phi sigma_axis / 2) acting on columns (i, j).
struct HaarProposal {
  Index i = 0;
  Index j = 1;
  RotationAxis axis = RotationAxis::y;
  double phi = 0.0;

  HaarProposal inverse() const { return {i, j, axis, -phi}; }
};

/// Moves that cannot change the weight: both columns in the same filling
/// block, or a pure phase.
inline bool is_weight_neutral(const HaarProposal& p, Index particles) {
  return p.axis == RotationAxis::z || ((p.i < particles) == (p.j < particles));
}

/// Uniform distinct pair, uniform angle on [0, 2 pi). The unitary walk picks
/// x, y or z with probability 1/3; the orthogonal walk only uses the real
/// rotation generated by sigma_y.
template <class Urbg>
HaarProposal draw_haar_proposal(Index sites, Group group, Urbg& rng) {
  if (sites < 2) throw std::invalid_argument("rotation proposals need at least two columns");
  std::uniform_int_distribution<Index> first(0, sites - 1);
  std::uniform_int_distribution<Index> second(0, sites - 2);
  HaarProposal p;
  p.i = first(rng);
  p.j = second(rng);
  if (p.j >= p.i) ++p.j;
  if (group == Group::unitary) {
    std::uniform_int_distribution<int> axis(0, 2);
    p.axis = static_cast<RotationAxis>(axis(rng));
  } else {
    p.axis = RotationAxis::y;
  }
  p.phi = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  return p;
}

namespace detail {

// 2x2 block g of exp(i phi sigma / 2); new columns are
// u_i' = g00 u_i + g10 u_j and u_j' = g01 u_i + g11 u_j.
struct RotationBlock {
  Complex g00, g01, g10, g11;
};

inline RotationBlock rotation_block(RotationAxis axis, double phi) {
  const double c = std::cos(0.5 * phi);
  const double s = std::sin(0.5 * phi);
  const Complex i(0.0, 1.0);
  switch (axis) {
    case RotationAxis::x:
      return {c, i * s, i * s, c};
    case RotationAxis::y:
      return {c, s, -s, c};
    case RotationAxis::z:
      break;
  }
  return {std::polar(1.0, 0.5 * phi), 0.0, 0.0, std::polar(1.0, -0.5 * phi)};
}

}  // namespace detail

inline void apply_proposal(Matrix& u, const HaarProposal& p) {
  const auto g = detail::rotation_block(p.axis, p.phi);
  for (Index k = 0; k < u.rows(); ++k) {
    const Complex a = u(k, p.i);
    const Complex b = u(k, p.j);
    u(k, p.i) = g.g00 * a + g.g10 * b;
    u(k, p.j) = g.g01 * a + g.g11 * b;
  }
}

/// Tr[Omega U~' D U~'^dag] - Tr[Omega U~ D U~^dag]; only the occupied column
/// of a mixed pair contributes.
inline double trace_change(const Matrix& u, const HaarProposal& p, const std::vector<double>& omega, Index particles) {
  if (is_weight_neutral(p, particles)) return 0.0;
  const auto g = detail::rotation_block(p.axis, p.phi);
  const bool i_occupied = p.i < particles;
  double delta = 0.0;
  for (Index k = 0; k < u.rows(); ++k) {
    const Complex a = u(k, p.i);
    const Complex b = u(k, p.j);
    const Complex moved = i_occupied ? g.g00 * a + g.g10 * b : g.g01 * a + g.g11 * b;
    const Complex old = i_occupied ? a : b;
    delta += omega[static_cast<std::size_t>(k)] * (std::norm(moved) - std::norm(old));
  }
  return delta;
}

/// Metropolis acceptance min(1, exp(-(Tr' - Tr))) for the weight exp(-Tr).
template <class Urbg>
bool accept_trace_change(double delta, Urbg& rng) {
  if (delta <= 0.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < std::exp(-delta);
}

/// One proposal/acceptance round; returns the new element and whether the
/// proposal was accepted.
template <class Urbg>
std::pair<Matrix, bool> metropolis_haar_step(const Matrix& u, const Multipliers& omega, Index particles, Group group,
                                             Urbg& rng) {
  if (omega.sites() != u.rows()) throw std::invalid_argument("multipliers do not match the matrix size");
  const HaarProposal p = draw_haar_proposal(u.cols(), group, rng);
  if (!is_weight_neutral(p, particles) && !accept_trace_change(trace_change(u, p, omega.omega, particles), rng))
    return {u, false};
  Matrix next = u;
  apply_proposal(next, p);
  return {std::move(next), true};
}

/// X_k = sum_{i<N} |U~_ki|^2.
inline RealVector column_weights(const Matrix& u, Index particles) {
  return u.leftCols(particles).rowwise().squaredNorm();
}

/// Persistent Metropolis chain on the group, tracking X_k incrementally.
class GeneralizedHaarChain {
 public:
  GeneralizedHaarChain(Multipliers omega, Index particles, Group group, Matrix start)
      : omega_(std::move(omega)), particles_(particles), group_(group), u_(std::move(start)) {
    if (u_.rows() != u_.cols()) throw std::invalid_argument("chain needs a square starting matrix");
    if (omega_.sites() != u_.rows()) throw std::invalid_argument("multipliers do not match the matrix size");
    if (particles_ < 0 || particles_ > u_.rows()) throw std::invalid_argument("particle number outside [0, L]");
    x_ = dgge::column_weights(u_, particles_);
  }

  /// Chain started from an exact Haar sample (the Omega = 0 stationary law).
  template <class Urbg>
  static GeneralizedHaarChain from_haar(Multipliers omega, Index particles, Group group, Urbg& rng) {
    const Index L = omega.sites();
    Matrix start = haar_columns(group, L, L, rng);
    return GeneralizedHaarChain(std::move(omega), particles, group, std::move(start));
  }

  Index sites() const { return u_.rows(); }
  Index particles() const { return particles_; }
  Group group() const { return group_; }
  const Matrix& unitary() const { return u_; }
  const RealVector& column_weights() const { return x_; }
  const Multipliers& multipliers() const { return omega_; }
  std::uint64_t proposed() const { return proposed_; }
  std::uint64_t accepted() const { return accepted_; }

  void set_multipliers(Multipliers omega) {
    if (omega.sites() != sites()) throw std::invalid_argument("multipliers do not match the matrix size");
    omega_ = std::move(omega);
  }

  template <class Urbg>
  bool step(Urbg& rng) {
    const HaarProposal p = draw_haar_proposal(sites(), group_, rng);
    ++proposed_;
    if (!is_weight_neutral(p, particles_) && !accept_trace_change(trace_change(u_, p, omega_.omega, particles_), rng))
      return false;
    const bool mixed = !is_weight_neutral(p, particles_);
    const Index occupied = p.i < particles_ ? p.i : p.j;
    if (mixed) x_ -= u_.col(occupied).cwiseAbs2();
    apply_proposal(u_, p);
    ++accepted_;
    if (mixed) {
      x_ += u_.col(occupied).cwiseAbs2();
      if (++mixed_moves_ % kRefresh == 0) x_ = dgge::column_weights(u_, particles_);
    }
    return true;
  }

  template <class Urbg>
  void advance(std::uint64_t steps, Urbg& rng) {
    for (std::uint64_t s = 0; s < steps; ++s) step(rng);
  }

  /// Real-space covariance F^dag U~ D U~^dag F of the current element.
  CovarianceMatrix covariance(const FourierBasis& basis) const {
    return basis.real_space_covariance(u_.leftCols(particles_));
  }

 private:
  static constexpr std::uint64_t kRefresh = 4096;

  Multipliers omega_;
  Index particles_;
  Group group_;
  Matrix u_;
  RealVector x_;
  std::uint64_t mixed_moves_ = 0;
  std::uint64_t proposed_ = 0;
  std::uint64_t accepted_ = 0;
};

/// Particle number implied by an occupation function, sum_k n(k) rounded.
inline Index particles_from_occupations(const std::vector<double>& occupations) {
  double s = 0.0;
  for (double x : occupations) s += x;
  return static_cast<Index>(std::llround(s));
}

struct ChainSchedule {
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::size_t count = 0;
};

/// `count` covariances F^dag U~ D U~^dag F taken every `thin` proposals after
/// `burn_in` proposals of a chain started from a Haar sample.
template <class Urbg>
std::vector<CovarianceMatrix> sample_generalized_haar(const Multipliers& omega, Index particles, Group group,
                                                      const ChainSchedule& schedule, Urbg& rng) {
  auto chain = GeneralizedHaarChain::from_haar(omega, particles, group, rng);
  const FourierBasis basis(omega.sites());
  chain.advance(schedule.burn_in, rng);
  std::vector<CovarianceMatrix> out;
  out.reserve(schedule.count);
  for (std::size_t s = 0; s < schedule.count; ++s) {
    chain.advance(std::max<std::uint64_t>(schedule.thin, 1), rng);
    out.push_back(chain.covariance(basis));
  }
  return out;
}

template <class Urbg>
std::vector<CovarianceMatrix> sample_generalized_haar(const std::vector<double>& occupations, const Multipliers& omega,
                                                      Group group, const ChainSchedule& schedule, Urbg& rng) {
  if (static_cast<Index>(occupations.size()) != omega.sites())
    throw std::invalid_argument("occupations and multipliers differ in length");
  return sample_generalized_haar(omega, particles_from_occupations(occupations), group, schedule, rng);
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationOptions {
  Group group = Group::unitary;
  int iterations = 50;
  /// Sweeps of L proposals per iteration.
  std::uint64_t chain_steps = 2000;
  /// Proposals before the first iteration; 0 selects 10 L^2.
  std::uint64_t burn_in = 0;
  /// Fixed descent step; 0 selects eta / v^2, v the largest eigenvalue of the
  /// covariance of X.
  double step = 0.0;
  double eta = 0.5;
  /// The returned multipliers average the last fraction of iterations.
  double tail_fraction = 0.5;
};

struct CalibrationIteration {
  int iteration = 0;
  double residual = 0.0;   // max_k |<X_k> - n(k)|
  double objective = 0.0;  // 1/2 sum_k (<X_k> - n(k))^2
  double step = 0.0;
  double acceptance = 0.0;
};

struct CalibrationResult {
  Multipliers multipliers;
  std::vector<CalibrationIteration> trace;
  double residual = 0.0;
};

struct ColumnWeightMoments {
  RealVector mean;
  RealMatrix covariance;
};

/// Mean and covariance of X_k recorded once per sweep of L proposals.
template <class Urbg>
ColumnWeightMoments chain_moments(GeneralizedHaarChain& chain, std::uint64_t sweeps, Urbg& rng) {
  const Index L = chain.sites();
  RealVector sum = RealVector::Zero(L);
  RealMatrix outer = RealMatrix::Zero(L, L);
  const RealVector shift = chain.column_weights();
  for (std::uint64_t s = 0; s < sweeps; ++s) {
    chain.advance(static_cast<std::uint64_t>(L), rng);
    const RealVector d = chain.column_weights() - shift;
    sum += d;
    outer.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  const double n = static_cast<double>(std::max<std::uint64_t>(sweeps, 1));
  ColumnWeightMoments m;
  const RealVector mean_shifted = sum / n;
  m.mean = shift + mean_shifted;
  m.covariance = RealMatrix(outer.selfadjointView<Eigen::Lower>()) / n - mean_shifted * mean_shifted.transpose();
  return m;
}

/// Gradient descent omega_l -= gamma sum_k (n(k) - <X_k>) <X_k X_l>_c with the
/// moments estimated from `chain_steps` sweeps of a persistent chain, and
/// the zero-sum gauge restored after every update.
template <class Urbg>
CalibrationResult calibrate_omega(const std::vector<double>& target, const Multipliers& initial,
                                  const CalibrationOptions& options, Urbg& rng) {
  const Index L = static_cast<Index>(target.size());
  if (initial.sites() != L) throw std::invalid_argument("initial multipliers do not match the target length");
  if (options.iterations < 1) throw std::invalid_argument("calibration needs at least one iteration");
  const Index N = particles_from_occupations(target);
  if (N <= 0 || N >= L) throw std::invalid_argument("calibration needs 0 < N < L");

  Multipliers omega = initial;
  omega.gamma.clear();
  omega.offset = 0.0;
  omega.recenter();
  omega.offset = 0.0;

  RealVector n(L);
  for (Index k = 0; k < L; ++k) n(k) = target[static_cast<std::size_t>(k)];

  auto chain = GeneralizedHaarChain::from_haar(omega, N, options.group, rng);
  chain.advance(options.burn_in ? options.burn_in : static_cast<std::uint64_t>(10 * L * L), rng);

  const int tail_start =
      options.iterations - std::max(1, static_cast<int>(std::lround(options.tail_fraction * options.iterations)));
  RealVector tail_sum = RealVector::Zero(L);
  int tail_count = 0;

  CalibrationResult result;
  for (int it = 0; it < options.iterations; ++it) {
    const auto proposed = chain.proposed();
    const auto accepted = chain.accepted();
    const auto m = chain_moments(chain, options.chain_steps, rng);
    if (!m.mean.allFinite() || !m.covariance.allFinite())
      throw CalibrationFailure("non-finite column-weight moments at iteration " + std::to_string(it));

    const RealVector gap = n - m.mean;
    CalibrationIteration rec;
    rec.iteration = it;
    rec.residual = gap.cwiseAbs().maxCoeff();
    rec.objective = 0.5 * gap.squaredNorm();
    rec.acceptance = static_cast<double>(chain.accepted() - accepted) /
                     static_cast<double>(std::max<std::uint64_t>(chain.proposed() - proposed, 1));

    double gamma = options.step;
    if (gamma <= 0.0) {
      const double v = Eigen::SelfAdjointEigenSolver<RealMatrix>(m.covariance, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
      if (!(v > 0.0)) throw CalibrationFailure("column weights did not fluctuate; increase the chain length");
      gamma = options.eta / (v * v);
    }
    rec.step = gamma;
    const RealVector grad = m.covariance * gap;
    for (Index k = 0; k < L; ++k) omega.omega[static_cast<std::size_t>(k)] -= gamma * grad(k);
    omega.recenter();
    omega.offset = 0.0;
    for (double x : omega.omega)
      if (!std::isfinite(x)) throw CalibrationFailure("non-finite multiplier at iteration " + std::to_string(it));
    chain.set_multipliers(omega);
    result.trace.push_back(rec);

    if (it >= tail_start) {
      for (Index k = 0; k < L; ++k) tail_sum(k) += omega.omega[static_cast<std::size_t>(k)];
      ++tail_count;
    }
  }

  result.multipliers = Multipliers::zero(L);
  for (Index k = 0; k < L; ++k) result.multipliers.omega[static_cast<std::size_t>(k)] = tail_sum(k) / tail_count;
  result.multipliers.recenter();
  result.multipliers.offset = 0.0;
  result.residual = result.trace.back().residual;
  return result;
}

}  // namespace dgge
