#pragma once

// Random momentum eigenstates c~^dag_{k1} ... c~^dag_{kN} |0> whose momenta are
// drawn from an occupation function n(k) with exactly N particles.
//
// Selection is conditional Bernoulli sampling: independent inclusions with odds
// w_k, conditioned on exactly N successes. The odds are fitted once so that the
// conditioned inclusion marginals equal the target occupations, then each draw
// walks the momenta in order using elementary-symmetric-polynomial tables.

#include "dgge/ensembles/fourier.hpp"

#include <cmath>
#include <random>

namespace dgge {

class SingleEigenstateSampler {
 public:
  SingleEigenstateSampler(std::vector<double> occupations, Index particles)
      : n_(std::move(occupations)), particles_(particles), basis_(static_cast<Index>(n_.size())) {
    const Index L = static_cast<Index>(n_.size());
    if (particles_ < 0 || particles_ > L) throw std::invalid_argument("particle number outside [0, L]");
    double sum = 0.0;
    for (double x : n_) {
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("occupations must lie in [0, 1]");
      sum += x;
    }
    if (std::abs(sum - static_cast<double>(particles_)) > 0.5)
      throw std::invalid_argument("occupations do not sum to the particle number");

    Index forced = 0;
    for (std::size_t k = 0; k < n_.size(); ++k) {
      if (n_[k] >= 1.0) {
        ++forced;
      } else if (n_[k] > 0.0) {
        free_.push_back(k);
      }
    }
    free_particles_ = particles_ - forced;
    if (free_particles_ < 0 || free_particles_ > static_cast<Index>(free_.size()))
      throw std::invalid_argument("no momentum configuration has the requested particle number");
    fit_odds();
  }

  Index sites() const { return basis_.sites(); }
  Index particles() const { return particles_; }

  /// Inclusion probability of every momentum under the fitted design.
  std::vector<double> inclusion_probabilities() const {
    std::vector<double> pi(n_.size(), 0.0);
    for (std::size_t k = 0; k < n_.size(); ++k)
      if (n_[k] >= 1.0) pi[k] = 1.0;
    const auto free_pi = free_marginals(odds_);
    for (std::size_t f = 0; f < free_.size(); ++f) pi[free_[f]] = free_pi[f];
    return pi;
  }

  template <class Urbg>
  std::vector<std::uint8_t> sample_momenta(Urbg& rng) const {
    std::vector<std::uint8_t> occ(n_.size(), 0);
    for (std::size_t k = 0; k < n_.size(); ++k)
      if (n_[k] >= 1.0) occ[k] = 1;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Index remaining = free_particles_;
    const std::size_t K = free_.size();
    for (std::size_t f = 0; f < K && remaining > 0; ++f) {
      const long double denom = tail_[f][static_cast<std::size_t>(remaining)];
      const long double take = odds_[f] * tail_[f + 1][static_cast<std::size_t>(remaining - 1)];
      if (u(rng) < static_cast<double>(take / denom)) {
        occ[free_[f]] = 1;
        --remaining;
      }
    }
    return occ;
  }

  template <class Urbg>
  CovarianceMatrix sample(Urbg& rng) const {
    return basis_.eigenstate_covariance(sample_momenta(rng));
  }

 private:
  // tail[f][m] = e_m(w_f, ..., w_{K-1}).
  static std::vector<std::vector<long double>> tail_tables(const std::vector<long double>& w, Index m_max) {
    const std::size_t K = w.size();
    const std::size_t M = static_cast<std::size_t>(m_max);
    std::vector<std::vector<long double>> t(K + 1, std::vector<long double>(M + 1, 0.0L));
    t[K][0] = 1.0L;
    for (std::size_t f = K; f-- > 0;) {
      t[f][0] = 1.0L;
      for (std::size_t m = 1; m <= M; ++m) t[f][m] = t[f + 1][m] + w[f] * t[f + 1][m - 1];
    }
    return t;
  }

  std::vector<double> free_marginals(const std::vector<long double>& w) const {
    const std::size_t K = w.size();
    const std::size_t M = static_cast<std::size_t>(free_particles_);
    std::vector<double> pi(K, 0.0);
    if (M == 0) return pi;
    const auto tail = tail_tables(w, free_particles_);
    // head[m] = e_m(w_0, ..., w_{f-1}), advanced as f grows.
    std::vector<long double> head(M + 1, 0.0L);
    head[0] = 1.0L;
    const long double total = tail[0][M];
    for (std::size_t f = 0; f < K; ++f) {
      long double s = 0.0L;
      for (std::size_t m = 0; m < M; ++m) s += head[m] * tail[f + 1][M - 1 - m];
      pi[f] = static_cast<double>(w[f] * s / total);
      for (std::size_t m = M; m > 0; --m) head[m] += w[f] * head[m - 1];
    }
    return pi;
  }

  void fit_odds() {
    const std::size_t K = free_.size();
    std::vector<double> target(K);
    for (std::size_t f = 0; f < K; ++f) target[f] = n_[free_[f]];
    // Shift the logits so the targets sum to the free particle number exactly.
    double lo = -50.0, hi = 50.0;
    auto shifted_sum = [&](double c) {
      double s = 0.0;
      for (double x : target) s += 1.0 / (1.0 + std::exp(-(std::log(x / (1.0 - x)) + c)));
      return s;
    };
    if (K > 0 && free_particles_ > 0 && free_particles_ < static_cast<Index>(K)) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (shifted_sum(mid) < static_cast<double>(free_particles_) ? lo : hi) = mid;
      }
      const double c = 0.5 * (lo + hi);
      for (double& x : target) x = 1.0 / (1.0 + std::exp(-(std::log(x / (1.0 - x)) + c)));
    }

    odds_.assign(K, 1.0L);
    for (std::size_t f = 0; f < K; ++f) odds_[f] = target[f] / (1.0 - target[f]);
    if (free_particles_ > 0 && free_particles_ < static_cast<Index>(K)) {
      for (int it = 0; it < 1000; ++it) {
        const auto pi = free_marginals(odds_);
        double worst = 0.0;
        for (std::size_t f = 0; f < K; ++f) {
          worst = std::max(worst, std::abs(pi[f] - target[f]));
          const double ratio = (target[f] / (1.0 - target[f])) / (pi[f] / (1.0 - pi[f]));
          odds_[f] *= ratio;
        }
        if (worst < 1e-14) break;
      }
    }
    tail_ = tail_tables(odds_, free_particles_);
  }

  std::vector<double> n_;
  Index particles_;
  FourierBasis basis_;
  std::vector<std::size_t> free_;
  Index free_particles_ = 0;
  std::vector<long double> odds_;
  std::vector<std::vector<long double>> tail_;
};

/// One-shot draw; build a SingleEigenstateSampler when drawing repeatedly.
template <class Urbg>
CovarianceMatrix sample_single_eigenstate(const std::vector<double>& occupations, Index particles, Urbg& rng) {
  return SingleEigenstateSampler(occupations, particles).sample(rng);
}

}  // namespace dgge
