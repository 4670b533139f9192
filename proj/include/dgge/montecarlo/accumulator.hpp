#pragma once

// Streaming k-fold moments of post-measurement covariance matrices.
//
// The k-th moment tensor C'^{(x)k} is stored flat with entry
// (i1, j1, i2, j2, ..., ik, jk) at offset ((i1 d + j1) d + i2) d + j2 ...,
// i.e. the Kronecker power of the row-major vectorisation of C'.

#include "dgge/gaussian/covariance.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>

namespace dgge {

inline constexpr Index kMaxTensorEntries = Index{1} << 22;

class MomentAccumulator {
 public:
  MomentAccumulator(int order, Index dim) : order_(order), dim_(dim) {
    if (order < 1) throw std::invalid_argument("moment order must be at least 1");
    if (dim < 1) throw std::invalid_argument("moment dimension must be positive");
    Index entries = 1;
    for (int m = 0; m < order; ++m) {
      if (entries > kMaxTensorEntries / (dim * dim))
        throw std::invalid_argument("moment tensor of order " + std::to_string(order) + " on " +
                                    std::to_string(dim) + " sites is too large");
      entries *= dim * dim;
    }
    mean_ = Vector::Zero(entries);
    m2_ = RealVector::Zero(entries);
  }

  int order() const { return order_; }
  Index dim() const { return dim_; }
  std::uint64_t count() const { return count_; }
  Index entries() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  /// Sum over samples of |x - mean|^2, per entry.
  const RealVector& m2() const { return m2_; }

  /// C^{(x)k} in the flat layout.
  static Vector tensor_power(const Matrix& c, int order) {
    const Index d = c.rows();
    Vector v(d * d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) v(i * d + j) = c(i, j);
    Vector t = v;
    for (int m = 1; m < order; ++m) {
      Vector next(t.size() * v.size());
      for (Index a = 0; a < t.size(); ++a) next.segment(a * v.size(), v.size()) = t(a) * v;
      t.swap(next);
    }
    return t;
  }

  void add(const CovarianceMatrix& c) {
    if (c.dim() != dim_) throw std::invalid_argument("sample dimension differs from the accumulator");
    const Vector x = tensor_power(c.matrix(), order_);
    ++count_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_.array() += (delta.conjugate().array() * (x - mean_).array()).real();
  }

  void merge(const MomentAccumulator& other) {
    if (other.order_ != order_ || other.dim_ != dim_) throw std::invalid_argument("cannot merge different moments");
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const Vector delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    m2_ += other.m2_ + delta.cwiseAbs2() * (na * nb / n);
    count_ += other.count_;
  }

  /// Sum over entries of the variance of the mean, i.e. the expected squared
  /// Frobenius distance of the running mean from its limit.
  double mean_variance() const {
    if (count_ < 2) return 0.0;
    const double n = static_cast<double>(count_);
    return m2_.sum() / (n * (n - 1.0));
  }

  friend void to_json(nlohmann::json& j, const MomentAccumulator& a) {
    std::vector<double> re(static_cast<std::size_t>(a.entries())), im(re.size()), m2(re.size());
    for (Index e = 0; e < a.entries(); ++e) {
      re[static_cast<std::size_t>(e)] = a.mean_(e).real();
      im[static_cast<std::size_t>(e)] = a.mean_(e).imag();
      m2[static_cast<std::size_t>(e)] = a.m2_(e);
    }
    j = nlohmann::json{{"order", a.order_}, {"dim", a.dim_}, {"count", a.count_},
                       {"mean_re", re},     {"mean_im", im}, {"m2", m2}};
  }

  static MomentAccumulator from_json(const nlohmann::json& j) {
    MomentAccumulator a(j.at("order").get<int>(), j.at("dim").get<Index>());
    a.count_ = j.at("count").get<std::uint64_t>();
    const auto re = j.at("mean_re").get<std::vector<double>>();
    const auto im = j.at("mean_im").get<std::vector<double>>();
    const auto m2 = j.at("m2").get<std::vector<double>>();
    if (static_cast<Index>(re.size()) != a.entries() || im.size() != re.size() || m2.size() != re.size())
      throw ConfigError("moment accumulator record has the wrong number of entries");
    for (Index e = 0; e < a.entries(); ++e) {
      a.mean_(e) = Complex(re[static_cast<std::size_t>(e)], im[static_cast<std::size_t>(e)]);
      a.m2_(e) = m2[static_cast<std::size_t>(e)];
    }
    return a;
  }

 private:
  int order_;
  Index dim_;
  std::uint64_t count_ = 0;
  Vector mean_;
  RealVector m2_;
};

/// Raw entrywise l2 distance between two moment tensors.
inline double frobenius_delta(const MomentAccumulator& a, const MomentAccumulator& b) {
  if (a.order() != b.order() || a.dim() != b.dim())
    throw std::invalid_argument("moment tensors differ in order or dimension");
  return (a.mean() - b.mean()).norm();
}

/// Expected value of frobenius_delta between two independent estimates of the
/// same tensor, from the accumulated variances.
inline double frobenius_noise(const MomentAccumulator& a, const MomentAccumulator& b) {
  return std::sqrt(a.mean_variance() + b.mean_variance());
}

/// Running mean and second central moment of a scalar.
class RunningMean {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningMean& o) {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count_), nb = static_cast<double>(o.count_), n = na + nb;
    const double delta = o.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    count_ += o.count_;
  }

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }

  friend void to_json(nlohmann::json& j, const RunningMean& r) {
    j = nlohmann::json{{"count", r.count_}, {"mean", r.mean_}, {"m2", r.m2_}};
  }
  friend void from_json(const nlohmann::json& j, RunningMean& r) {
    r.count_ = j.at("count").get<std::uint64_t>();
    r.mean_ = j.at("mean").get<double>();
    r.m2_ = j.at("m2").get<double>();
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace dgge
