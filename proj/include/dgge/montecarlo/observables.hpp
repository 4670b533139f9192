#pragma once

#include "dgge/gaussian/entropy.hpp"
#include "dgge/gaussian/measurement.hpp"
#include "dgge/montecarlo/accumulator.hpp"

#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>

namespace dgge {

/// Moments k = 1..k_max and the space-averaged entropy of a sample of
/// post-measurement states.
class EnsembleStatistics {
 public:
  EnsembleStatistics(int k_max, Index dim) {
    if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    for (int k = 1; k <= k_max; ++k) moments_.emplace_back(k, dim);
  }

  int k_max() const { return static_cast<int>(moments_.size()); }
  Index dim() const { return moments_.front().dim(); }
  std::uint64_t count() const { return moments_.front().count(); }
  const MomentAccumulator& moment(int k) const { return moments_.at(static_cast<std::size_t>(k - 1)); }
  const RunningMean& entropy() const { return entropy_; }

  void add(const CovarianceMatrix& post_state) {
    for (auto& m : moments_) m.add(post_state);
    entropy_.add(space_averaged_entropy(post_state));
  }
  void add(const MeasurementRecord& rec) { add(rec.post_state); }

  void merge(const EnsembleStatistics& other) {
    if (other.k_max() != k_max()) throw std::invalid_argument("cannot merge statistics with different k_max");
    for (std::size_t k = 0; k < moments_.size(); ++k) moments_[k].merge(other.moments_[k]);
    entropy_.merge(other.entropy_);
  }

  friend void to_json(nlohmann::json& j, const EnsembleStatistics& s) {
    j = nlohmann::json{{"moments", s.moments_}, {"entropy", s.entropy_}};
  }

  static EnsembleStatistics from_json(const nlohmann::json& j) {
    const auto& ms = j.at("moments");
    if (!ms.is_array() || ms.empty()) throw ConfigError("statistics record without moments");
    EnsembleStatistics s(static_cast<int>(ms.size()), ms.front().at("dim").get<Index>());
    for (std::size_t k = 0; k < ms.size(); ++k) s.moments_[k] = MomentAccumulator::from_json(ms[k]);
    s.entropy_ = j.at("entropy").get<RunningMean>();
    return s;
  }

 private:
  std::vector<MomentAccumulator> moments_;
  RunningMean entropy_;
};

/// Sample mean of the space-averaged entropy over a stream of records.
inline double space_averaged_entropy(std::span<const MeasurementRecord> records, const LatticeSpec& lattice) {
  if (lattice.subsystem_sites() < 2) throw std::invalid_argument("space-averaged entropy needs L_A >= 2");
  if (records.empty()) throw std::invalid_argument("no records to average");
  RunningMean m;
  for (const auto& r : records) m.add(space_averaged_entropy(r.post_state));
  return m.mean();
}

/// Relative Monte Carlo error: population standard deviation of the replica
/// means divided by their mean.
inline double mc_relative_error(std::span<const double> replica_means) {
  if (replica_means.size() < 2) throw std::invalid_argument("relative error needs at least two replicas");
  double mean = 0.0;
  for (double x : replica_means) mean += x;
  mean /= static_cast<double>(replica_means.size());
  if (mean == 0.0) throw std::domain_error("relative error undefined for a zero mean");
  double var = 0.0;
  for (double x : replica_means) var += (x - mean) * (x - mean);
  var /= static_cast<double>(replica_means.size());
  return std::sqrt(var) / std::abs(mean);
}

// ---------------------------------------------------------------------------
// Observable tables

/// One time step: distances for k = 1..k_max, the self-replica baseline for
/// each k, and the projected-ensemble entropy with its relative error.
struct ObservableRow {
  double t = 0.0;
  std::vector<double> delta;
  std::vector<double> delta_self;
  double entropy_avg = 0.0;
  double sigma = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const ObservableRow& r) {
  j = nlohmann::json{{"t", r.t},
                     {"delta", r.delta},
                     {"delta_self", r.delta_self},
                     {"entropy_avg", r.entropy_avg},
                     {"sigma", r.sigma},
                     {"n_samples", r.n_samples},
                     {"seed", r.seed}};
}

inline void from_json(const nlohmann::json& j, ObservableRow& r) {
  r.t = j.at("t").get<double>();
  r.delta = j.at("delta").get<std::vector<double>>();
  r.delta_self = j.at("delta_self").get<std::vector<double>>();
  r.entropy_avg = j.at("entropy_avg").get<double>();
  r.sigma = j.at("sigma").get<double>();
  r.n_samples = j.at("n_samples").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
}

inline constexpr const char* kCsvVersion = "# dgge-csv v1";

/// t,delta_1..delta_K,delta_self_1..delta_self_K,entropy_avg,sigma,n_samples,seed
inline std::string csv_header(int k_max) {
  std::string h = "t";
  for (int k = 1; k <= k_max; ++k) h += ",delta_" + std::to_string(k);
  for (int k = 1; k <= k_max; ++k) h += ",delta_self_" + std::to_string(k);
  return h + ",entropy_avg,sigma,n_samples,seed";
}

inline void append_number(std::string& line, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  line += buf;
}

/// Rows of one comparison, in time order.
struct ObservableSeries {
  std::string label;
  int k_max = 1;
  std::vector<ObservableRow> rows;

  void check() const {
    for (const auto& r : rows) {
      if (std::ssize(r.delta) != k_max || std::ssize(r.delta_self) != k_max)
        throw std::domain_error("row width does not match k_max in series '" + label + "'");
      for (double d : r.delta)
        if (!(d >= 0.0) || !std::isfinite(d)) throw std::domain_error("bad distance in series '" + label + "'");
      for (double d : r.delta_self)
        if (!(d >= 0.0) || !std::isfinite(d)) throw std::domain_error("bad distance in series '" + label + "'");
      if (!std::isfinite(r.entropy_avg) || !std::isfinite(r.sigma))
        throw std::domain_error("non-finite entry in series '" + label + "'");
    }
  }

  void write_csv(std::ostream& out) const {
    check();
    out << kCsvVersion << '\n' << csv_header(k_max) << '\n';
    for (const auto& r : rows) {
      std::string line;
      append_number(line, r.t);
      for (double d : r.delta) line += ',', append_number(line, d);
      for (double d : r.delta_self) line += ',', append_number(line, d);
      line += ',', append_number(line, r.entropy_avg);
      line += ',', append_number(line, r.sigma);
      line += ',' + std::to_string(r.n_samples) + ',' + std::to_string(r.seed) + '\n';
      out << line;
    }
  }
};

inline void to_json(nlohmann::json& j, const ObservableSeries& s) {
  j = nlohmann::json{{"label", s.label}, {"k_max", s.k_max}, {"rows", s.rows}};
}

inline void from_json(const nlohmann::json& j, ObservableSeries& s) {
  s.label = j.at("label").get<std::string>();
  s.k_max = j.at("k_max").get<int>();
  s.rows = j.at("rows").get<std::vector<ObservableRow>>();
}

}  // namespace dgge
