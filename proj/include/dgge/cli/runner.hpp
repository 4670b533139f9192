#pragma once

// End-to-end experiment runners behind the command-line tool.
//
// Seed paths below the root seed:
//   {1, t / dt, replica}    projected ensemble at one time step
//   {2, ensemble, replica}  reference ensemble
//   {3}                     calibration chain
//   {4, source, replica}    number-distribution samples

#include "dgge/cli/config.hpp"
#include "dgge/gaussian/dimer.hpp"
#include "dgge/gaussian/evolution.hpp"
#include "dgge/montecarlo/observables.hpp"
#include "dgge/montecarlo/references.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

namespace dgge {

/// DGGE_WORKERS if set, otherwise the hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("DGGE_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw ConfigError("DGGE_WORKERS must be a positive integer");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs task(i) for every i in [0, n) on a bounded pool. The first exception
/// (lowest index) is rethrown after all workers stop.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(threads, n); ++w) pool.emplace_back(work);
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Samples assigned to replica r when `total` are split over `replicas`.
inline std::uint64_t replica_share(std::uint64_t total, int replicas, int r) {
  const auto R = static_cast<std::uint64_t>(replicas);
  return total / R + (static_cast<std::uint64_t>(r) < total % R ? 1 : 0);
}

/// Statistics of independent replicas, merged in replica order.
struct ReplicaSummary {
  EnsembleStatistics all;
  EnsembleStatistics even;
  EnsembleStatistics odd;
  std::vector<double> replica_entropy;

  explicit ReplicaSummary(const std::vector<EnsembleStatistics>& replicas)
      : all(replicas.at(0).k_max(), replicas.at(0).dim()),
        even(replicas.at(0).k_max(), replicas.at(0).dim()),
        odd(replicas.at(0).k_max(), replicas.at(0).dim()) {
    for (std::size_t r = 0; r < replicas.size(); ++r) {
      all.merge(replicas[r]);
      (r % 2 == 0 ? even : odd).merge(replicas[r]);
      replica_entropy.push_back(replicas[r].entropy().mean());
    }
  }

  int k_max() const { return all.k_max(); }

  /// Distance between the even and odd replica halves divided by sqrt 2: the
  /// expected distance between two independent full-size samples of one law.
  double self_distance(int k) const {
    return frobenius_delta(even.moment(k), odd.moment(k)) / std::sqrt(2.0);
  }

  double relative_error() const {
    double mean = 0.0;
    for (double x : replica_entropy) mean += x;
    if (mean == 0.0) return 0.0;
    return mc_relative_error(replica_entropy);
  }

  friend void to_json(nlohmann::json& j, const ReplicaSummary& s) {
    j = nlohmann::json{{"all", s.all}, {"even", s.even}, {"odd", s.odd}, {"replica_entropy", s.replica_entropy}};
  }

  static ReplicaSummary from_json(const nlohmann::json& j) {
    ReplicaSummary s;
    s.all = EnsembleStatistics::from_json(j.at("all"));
    s.even = EnsembleStatistics::from_json(j.at("even"));
    s.odd = EnsembleStatistics::from_json(j.at("odd"));
    s.replica_entropy = j.at("replica_entropy").get<std::vector<double>>();
    return s;
  }

 private:
  ReplicaSummary() : all(1, 1), even(1, 1), odd(1, 1) {}
};

/// Runs `replicas` independent replicas; make_replica(r, rng) returns the
/// statistics of replica r drawn from the stream seeded at `seed_of(r)`.
inline ReplicaSummary run_replicas(int replicas, int workers, const std::function<std::uint64_t(int)>& seed_of,
                                   const std::function<EnsembleStatistics(int, std::mt19937_64&)>& make_replica) {
  std::vector<std::optional<EnsembleStatistics>> out(static_cast<std::size_t>(replicas));
  parallel_for(out.size(), workers, [&](std::size_t r) {
    std::mt19937_64 rng(seed_of(static_cast<int>(r)));
    out[r].emplace(make_replica(static_cast<int>(r), rng));
  });
  std::vector<EnsembleStatistics> stats;
  for (auto& s : out) stats.push_back(std::move(*s));
  return ReplicaSummary(stats);
}

// ---------------------------------------------------------------------------
// Projected ensemble versus reference ensembles

struct RunOptions {
  /// Output directory; empty keeps everything in memory.
  std::string out_dir;
  /// Checkpoint to continue from.
  std::string resume;
  int workers = 1;
  /// Stop after this many new time steps (simulates an interrupted run).
  std::optional<std::size_t> max_new_steps;
  /// Called with each fresh projected-ensemble sample and its state C_t.
  std::function<void(double t, const CovarianceMatrix& state, const ReplicaSummary& pe)> on_step;
};

inline constexpr const char* kCheckpointFormat = "dgge-checkpoint v1";

/// "gaussian", "zero", "calibrate" or the path of a multipliers file.
inline Multipliers resolve_multipliers(const std::string& how, const ExperimentConfig& config,
                                       const std::vector<double>& occupations) {
  if (how == "gaussian") return gaussian_omega(occupations);
  if (how == "zero") return Multipliers::zero(config.sites);
  if (how == "calibrate") {
    std::mt19937_64 rng(derive_seed(config.seed, {3}));
    return calibrate_omega(occupations, gaussian_omega(occupations), config.calibration, rng).multipliers;
  }
  auto m = read_json_file(how).get<Multipliers>();
  if (m.sites() != config.sites) throw ConfigError("multipliers in '" + how + "' do not match L");
  return m;
}

inline EnsembleSpec reference_spec(const ReferenceConfig& ref, const ExperimentConfig& config) {
  EnsembleSpec spec;
  spec.kind = ref.kind;
  spec.lattice = config.lattice();
  spec.alpha = config.alpha();
  spec.occupations = occupation_spectrum(config.alpha(), config.sites);
  spec.particles = config.particles();
  spec.group = ref.group;
  spec.thin = ref.thin;
  spec.seed = config.seed;
  if (ref.kind == EnsembleKind::generalized_haar) spec.multipliers = resolve_multipliers(ref.multipliers, config, spec.occupations);
  spec.validate();
  return spec;
}

inline ReplicaSummary sample_reference(const EnsembleSpec& spec, std::size_t index, const ExperimentConfig& config,
                                       int workers) {
  const Index la = config.subsystem_sites;
  return run_replicas(
      config.replicas, workers, [&](int r) { return derive_seed(config.seed, {2, index, static_cast<std::uint64_t>(r)}); },
      [&](int r, std::mt19937_64& rng) {
        EnsembleSampler sampler(spec);
        EnsembleStatistics stats(config.k_max, la);
        const auto n = replica_share(config.samples, config.replicas, r);
        for (std::uint64_t s = 0; s < n; ++s) stats.add(sampler.sample(rng));
        return stats;
      });
}

inline ReplicaSummary sample_projected(const CovarianceMatrix& state, std::size_t t_index,
                                       const ExperimentConfig& config, int workers) {
  const LatticeSpec lattice = config.lattice();
  return run_replicas(
      config.replicas, workers,
      [&](int r) { return derive_seed(config.seed, {1, t_index, static_cast<std::uint64_t>(r)}); },
      [&](int r, std::mt19937_64& rng) {
        EnsembleStatistics stats(config.k_max, config.subsystem_sites);
        const auto n = replica_share(config.samples, config.replicas, r);
        if (config.sampler == PeSampler::direct) {
          for (std::uint64_t s = 0; s < n; ++s) stats.add(pe_direct_sample(state, lattice, rng));
        } else {
          auto chain = pe_chain_start(state, lattice, rng);
          for (std::uint64_t s = 0; s < default_burn_in(lattice); ++s) pe_metropolis_step(chain, state, lattice, rng);
          for (std::uint64_t s = 0; s < n; ++s) {
            pe_metropolis_step(chain, state, lattice, rng);
            stats.add(chain.record);
          }
        }
        return stats;
      });
}

inline ObservableRow compare(double t, const ReplicaSummary& pe, const ReplicaSummary& ref, std::uint64_t seed) {
  ObservableRow row;
  row.t = t;
  for (int k = 1; k <= pe.k_max(); ++k) {
    row.delta.push_back(frobenius_delta(pe.all.moment(k), ref.all.moment(k)));
    row.delta_self.push_back(pe.self_distance(k));
  }
  row.entropy_avg = pe.all.entropy().mean();
  row.sigma = pe.relative_error();
  row.n_samples = pe.all.count();
  row.seed = seed;
  return row;
}

/// The reference ensemble's own entropy and self-distance, at t = inf.
inline ObservableRow reference_row(const ReplicaSummary& ref, std::uint64_t seed) {
  ObservableRow row;
  row.t = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= ref.k_max(); ++k) {
    row.delta.push_back(ref.self_distance(k));
    row.delta_self.push_back(ref.self_distance(k));
  }
  row.entropy_avg = ref.all.entropy().mean();
  row.sigma = ref.relative_error();
  row.n_samples = ref.all.count();
  row.seed = seed;
  return row;
}

struct PeRunResult {
  /// One series per reference ensemble, labelled by the ensemble.
  std::vector<ObservableSeries> series;
  /// The t = inf rows of each reference ensemble.
  std::vector<ObservableSeries> references;
  /// Time steps completed (all of them unless the run was cut short).
  std::size_t completed = 0;
};

namespace detail {

inline void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline void write_series(const std::filesystem::path& path, const ObservableSeries& s) {
  std::ostringstream out;
  s.write_csv(out);
  write_text_atomically(path, out.str());
}

}  // namespace detail

inline std::string checkpoint_path(const std::string& out_dir) {
  return (std::filesystem::path(out_dir) / "checkpoint.json").string();
}

inline PeRunResult run_pe_vs_ensemble(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  if (config.replicas < 2) throw ConfigError("pe-vs-ensemble needs at least two replicas");
  if (config.ensembles.empty()) throw ConfigError("no reference ensembles listed");
  std::vector<EnsembleSpec> specs;
  for (const auto& ref : config.ensembles) specs.push_back(reference_spec(ref, config));

  const auto times = config.times();
  const auto grid = config.time_indices();
  const LatticeSpec lattice = config.lattice();
  const TightBindingEvolver evolver(lattice, build_dimer_covariance(config.sites, config.alpha()));
  const bool persist = !options.out_dir.empty();
  if (persist) std::filesystem::create_directories(options.out_dir);

  PeRunResult result;
  std::vector<ReplicaSummary> refs;
  for (const auto& ref : config.ensembles) {
    result.series.push_back({ref.label, config.k_max, {}});
    result.references.push_back({ref.label, config.k_max, {}});
  }

  if (!options.resume.empty()) {
    const auto cp = read_json_file(options.resume);
    if (cp.value("format", "") != kCheckpointFormat) throw ConfigError("'" + options.resume + "' is not a checkpoint");
    if (cp.at("config") != config.source) throw ConfigError("checkpoint was written for a different config");
    for (const auto& r : cp.at("references")) refs.push_back(ReplicaSummary::from_json(r));
    result.series = cp.at("series").get<std::vector<ObservableSeries>>();
    result.completed = cp.at("completed").get<std::size_t>();
  } else {
    for (std::size_t e = 0; e < specs.size(); ++e) refs.push_back(sample_reference(specs[e], e, config, options.workers));
  }
  for (std::size_t e = 0; e < refs.size(); ++e) result.references[e].rows = {reference_row(refs[e], config.seed)};

  auto save = [&] {
    if (!persist) return;
    nlohmann::json cp{{"format", kCheckpointFormat},
                      {"config", config.source},
                      {"references", refs},
                      {"series", result.series},
                      {"completed", result.completed}};
    detail::write_text_atomically(checkpoint_path(options.out_dir), cp.dump());
  };
  save();

  std::size_t fresh = 0;
  for (std::size_t ti = result.completed; ti < times.size(); ++ti) {
    if (options.max_new_steps && fresh == *options.max_new_steps) break;
    const auto state = evolver.at(times[ti]);
    const auto pe = sample_projected(state, grid[ti], config, options.workers);
    if (options.on_step) options.on_step(times[ti], state, pe);
    for (std::size_t e = 0; e < refs.size(); ++e)
      result.series[e].rows.push_back(compare(times[ti], pe, refs[e], config.seed));
    result.completed = ti + 1;
    ++fresh;
    save();
  }

  for (auto& s : result.series) s.check();
  if (persist && result.completed == times.size()) {
    const std::filesystem::path dir(options.out_dir);
    for (std::size_t e = 0; e < refs.size(); ++e) {
      detail::write_series(dir / ("pe_vs_" + result.series[e].label + ".csv"), result.series[e]);
      detail::write_series(dir / (result.references[e].label + "_reference.csv"), result.references[e]);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Calibration

inline CalibrationResult run_calibration(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  const auto target = occupation_spectrum(config.alpha(), config.sites);
  Multipliers initial;
  if (config.initial_multipliers == "gaussian") initial = gaussian_omega(target);
  else if (config.initial_multipliers == "zero") initial = Multipliers::zero(config.sites);
  else initial = resolve_multipliers(config.initial_multipliers, config, target);
  std::mt19937_64 rng(derive_seed(config.seed, {3}));
  auto result = calibrate_omega(target, initial, config.calibration, rng);
  if (!options.out_dir.empty()) {
    const std::filesystem::path dir(options.out_dir);
    std::filesystem::create_directories(dir);
    detail::write_text_atomically(dir / "multipliers.json", nlohmann::json(result.multipliers).dump(2) + "\n");
    std::string csv = std::string(kCsvVersion) + "\niteration,residual,objective,step,acceptance\n";
    for (const auto& it : result.trace) {
      csv += std::to_string(it.iteration);
      for (double x : {it.residual, it.objective, it.step, it.acceptance}) csv += ',', append_number(csv, x);
      csv += '\n';
    }
    detail::write_text_atomically(dir / "calibration.csv", csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Subsystem particle number

struct NumberDistribution {
  std::vector<double> analytic;
  /// Histogram of N_A from the whole-chain infinite-temperature ensemble.
  std::vector<double> inf_temp;
  /// Histogram of N_A from the projected ensemble of the evolved dimer at t_max.
  std::vector<double> projected;

  static double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    double tv = 0.0;
    for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i)
      tv += std::abs((i < p.size() ? p[i] : 0.0) - (i < q.size() ? q[i] : 0.0));
    return 0.5 * tv;
  }
};

inline NumberDistribution run_number_dist(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  const LatticeSpec lattice = config.lattice();
  const Index N = config.particles();
  const Index la = config.subsystem_sites;
  NumberDistribution out;
  out.analytic = number_distribution(config.sites, N, la);

  const auto dimer = evolve(build_dimer_covariance(config.sites, config.alpha()), config.t_max, lattice);
  auto histogram = [&](std::uint64_t source, const std::function<MeasurementRecord(std::mt19937_64&)>& draw) {
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(config.replicas),
                                            std::vector<double>(static_cast<std::size_t>(la + 1), 0.0));
    parallel_for(counts.size(), options.workers, [&](std::size_t r) {
      std::mt19937_64 rng(derive_seed(config.seed, {4, source, r}));
      const auto n = replica_share(config.number_samples, config.replicas, static_cast<int>(r));
      for (std::uint64_t s = 0; s < n; ++s) counts[r][static_cast<std::size_t>(N - draw(rng).bath_particles())] += 1.0;
    });
    std::vector<double> p(static_cast<std::size_t>(la + 1), 0.0);
    for (const auto& c : counts)
      for (std::size_t i = 0; i < p.size(); ++i) p[i] += c[i];
    for (auto& x : p) x /= static_cast<double>(config.number_samples);
    return p;
  };
  out.inf_temp = histogram(0, [&](std::mt19937_64& rng) {
    return pe_direct_sample(build_inf_temp_covariance(config.sites, N, config.number_group, rng), lattice, rng);
  });
  out.projected = histogram(1, [&](std::mt19937_64& rng) { return pe_direct_sample(dimer, lattice, rng); });

  if (!options.out_dir.empty()) {
    const std::filesystem::path dir(options.out_dir);
    std::filesystem::create_directories(dir);
    std::string csv = std::string(kCsvVersion) + "\nN_A,analytic,inf_temp_" + to_string(config.number_group) +
                      ",projected\n";
    for (std::size_t i = 0; i < out.analytic.size(); ++i) {
      csv += std::to_string(i);
      for (double x : {out.analytic[i], out.inf_temp[i], out.projected[i]}) csv += ',', append_number(csv, x);
      csv += '\n';
    }
    detail::write_text_atomically(dir / "number_dist.csv", csv);
  }
  return out;
}

}  // namespace dgge
