#include "dgge/gaussian/dimer.hpp"
#include "dgge/gaussian/entropy.hpp"
#include "dgge/gaussian/evolution.hpp"
#include "dgge/gaussian/measurement.hpp"

#include "oracle/statevector.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace dgge;

namespace {

CovarianceMatrix neel(Index sites) { return build_dimer_covariance(sites, 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Dimer state and occupations

TEST(Dimer, NeelIsAlternatingDiagonal) {
  const auto c = neel(4);
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = 1.0;
  expected(2, 2) = 1.0;
  EXPECT_LT((c.matrix() - expected).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(c.trace(), 2.0);
}

TEST(Dimer, RealAlphaTwoSites) {
  const auto c = build_dimer_covariance(2, 1.0);
  EXPECT_LT((c.matrix() - Matrix::Constant(2, 2, 0.5)).norm(), 1e-15);
}

TEST(Dimer, ImaginaryAlphaMatchesCorrelatorConvention) {
  // (c^dag_0 + i c^dag_1)|0>/sqrt2: <c^dag_0 c_1> = conj(phi_0) phi_1 = i/2.
  const auto c = build_dimer_covariance(2, Complex(0.0, 1.0));
  EXPECT_NEAR(std::abs(c(0, 1) - Complex(0.0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c(1, 0) - Complex(0.0, -0.5)), 0.0, 1e-15);
  EXPECT_LT(c.hermiticity_residual(), 1e-15);
  EXPECT_LT(c.purity_residual(), 1e-15);
}

TEST(Dimer, MatchesStatevectorCorrelations) {
  const Complex alpha = std::polar(0.5, std::sqrt(5.0));
  const int sites = 6;
  Matrix orbitals = Matrix::Zero(sites, sites / 2);
  for (int j = 0; j < sites / 2; ++j) {
    orbitals(2 * j, j) = 1.0;
    orbitals(2 * j + 1, j) = alpha;
  }
  orbitals /= std::sqrt(1.0 + std::norm(alpha));
  const auto psi = oracle::slater(orbitals);
  const auto ref = oracle::correlations(psi, sites);
  EXPECT_LT((build_dimer_covariance(sites, alpha).matrix() - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Dimer, OddSitesRejected) { EXPECT_THROW(build_dimer_covariance(5, 0.3), std::invalid_argument); }

TEST(Occupations, NeelIsHalfEverywhere) {
  for (double n : occupation_spectrum(0.0, 16)) EXPECT_DOUBLE_EQ(n, 0.5);
}

TEST(Occupations, RealAlphaAtZeroMomentum) { EXPECT_NEAR(occupation_spectrum(1.0, 8)[0], 1.0, 1e-15); }

TEST(Occupations, FigureTwoAmplitude) {
  const auto n = occupation_spectrum(std::polar(0.5, std::sqrt(5.0)), 32);
  EXPECT_NEAR(n[0], 0.5 + std::cos(std::sqrt(5.0)) / 2.5, 1e-14);
  EXPECT_NEAR(n[0], 0.2531, 1e-4);
  double mean = 0.0;
  for (double x : n) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    mean += x / 32.0;
  }
  EXPECT_NEAR(mean, 0.5, 1e-14);
}

TEST(Occupations, AgreeWithFourierDiagonalOfDimerCovariance) {
  const Index L = 12;
  const Complex alpha = std::polar(0.7, 1.1);
  const auto c = build_dimer_covariance(L, alpha).matrix();
  const auto n = occupation_spectrum(alpha, L);
  for (Index m = 0; m < L; ++m) {
    Complex nk = 0.0;
    for (Index i = 0; i < L; ++i)
      for (Index j = 0; j < L; ++j)
        nk += std::polar(1.0 / static_cast<double>(L),
                         2.0 * std::numbers::pi * static_cast<double>(m * (i - j)) / static_cast<double>(L)) *
              c(i, j);
    EXPECT_NEAR(nk.real(), n[static_cast<std::size_t>(m)], 1e-13);
    EXPECT_NEAR(nk.imag(), 0.0, 1e-13);
  }
}

// ---------------------------------------------------------------------------
// Evolution

TEST(Evolution, ZeroTimeIsIdentity) {
  const LatticeSpec lat(8, 2);
  const auto c0 = build_dimer_covariance(8, std::polar(0.4, 0.3));
  EXPECT_LT((evolve(c0, 0.0, lat).matrix() - c0.matrix()).norm(), 1e-13);
}

TEST(Evolution, SpectrumAndTracePreserved) {
  std::mt19937_64 rng(3);
  const LatticeSpec lat(10, 3, Boundary::open);
  const auto c0 = testutil::random_pure_state(10, 4, rng);
  const TightBindingEvolver ev(lat, c0);
  for (double t : {0.3, 2.0, 17.5}) {
    const auto ct = ev.at(t);
    EXPECT_LT((ct.spectrum() - c0.spectrum()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(ct.trace(), 4.0, 1e-10);
  }
}

TEST(Evolution, MatchesStatevectorNeelPeriodic) {
  const int L = 6;
  const LatticeSpec lat(L, 2, Boundary::periodic);
  Matrix orbitals = Matrix::Zero(L, L / 2);
  for (int j = 0; j < L / 2; ++j) orbitals(2 * j, j) = 1.0;
  const auto H = oracle::quadratic_hamiltonian(hopping_matrix(lat));
  const auto psi_t = oracle::evolve(H, oracle::slater(orbitals), 1.7);
  const auto ref = oracle::correlations(psi_t, L);
  EXPECT_LT((evolve(neel(L), 1.7, lat).matrix() - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evolution, MatchesStatevectorComplexDimerOpen) {
  const int L = 6;
  const LatticeSpec lat(L, 2, Boundary::open);
  const Complex alpha = std::polar(0.5, std::sqrt(5.0));
  Matrix orbitals = Matrix::Zero(L, L / 2);
  for (int j = 0; j < L / 2; ++j) {
    orbitals(2 * j, j) = 1.0 / std::sqrt(1.25);
    orbitals(2 * j + 1, j) = alpha / std::sqrt(1.25);
  }
  const auto H = oracle::quadratic_hamiltonian(hopping_matrix(lat));
  const auto ref = oracle::correlations(oracle::evolve(H, oracle::slater(orbitals), 2.3), L);
  EXPECT_LT((evolve(build_dimer_covariance(L, alpha), 2.3, lat).matrix() - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evolution, DimensionMismatchRejected) {
  EXPECT_THROW(TightBindingEvolver(LatticeSpec(8, 2), neel(6)), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Single-site measurement

TEST(MeasureSite, SharedParticleFoundOnSecondSite) {
  const CovarianceMatrix c(Matrix::Constant(2, 2, 0.5));
  const auto r = measure_site(c, 1, 1);
  EXPECT_NEAR(r.probability, 0.5, 1e-15);
  EXPECT_NEAR(std::abs(r.state(0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(r.state(1, 1).real(), 1.0, 1e-15);
}

TEST(MeasureSite, SharedParticleAbsentFromSecondSite) {
  const CovarianceMatrix c(Matrix::Constant(2, 2, 0.5));
  const auto r = measure_site(c, 1, 0);
  EXPECT_NEAR(r.probability, 0.5, 1e-15);
  EXPECT_NEAR(r.state(0, 0).real(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(r.state(0, 1)), 0.0, 1e-15);
}

TEST(MeasureSite, DeterministicProductState) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  const auto r = measure_site(CovarianceMatrix(m), 1, 0);
  EXPECT_DOUBLE_EQ(r.probability, 1.0);
  EXPECT_DOUBLE_EQ(r.state(0, 0).real(), 1.0);
  EXPECT_THROW(measure_site(CovarianceMatrix(m), 1, 1), ForbiddenOutcome);
}

TEST(MeasureSite, MatchesStatevectorProjection) {
  std::mt19937_64 rng(11);
  const int L = 6;
  const auto v = testutil::random_orbitals(L, 3, rng);
  const auto c = covariance_from_orbitals(v);
  const auto psi = oracle::slater(v);
  for (int site = 0; site < L; ++site)
    for (int z = 0; z < 2; ++z) {
      const auto proj = oracle::project(psi, site, {static_cast<std::uint8_t>(z)});
      const auto r = measure_site(c, site, z);
      EXPECT_NEAR(r.probability, proj.probability, 1e-12);
      EXPECT_LT((r.state.matrix() - oracle::correlations(proj.state, L)).cwiseAbs().maxCoeff(), 1e-11);
    }
}

// ---------------------------------------------------------------------------
// Whole-bath measurement

TEST(MeasureRegion, NeelIsAMeasurementEigenstate) {
  const LatticeSpec lat(4, 2);
  const auto rec = measure_region_iterative(neel(4), lat, {1, 0});
  EXPECT_DOUBLE_EQ(rec.probability, 1.0);
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  EXPECT_LT((rec.post_state.matrix() - expected).norm(), 1e-15);
  EXPECT_NEAR(measure_region_determinant(neel(4), lat, {1, 0}).probability, 1.0, 1e-15);
}

TEST(MeasureRegion, IncompatibleOutcomeIsForbidden) {
  const LatticeSpec lat(4, 2);
  EXPECT_THROW(measure_region_iterative(neel(4), lat, {0, 0}), ForbiddenOutcome);
  EXPECT_FALSE(try_measure_region(neel(4), lat, {0, 0}).has_value());
  EXPECT_THROW(measure_region_determinant(neel(4), lat, {0, 0}), ForbiddenOutcome);
}

TEST(MeasureRegion, WrongOutcomeLengthRejected) {
  EXPECT_THROW(measure_region_iterative(neel(4), LatticeSpec(4, 2), {1}), std::invalid_argument);
}

TEST(MeasureRegion, IterativeEqualsRepeatedSiteMeasurements) {
  std::mt19937_64 rng(5);
  const LatticeSpec lat(9, 3);
  const auto c = testutil::random_pure_state(9, 4, rng);
  const Outcomes z{1, 0, 0, 1, 0, 1};
  CovarianceMatrix cur = c;
  double p = 1.0;
  for (Index b = 0; b < lat.bath_sites(); ++b) {
    auto r = measure_site(cur, lat.bath_begin() + b, z[static_cast<std::size_t>(b)]);
    p *= r.probability;
    cur = r.state;
  }
  const auto rec = measure_region_iterative(c, lat, z);
  EXPECT_NEAR(rec.probability, p, 1e-13);
  EXPECT_LT((rec.post_state.matrix() - cur.leading_block(3).matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MeasureRegion, RandomStateMatchesStatevectorOracle) {
  std::mt19937_64 rng(21);
  const int L = 8;
  const LatticeSpec lat(L, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto v = testutil::random_orbitals(L, 1 + trial % 5, rng);
    const auto c = covariance_from_orbitals(v);
    const auto psi = oracle::slater(v);
    EXPECT_LT((c.matrix() - oracle::correlations(psi, L)).cwiseAbs().maxCoeff(), 1e-12);
    for (std::uint64_t bits = 0; bits < 16; ++bits) {
      const auto z = testutil::outcomes_from_bits(bits, 4);
      const auto proj = oracle::project(psi, 4, z);
      const auto rec = try_measure_region(c, lat, z);
      if (proj.probability < 1e-10) {
        continue;
      }
      ASSERT_TRUE(rec.has_value());
      EXPECT_NEAR(rec->probability, proj.probability, 1e-9);
      const auto ref = oracle::correlations(proj.state, L).topLeftCorner(4, 4);
      EXPECT_LT((rec->post_state.matrix() - ref).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(MeasureRegion, DeterminantMatchesIterativeOnRandomInstances) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> bit(0, 1);
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index L = 6 + trial % 5;
    const Index la = 1 + trial % 3;
    const LatticeSpec lat(L, la);
    const auto c = testutil::random_pure_state(L, L / 2, rng);
    Outcomes z(static_cast<std::size_t>(lat.bath_sites()));
    std::optional<MeasurementRecord> it;
    do {
      for (auto& b : z) b = static_cast<std::uint8_t>(bit(rng));
      it = try_measure_region(c, lat, z);
    } while (!it || it->probability < 1e-10);
    const auto det = measure_region_determinant(c, lat, z);
    EXPECT_LT(std::abs(det.probability - it->probability) / it->probability, 1e-8);
    EXPECT_LT((det.post_state.matrix() - it->post_state.matrix()).cwiseAbs().maxCoeff(), 1e-8);
    ++compared;
  }
  EXPECT_EQ(compared, 100);
}

class MeasurementProperties : public ::testing::TestWithParam<int> {};

TEST_P(MeasurementProperties, NormalisationConsistencyPurityAndBookkeeping) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  const Index L = 10;
  const Index lb = 4 + GetParam() % 5;  // 4..8
  const LatticeSpec lat(L, L - lb);
  const Index particles = 2 + GetParam() % 6;
  const auto c = testutil::random_pure_state(L, particles, rng);
  const Index la = lat.subsystem_sites();

  double total = 0.0;
  Matrix first_moment = Matrix::Zero(la, la);
  for (std::uint64_t bits = 0; bits < (1u << lb); ++bits) {
    const auto z = testutil::outcomes_from_bits(bits, lb);
    const auto rec = try_measure_region(c, lat, z);
    if (!rec) continue;
    total += rec->probability;
    first_moment += rec->probability * rec->post_state.matrix();
    EXPECT_LT(rec->post_state.purity_residual(), 1e-9);
    EXPECT_NEAR(rec->post_state.trace() + rec->bath_particles(), static_cast<double>(particles), 1e-9);
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_LT((first_moment - c.matrix().topLeftCorner(la, la)).cwiseAbs().maxCoeff(), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(RandomStates, MeasurementProperties, ::testing::Range(1, 11));

TEST(MeasureRegion, DeterminantProbabilitiesSumToOne) {
  std::mt19937_64 rng(99);
  const LatticeSpec lat(12, 2);
  const auto c = testutil::random_pure_state(12, 6, rng);
  double total = 0.0;
  for (std::uint64_t bits = 0; bits < (1u << 10); ++bits) {
    const auto z = testutil::outcomes_from_bits(bits, 10);
    try {
      total += measure_region_determinant(c, lat, z).probability;
    } catch (const ForbiddenOutcome&) {
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
}

// ---------------------------------------------------------------------------
// Entropy

TEST(Entropy, PureStateHasNone) {
  std::mt19937_64 rng(2);
  EXPECT_NEAR(entanglement_entropy(testutil::random_pure_state(6, 3, rng)), 0.0, 1e-6);
}

TEST(Entropy, MaximallyMixedMode) {
  EXPECT_NEAR(entanglement_entropy(CovarianceMatrix(Matrix::Constant(1, 1, 0.5))), std::log(2.0), 1e-15);
}

TEST(Entropy, OutOfRangeSpectrumRejected) {
  EXPECT_THROW(entanglement_entropy(CovarianceMatrix(Matrix::Constant(1, 1, 1.1))), InvalidState);
  EXPECT_NO_THROW(entanglement_entropy(CovarianceMatrix(Matrix::Constant(1, 1, 1.0 + 1e-9))));
}

TEST(Entropy, BoundedByDimensionTimesLogTwo) {
  std::mt19937_64 rng(4);
  const auto c = testutil::random_pure_state(12, 6, rng);
  for (Index m = 1; m <= 6; ++m) {
    const double s = entanglement_entropy(c.leading_block(m));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, static_cast<double>(m) * std::log(2.0) + 1e-12);
  }
}

TEST(Entropy, MatchesReducedDensityMatrixOfStatevector) {
  std::mt19937_64 rng(17);
  const int L = 6;
  const auto v = testutil::random_orbitals(L, 3, rng);
  const auto psi = oracle::slater(v);
  const auto c = covariance_from_orbitals(v);
  for (int m = 1; m < L; ++m)
    EXPECT_NEAR(entanglement_entropy(c.leading_block(m)),
                oracle::von_neumann_entropy(oracle::reduced_density_matrix(psi, m)), 1e-9);
}

TEST(Entropy, SpaceAverageOfBellPair) {
  const CovarianceMatrix c(Matrix::Constant(2, 2, 0.5));
  EXPECT_NEAR(space_averaged_entropy(c), std::log(2.0) / 2.0, 1e-12);
  Matrix prod = Matrix::Zero(3, 3);
  prod(1, 1) = 1.0;
  EXPECT_NEAR(space_averaged_entropy(CovarianceMatrix(prod)), 0.0, 1e-15);
}
