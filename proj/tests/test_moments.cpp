#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "decilab/moments.hpp"
#include "decilab/montecarlo.hpp"
#include "decilab/specdens.hpp"
#include "oracles.hpp"

using namespace decilab;

namespace {

DecimatedFamily pair_family(const TimeKernel& a, const TimeKernel& b, long gamma) {
  FamilyLevel lv;
  lv.gamma = gamma;
  lv.kernels = {a, b};
  lv.center_freqs = {0.0, 0.0};
  return DecimatedFamily({lv}, {0.0, 0.0}, 1.0);
}

}  // namespace

TEST(CovExact, Trivial) {
  const auto same = pair_family(TimeKernel::impulse(), TimeKernel::impulse(), 1);
  EXPECT_EQ(cov_exact(same, 0, 0, 0, 3, 3), 1.0);
  const auto disjoint = pair_family(TimeKernel::impulse(0), TimeKernel::impulse(1), 2);
  EXPECT_EQ(cov_exact(disjoint, 0, 0, 1, 0, 0), 0.0);
}

TEST(CovExact, SpectralAndBruteForceAgree) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const long gamma = 1 + rep % 4;
    const auto fam = pair_family(oracle::random_kernel(rng, 20, 10), oracle::random_kernel(rng, 20, 10), gamma);
    for (long dk : {-2L, 0L, 1L, 3L}) {
      const double t = cov_exact(fam, 0, 0, 1, 0, dk);
      EXPECT_NEAR(t, oracle::brute_cov(fam.kernel(0, 0), fam.kernel(0, 1), gamma, 0, dk), 1e-12);
      const cdouble s = cov_spectral(fam, 0, 0, 1, 0, dk);
      EXPECT_NEAR(s.real(), t, 1e-8);
      EXPECT_NEAR(s.imag(), 0.0, 1e-8);
    }
  }
}

TEST(ABTerms, Impulses) {
  const auto fam = single_kernel_family(TimeKernel::impulse());
  for (std::size_t n : {1u, 5u, 40u}) {
    EXPECT_EQ(a_term(fam, 0, 0, 0, n), 1.0);
    EXPECT_EQ(b_term(fam, 0, 0, 0, n), 1.0);
  }
}

TEST(ABTerms, TwoTapHandEnumeration) {
  const auto fam = single_kernel_family(TimeKernel(0, {1.0, 1.0}), 2);
  EXPECT_DOUBLE_EQ(a_term(fam, 0, 0, 0, 2), 4.0);
  EXPECT_DOUBLE_EQ(b_term(fam, 0, 0, 0, 2), 2.0);
}

TEST(ABTerms, MatchCumulantExpansion) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 15; ++rep) {
    const long gamma = 1L << (rep % 4);
    const long n = 1 + rep % 6;
    const auto fam = pair_family(oracle::random_kernel(rng, 10, 6), oracle::random_kernel(rng, 10, 6), gamma);
    for (const NoiseSpec& s : {NoiseSpec{NoiseKind::gaussian}, NoiseSpec{NoiseKind::rademacher}, NoiseSpec{NoiseKind::scaled_uniform}}) {
      const double ref = oracle::brute_cov_squares(fam.kernel(0, 0), fam.kernel(0, 1), gamma, n, s.kurtosis_excess());
      EXPECT_NEAR(cov_of_square_sums(fam, 0, 0, 1, static_cast<std::size_t>(n), s), ref, 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(ABTerms, SpectralBounds) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 15; ++rep) {
    const long gamma = 1L << (rep % 4);
    const auto fam = pair_family(oracle::random_kernel(rng, 12, 6), oracle::random_kernel(rng, 12, 6), gamma);
    for (std::size_t n : {1u, 7u, 64u}) {
      EXPECT_LE(a_term(fam, 0, 0, 1, n), a_spectral_bound(fam, 0, 0, 1) + 1e-9);
      EXPECT_LE(b_term(fam, 0, 0, 1, n), b_spectral_bound(fam, 0, 0, 1) + 1e-9);
    }
  }
}

TEST(CovSquares, DegenerateAndGaussianImpulses) {
  const auto fam = single_kernel_family(TimeKernel::impulse());
  EXPECT_EQ(cov_of_square_sums(fam, 0, 0, 0, 1, {NoiseKind::gaussian}), 2.0);
  EXPECT_EQ(cov_of_square_sums(fam, 0, 0, 0, 1, {NoiseKind::rademacher}), 0.0);
}

TEST(CovSquares, NonNegativeVariance) {
  const auto fam = two_frequency_family({8, 16, 32});
  for (const NoiseSpec& s : {NoiseSpec{NoiseKind::gaussian}, NoiseSpec{NoiseKind::rademacher}, NoiseSpec{NoiseKind::scaled_uniform}}) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t i = 0; i < 2; ++i) EXPECT_GE(cov_of_square_sums(fam, j, i, i, 16, s), -1e-10);
    }
  }
}

TEST(CovSquares, BTermVanishesAlongLevels) {
  for (const auto& fam : {moving_average_family({16, 32, 64, 128}), two_frequency_family({16, 32, 64, 128})}) {
    for (std::size_t i = 0; i < fam.branches(); ++i) {
      for (std::size_t j = 1; j < fam.level_count(); ++j) {
        EXPECT_LE(b_term(fam, j, i, i, 32), 0.7 * b_term(fam, j - 1, i, i, 32)) << "branch " << i << " level " << j;
      }
    }
  }
}

TEST(CovSquares, MonteCarloMovingAverage) {
  const auto fam = moving_average_family({8});
  const NoiseSpec g{NoiseKind::gaussian};
  const auto set = replicate_sums(fam, 0, 64, g, 20000, 4242);
  const auto est = empirical_cov(set);
  EXPECT_LT(std::abs(est.cov[0][0] - cov_of_square_sums(fam, 0, 0, 0, 64, g)), 4.0 * est.se[0][0]);
}

TEST(LimitCov, DifferentFrequenciesGiveZero) {
  const auto fam = two_frequency_family({8, 16});
  const auto r = limit_cross_cov(fam, 0, 1, 0);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(limit_cov_squares(fam, 0, 1, 0), 0.0);
  EXPECT_EQ(limit_constant(fam, 0, 1), 0);
  EXPECT_EQ(limit_constant(fam, 0, 0), 1);
  EXPECT_EQ(limit_constant(fam, 1, 1), 2);
}

TEST(LimitCov, VarianceMatchesLevelSums) {
  const auto fam = moving_average_family({8, 16, 32, 64, 128});
  const auto r = limit_cross_cov(fam, 0, 0, 0);
  EXPECT_GE(r.truncation_bound, 0.0);
  EXPECT_NEAR(r.value, cov_exact(fam, 4, 0, 0, 0, 0), 1e-6);
  // Normalised window: int |W^|^2 = 1 so the limit is 1/(2 pi).
  EXPECT_NEAR(r.value, 1.0 / kTwoPi, 1e-9);
}

TEST(LimitCov, PositiveFrequencyUsesConstantTwo) {
  const auto fam = two_frequency_family({8, 16, 32, 64});
  EXPECT_NEAR(limit_cross_cov(fam, 1, 1, 0).value, cov_exact(fam, 3, 1, 1, 0, 0), 1e-6);
}

TEST(LimitCov, LagOneAgainstLevelSums) {
  const auto fam = moving_average_family({8, 16, 32, 64});
  const auto r = limit_cross_cov(fam, 0, 0, 1);
  EXPECT_NEAR(r.value, cov_exact(fam, 3, 0, 0, 0, 1), 5e-3);
}

TEST(LimitCovSquares, ConsistentWithCrossCov) {
  const auto fam = two_frequency_family({8, 16});
  for (std::size_t i = 0; i < 2; ++i) {
    const double c = limit_cross_cov(fam, i, i, 0).value;
    EXPECT_NEAR(limit_cov_squares(fam, i, i, 0), 2.0 * c * c, 1e-10);
  }
  const double v = sym_product_integral(fam, 0, 0, 0).value;
  EXPECT_NEAR(limit_cov_squares(fam, 0, 0, 0), 2.0 * v * v, 1e-12);
}

TEST(MnFunctional, ConstantAndExponential) {
  EXPECT_NEAR(m_n_functional([](double) { return 1.0; }, 7, 16), std::sqrt(kTwoPi), 1e-12);
  auto e = [](double l) { return cdouble(std::cos(l), std::sin(l)); };
  EXPECT_NEAR(m_n_functional(e, 1, 8), 0.0, 1e-12);
  EXPECT_NEAR(m_n_functional(e, 4, 8), std::sqrt(kTwoPi) * std::sqrt(0.75), 1e-12);
  EXPECT_THROW(m_n_functional(e, 10, 4), std::invalid_argument);
}

TEST(MnFunctional, MatchesCoefficientFormula) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = oracle::random_trig_poly(rng, 6);
    for (long n : {1L, 3L, 9L}) EXPECT_NEAR(m_n_functional(p, static_cast<std::size_t>(n), 16), oracle::exact_mn(p, n), 1e-10);
  }
}

TEST(GammaLimit, OrthogonalBranchesAndPsd) {
  const auto fam = two_frequency_family({8, 16, 32});
  const auto g = gamma_matrix(fam);
  EXPECT_EQ(g.entries[0][1], 0.0);
  EXPECT_EQ(g.entries[1][0], 0.0);
  EXPECT_EQ(g.constants[1][1], 2);
  EXPECT_GE(g.min_eigenvalue, -1e-8);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_GE(g.bounds[i][i], 0.0);
}

TEST(GammaLimit, DuplicatedBranch) {
  const auto fam = make_scaled_window_family(make_bspline_window(4), {8, 16}, std::vector<double>{0.0, 0.0});
  const auto g = gamma_matrix(fam);
  EXPECT_NEAR(g.entries[0][0], g.entries[0][1], 1e-15);
  EXPECT_NEAR(g.entries[1][1], g.entries[0][1], 1e-15);
}

TEST(GammaLimit, PhaseInvariance) {
  const auto fam = make_scaled_window_family(make_bspline_window(4), {8, 16}, std::vector<double>{0.0, 0.0, kPi / 2.0});
  const auto base = gamma_matrix(fam);
  for (double theta : {kPi / 7.0, kPi / 2.0}) {
    const auto rot = gamma_matrix(fam.with_limit_phase(theta));
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t ip = 0; ip < 3; ++ip) EXPECT_NEAR(rot.entries[i][ip], base.entries[i][ip], 1e-12);
    }
  }
}

TEST(GammaLimit, MatchesModulatedSquareVariance) {
  // For a positive limit frequency the per-coefficient variance of squares tends to 2 (1/(4 pi))^2.
  const auto fam = two_frequency_family({8, 16, 32, 64, 128});
  const double gl = gamma_limit(fam, 1, 1).value;
  const double fin = cov_of_square_sums(fam, 4, 1, 1, 1024, {});
  EXPECT_LT(std::abs(fin - gl) / gl, 0.02);
  EXPECT_NEAR(gl, 2.0 / (16.0 * kPi * kPi), 1e-8);
}

TEST(GammaLimit, ApproachedByFiniteLevels) {
  const auto fam = moving_average_family({8, 16, 32, 64});
  const double gl = gamma_limit(fam, 0, 0).value;
  EXPECT_LT(std::abs(cov_of_square_sums(fam, 3, 0, 0, 512, {}) - gl) / gl, 0.10);
}

TEST(GammaLimit, RequiresLimitResponses) {
  const auto fam = single_kernel_family(TimeKernel::impulse());
  EXPECT_THROW(gamma_limit(fam, 0, 0), std::invalid_argument);
  EXPECT_THROW(limit_cross_cov(fam, 0, 0, 0), std::invalid_argument);
}

TEST(GammaCsv, Layout) {
  std::ostringstream os;
  write_matrix_csv(os, {{1.0, 0.0}, {0.0, 0.5}}, "x");
  EXPECT_EQ(os.str(), "# x\nrow,col_1,col_2\n1,1,0\n2,0,0.5\n");
}
