#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "decilab/specdens.hpp"
#include "oracles.hpp"

using namespace decilab;

TEST(Window, BsplineNormalisation) {
  for (int m : {3, 4, 5, 6}) {
    const auto c = make_bspline_window(m).validate(1e-8);
    EXPECT_TRUE(c.support_ok);
    EXPECT_TRUE(c.normalized) << "order " << m << " norm " << c.l2_norm_transform;
  }
}

TEST(Window, TransformNormOnTheLine) {
  const Window w = make_bspline_window(4);
  const double cutoff = tail_cutoff(4.0, w.decay_constant(), 1e-12);
  const double norm = integrate_line([&](double x) { return std::norm(w.transform(x)); }, cutoff);
  EXPECT_NEAR(norm, 1.0, 1e-8);
}

TEST(Window, CubicSquareIntegral) {
  EXPECT_NEAR(bspline_square_integral(4), 151.0 / 315.0, 1e-14);
  // Self-convolution oracle: int B_m^2 = B_{2m}(m).
  EXPECT_NEAR(bspline_square_integral(4), cardinal_bspline(8, 4.0), 1e-14);
  const Window w = make_bspline_window(4);
  const double c = 1.0 / std::sqrt(kTwoPi * (151.0 / 315.0) / 4.0);
  EXPECT_NEAR(w(-0.5), c * cardinal_bspline(4, 2.0), 1e-14);
}

TEST(Window, SupportAndOrderGate) {
  const Window w = make_bspline_window(4);
  EXPECT_EQ(w(-1.001), 0.0);
  EXPECT_EQ(w(0.001), 0.0);
  EXPECT_GT(w(-0.5), 0.0);
  EXPECT_THROW(make_bspline_window(2), std::invalid_argument);
}

TEST(Window, TransformMatchesQuadrature) {
  const Window w = make_bspline_window(4);
  for (double xi : {0.0, 1.3, -4.0, 17.0}) {
    const cdouble q = integrate([&](double t) { return w(t) * cdouble(std::cos(xi * t), -std::sin(xi * t)); }, -1.0, 0.0, 256);
    EXPECT_LT(std::abs(q - w.transform(xi)), 1e-12) << xi;
  }
}

TEST(FoldedWindow, PoissonAgainstDirectSum) {
  const Window w = make_bspline_window(4);
  for (long gamma : {8L, 16L}) {
    // gamma^{-1/2} sum_r W(r/gamma) e^{-i lambda r}.
    for (double lambda : {-2.5, -0.3, 0.0, 0.7, 3.0}) {
      cdouble direct{};
      for (long r = -gamma; r <= 0; ++r) {
        direct += w(static_cast<double>(r) / static_cast<double>(gamma)) * std::exp(cdouble(0.0, -lambda * static_cast<double>(r)));
      }
      direct /= std::sqrt(static_cast<double>(gamma));
      EXPECT_LT(std::abs(folded_window_response(w, gamma, lambda) - direct), 1e-10) << gamma << " " << lambda;
    }
  }
}

TEST(FoldedWindow, Periodic) {
  const Window w = make_bspline_window(4);
  EXPECT_LT(std::abs(folded_window_response(w, 8, 0.4) - folded_window_response(w, 8, 0.4 + kTwoPi)), 1e-12);
}

TEST(FoldedWindow, ApproximationByCentralTerm) {
  const Window w = make_bspline_window(4);
  auto gap = [&](long gamma) {
    double m = 0.0;
    for (int q = 0; q <= 2000; ++q) {
      const double lambda = -kPi + kTwoPi * q / 2000.0;
      const double g = static_cast<double>(gamma);
      m = std::max(m, std::abs(folded_window_response(w, gamma, lambda) - std::sqrt(g) * w.transform(g * lambda)));
    }
    return m;
  };
  // Aliases sit near sinc zeros at small gamma, so the rate gamma^{1/2 - 4} only settles late.
  std::vector<double> scaled;
  for (long gamma : {8L, 16L, 32L, 64L, 128L, 256L}) scaled.push_back(gap(gamma) * std::pow(static_cast<double>(gamma), 3.5));
  for (double s : scaled) EXPECT_LT(s, 15.0);
  EXPECT_LT(scaled.back() / scaled[scaled.size() - 2], 1.1);
}

TEST(FoldedWindow, DecaysAtFixedFrequency) {
  const Window w = make_bspline_window(4);
  double prev = std::abs(folded_window_response(w, 8, 1.0));
  for (long gamma : {16L, 32L, 64L}) {
    const double cur = std::abs(folded_window_response(w, gamma, 1.0));
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(Sigma2, Basics) {
  const Window w = make_bspline_window(4);
  EXPECT_EQ(asymptotic_sigma2(w, 0.0), 0.0);
  for (double f0 : {0.1, 1.0 / kTwoPi, 2.0}) EXPECT_GE(asymptotic_sigma2(w, f0), f0 * f0);
}

TEST(Sigma2, MatchesGammaOfOneBranchFamily) {
  const Window w = make_bspline_window(4);
  const auto fam = window_pipeline_family(w, TimeKernel::impulse(), {8, 16});
  EXPECT_NEAR(asymptotic_sigma2(w, 1.0 / kTwoPi), gamma_limit(fam, 0, 0).value, 1e-8);
  const auto ar = ar1_kernel(0.5).kernel;
  const auto fam_ar = window_pipeline_family(w, ar, {8, 16});
  EXPECT_NEAR(asymptotic_sigma2(w, std::norm(eval_response(ar, 0.0))), gamma_limit(fam_ar, 0, 0).value, 1e-8);
}

TEST(Pipeline, KernelsMatchWindowedCoefficients) {
  const Window w = make_bspline_window(4);
  const TimeKernel a(0, {1.0, 0.6, 0.2});
  const auto fam = window_pipeline_family(w, a, {8});
  const auto x = simulate_linear_process(a, 200, {}, 12);
  const auto z = windowed_coefficients(x, w, 8);
  // x[m] is the process at time m, so windowed_coefficients sees X_u = process(u - 1).
  FamilyLevel lv = fam.level(0);
  lv.kernels[0] = TimeKernel(lv.kernels[0].start() + 1, lv.kernels[0].coeffs());
  const DecimatedFamily shifted({lv}, {0.0}, 4.0);
  const auto p = simulate_decimated(shifted, 0, z.size(), {}, 12);
  for (std::size_t k = 2; k + 2 < z.size(); ++k) EXPECT_NEAR(z[k], p.values[0][k], 1e-12) << k;
}

TEST(Estimate, ZeroSeriesAndTooShort) {
  const Window w = make_bspline_window(4);
  const auto e = estimate_f0(std::vector<double>(256, 0.0), w, 8);
  EXPECT_EQ(e.f0_hat, 0.0);
  EXPECT_EQ(e.n_j, 32u);
  EXPECT_THROW(estimate_f0(std::vector<double>(7, 1.0), w, 8), std::invalid_argument);
}

TEST(Estimate, WhiteNoiseTarget) {
  const Window w = make_bspline_window(4);
  const auto x = simulate_linear_process(TimeKernel::impulse(), 1 << 16, {}, 2718);
  const auto e = estimate_f0(x, w, 32);
  EXPECT_GE(e.f0_hat, 0.0);
  EXPECT_LT(std::abs(e.f0_hat - 1.0 / kTwoPi), 3.0 * e.se);
  EXPECT_TRUE(e.rate_ok);
}

TEST(Estimate, Ar1Target) {
  const Window w = make_bspline_window(4);
  const auto a = ar1_kernel(0.5).kernel;
  const auto x = simulate_linear_process(a, 1 << 16, {}, 31415);
  const auto e = estimate_f0(x, w, 32);
  EXPECT_LT(std::abs(e.f0_hat - 2.0 / kPi), 3.0 * e.se);
}

TEST(Bias, AnalyticWhiteNoiseDecaysAtLeastQuadratically) {
  const Window w = make_bspline_window(4);
  const auto r = analytic_bias(w, TimeKernel::impulse(), {8, 16, 32, 64}, 1.0 / kTwoPi);
  ASSERT_TRUE(r.slope.has_value());
  EXPECT_LE(*r.slope, -2.0);
  EXPECT_EQ(r.order_tag, "gamma^-2");
  EXPECT_LT(std::abs(r.bias.back()), 1e-2);
}

TEST(Bias, ExpectationIsLagZeroCovariance) {
  const Window w = make_bspline_window(4);
  const auto fam = window_pipeline_family(w, TimeKernel::impulse(), {16});
  EXPECT_EQ(analytic_expectation(w, TimeKernel::impulse(), 16), cov_exact(fam, 0, 0, 0, 0, 0));
}

TEST(Bias, HypothesisGate) {
  const Window w = make_bspline_window(4);
  const Window slow([w](double t) { return w(t); }, [w](double xi) { return w.transform(xi); }, 1.5, {-1.0, 0.0}, "slow");
  EXPECT_THROW(predict_bias(slow, {8, 16}), HypothesisError);
  EXPECT_THROW(check_rate_condition(1024, 8, 1.5), HypothesisError);
  EXPECT_THROW(estimate_f0(std::vector<double>(64, 1.0), slow, 8), HypothesisError);
}

TEST(Bias, SlopeFromSuppliedMeans) {
  const Window w = make_bspline_window(4);
  const auto r = predict_bias(w, {8, 16, 32}, {1.0 + 1.0 / 64.0, 1.0 + 1.0 / 256.0, 1.0 + 1.0 / 1024.0}, 1.0);
  ASSERT_TRUE(r.slope.has_value());
  EXPECT_NEAR(*r.slope, -2.0, 1e-12);
}

TEST(Rate, Examples) {
  const auto a = check_rate_condition(1u << 20, 64, 4.0);
  EXPECT_NEAR(a.value, std::pow(2.0, -35.0), 1e-20);
  EXPECT_TRUE(a.ok);
  const auto b = check_rate_condition(1u << 20, 2, 4.0);
  EXPECT_NEAR(b.value, std::pow(2.0, 2.5), 1e-12);
  EXPECT_FALSE(b.ok);
  const auto c = check_rate_condition(1024, 1024, 4.0);
  EXPECT_LT(c.value, 1.0);
  EXPECT_TRUE(c.degenerate);
}

TEST(Leakage, EmptyBandAndConcentration) {
  const Window w = make_bspline_window(4);
  const auto fam = window_pipeline_family(w, TimeKernel::impulse(), {8, 16, 32, 64});
  EXPECT_EQ(leakage_integral(fam, 0, kPi).integral, 0.0);
  EXPECT_EQ(leakage_integral(fam, 0, 4.0).integral, 0.0);
  EXPECT_LT(leakage_integral(fam, 3, 0.5).integral, 1e-5);
  const auto r = leakage_integral(fam, 3, 0.5, 1 << 16);
  EXPECT_EQ(r.n_j, 1024u);
  EXPECT_NEAR(r.scaled, 32.0 * r.integral, 1e-18);
  EXPECT_THROW(leakage_integral(fam, 0, 0.0), std::invalid_argument);
}

TEST(Leakage, MatchesComplementOfBand) {
  const auto fam = moving_average_family({16});
  const TimeKernel& v = fam.kernel(0, 0);
  const double total = integrate([&](double l) { return std::norm(oracle::dft(v, l)); }, 0.0, kPi, 512);
  const double band = integrate([&](double l) { return std::norm(oracle::dft(v, l)); }, 0.0, 0.5, 512);
  EXPECT_NEAR(leakage_integral(fam, 0, 0.5).integral, total - band, 1e-12);
}

TEST(Series, ReadsHeaderAndRejectsGarbage) {
  std::stringstream ok("x\n1.5\n\n# c\n-2\n");
  EXPECT_EQ(read_series(ok), (std::vector<double>{1.5, -2.0}));
  std::stringstream bad("1\n2\nfoo\n");
  EXPECT_THROW(read_series(bad), std::runtime_error);
}

TEST(SweepCsv, Layout) {
  std::ostringstream os;
  write_specdens_sweep_csv(os, {{8, 0.5, 0.01, 0.25}});
  EXPECT_EQ(os.str(), "gamma,f0_hat,se,rate_value\n8,0.5,0.01,0.25\n");
}
