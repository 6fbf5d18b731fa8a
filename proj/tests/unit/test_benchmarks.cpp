#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "freb/benchmarks.hpp"
#include "freb/errors.hpp"
#include "oracles.hpp"

using namespace freb;

TEST(Scenario, Gauss1dDefaults) {
  const Scenario s = gauss1d_scenario();
  EXPECT_EQ(s.sizes.train, 100000u);
  EXPECT_EQ(s.sizes.calibration, 50000u);
  EXPECT_EQ(s.sizes.diagnostic, 50000u);
  EXPECT_EQ(s.oversampling, 10u);
  ASSERT_EQ(s.target_thetas.size(), 1u);
  EXPECT_EQ(s.target_thetas[0][0], 4.0);
  EXPECT_NO_THROW(s.validate());
}

TEST(Scenario, Gmm2dDefaults) {
  const Scenario s = gmm2d_scenario();
  EXPECT_EQ(s.sizes.train, 50000u);
  EXPECT_EQ(s.sizes.calibration, 30000u);
  EXPECT_EQ(s.sizes.diagnostic, 20000u);
  ASSERT_EQ(s.target_thetas.size(), 3u);
  EXPECT_EQ(s.target_thetas[0], (ParameterPoint{8.5, -8.5}));
  EXPECT_EQ(s.target_thetas[2], (ParameterPoint{0.0, 0.0}));
}

TEST(Scenario, UnknownNameAndInvalidSpecs) {
  EXPECT_THROW(named_scenario("gauss3d"), InvalidInput);
  Scenario s = gauss1d_scenario();
  s.sizes.calibration = 0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = gauss1d_scenario();
  s.reference = UniformSpec{{-1.0}, {1.0}};  // misses most of the prior
  EXPECT_THROW(s.validate(), InvalidInput);
  s = gauss1d_scenario();
  s.likelihood = GaussianLikelihood{0.0};
  EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(Sampling, DeterministicPerSeed) {
  Scenario s = gmm2d_scenario(7);
  s.sizes = {500, 400, 300};
  const auto a = sample_scenario(s);
  const auto b = sample_scenario(s);
  EXPECT_TRUE(a.train == b.train);
  EXPECT_TRUE(a.calibration == b.calibration);
  EXPECT_TRUE(a.diagnostic == b.diagnostic);
  EXPECT_TRUE(a.targets == b.targets);
  s.seed = 8;
  EXPECT_FALSE(sample_scenario(s).calibration == a.calibration);
}

TEST(Sampling, SplitsUseDisjointStreams) {
  Scenario s = gauss1d_scenario(1);
  s.sizes = {1000, 1000, 1000};
  const auto splits = sample_scenario(s);
  EXPECT_EQ(splits.calibration.role(), SplitRole::Calibration);
  EXPECT_EQ(splits.diagnostic.role(), SplitRole::Diagnostic);
  // Same reference distribution, different streams: no shared rows.
  for (std::size_t i = 0; i < 1000; ++i) ASSERT_NE(splits.calibration.theta(i)[0], splits.diagnostic.theta(i)[0]);
  // Changing one split's size leaves the others untouched.
  Scenario t = s;
  t.sizes.train = 10;
  EXPECT_TRUE(sample_split(t, SplitRole::Calibration) == splits.calibration);
}

TEST(Sampling, ReferenceSpansTheBox) {
  const auto cal = sample_split(gmm2d_scenario(3), SplitRole::Calibration);
  for (std::size_t j = 0; j < 2; ++j) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < cal.size(); ++i) {
      lo = std::min(lo, cal.theta(i)[j]);
      hi = std::max(hi, cal.theta(i)[j]);
    }
    EXPECT_LE(lo, -9.5);
    EXPECT_GE(hi, 9.5);
    EXPECT_GE(lo, -10.0);
    EXPECT_LE(hi, 10.0);
  }
}

TEST(Sampling, TrainFollowsPriorAndLikelihood) {
  const auto train = sample_split(gauss1d_scenario(4), SplitRole::Train);
  double st = 0, st2 = 0, sr2 = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double t = train.theta(i)[0], r = train.x(i)[0] - t;
    st += t;
    st2 += t * t;
    sr2 += r * r;
  }
  const double n = static_cast<double>(train.size());
  EXPECT_NEAR(st / n, 0.0, 0.015);
  EXPECT_NEAR(st2 / n, 1.0, 0.02);
  EXPECT_NEAR(sr2 / n, 1.0, 0.02);
}

TEST(Sampling, MixtureNoiseVariance) {
  Scenario s = gmm2d_scenario(5);
  s.sizes.diagnostic = 40000;
  const auto d = sample_split(s, SplitRole::Diagnostic);
  double small = 0, total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = d.x(i)[0] - d.theta(i)[0];
    total += r * r;
    small += std::abs(r) < 0.3 ? 1 : 0;
  }
  const double n = static_cast<double>(d.size());
  EXPECT_NEAR(total / n, 0.505, 0.02);
  // P(|r| < 0.3) = ½(2Φ(0.3) − 1) + ½(2Φ(3) − 1)
  EXPECT_NEAR(small / n, 0.5 * (2 * oracle::Phi(0.3) - 1) + 0.5 * (2 * oracle::Phi(3.0) - 1), 0.01);
}

TEST(Sampling, TargetsOneObservationEach) {
  Scenario s = gmm2d_scenario(2);
  const auto targets = sample_split(s, SplitRole::Target);
  ASSERT_EQ(targets.size(), 3u);
  EXPECT_EQ(targets.theta(0)[0], 8.5);
  s.target_distribution = s.prior;
  s.target_count = 10;
  EXPECT_EQ(sample_split(s, SplitRole::Target).size(), 13u);
}

TEST(Oracles, AnalyticHpdCoverage) {
  EXPECT_NEAR(analytic_hpd_coverage_1d(0.0, 0.9), oracle::kHpdCoverageAt0, 1e-12);
  EXPECT_NEAR(analytic_hpd_coverage_1d(4.0, 0.9), oracle::kHpdCoverageAt4, 1e-12);
  EXPECT_NEAR(analytic_hpd_coverage_1d(2.0, 0.9), oracle::kHpdCoverageAt2, 1e-12);
  for (double t : {0.5, 1.7, 3.3}) EXPECT_NEAR(analytic_hpd_coverage_1d(t, 0.9), analytic_hpd_coverage_1d(-t, 0.9), 1e-14);
  EXPECT_THROW(analytic_hpd_coverage_1d(0.0, 1.0), InvalidInput);
}

TEST(Oracles, HpdCoverageIntegratesToMarginal) {
  // Trapezoid over θ ~ N(0, 1) on [-12, 12].
  const int n = 24000;
  const double h = 24.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = -12.0 + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(-0.5 * t * t) / std::sqrt(2 * std::numbers::pi) * analytic_hpd_coverage_1d(t, 0.9);
  }
  EXPECT_NEAR(sum * h, 0.9, 0.005);
}

TEST(Oracles, PValueClosedForm) {
  EXPECT_EQ(oracle_pvalue_1d(0.0, 0.0), 1.0);
  EXPECT_NEAR(oracle_pvalue_1d(2.0, 0.0), oracle::kPValue20, 1e-15);
  EXPECT_NEAR(oracle_pvalue_1d(4.0, 4.0), 0.5, 1e-15);
}

TEST(Oracles, PValueMonteCarloCrossCheck) {
  // h(2; 0) = P(λ(X; 0) ≤ λ(2; 0)), X ~ N(0, 1).
  CounterRng rng(12);
  const double ref = oracle::posterior_1d(2.0, 0.0);
  const int n = 200000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += oracle::posterior_1d(rng.normal(), 0.0) <= ref ? 1 : 0;
  const double p = oracle_pvalue_1d(2.0, 0.0);
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Oracles, ExactPosteriorMatchesScenario) {
  const auto post = exact_posterior(gmm2d_scenario());
  const std::vector<double> x{1.0, 2.0}, t{0.5, 1.5};
  EXPECT_NEAR(post(x, t), oracle::MixturePosterior{}.density(x, t), 1e-12);
  const auto post1 = exact_posterior(gauss1d_scenario());
  EXPECT_NEAR(post1(std::vector<double>{2.0}, std::vector<double>{1.0}), oracle::kInvSqrtPi, 1e-15);
}
