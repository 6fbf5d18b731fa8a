#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "freb/errors.hpp"
#include "freb/statistics.hpp"
#include "oracles.hpp"

using namespace freb;

namespace {
double eval(const TestStatistic& s, std::vector<double> x, std::vector<double> theta) {
  return evaluate_statistic(s, Observation(std::move(x)), ParameterPoint(std::move(theta)));
}
}  // namespace

TEST(ConjugatePosterior, DensityAtModeMatchesOneOverRootPi) {
  const auto post = conjugate_posterior_1d(0.0, 1.0, 1.0).as_statistic();
  EXPECT_NEAR(eval(post, {2.0}, {1.0}), oracle::kInvSqrtPi, 1e-15);
  EXPECT_NEAR(eval(post, {0.0}, {0.0}), oracle::kInvSqrtPi, 1e-15);
}

TEST(ConjugatePosterior, SymmetricAboutHalfX) {
  const auto post = conjugate_posterior_1d(0.0, 1.0, 1.0).as_statistic();
  EXPECT_DOUBLE_EQ(eval(post, {2.0}, {0.0}), eval(post, {2.0}, {2.0}));
}

TEST(ConjugatePosterior, MatchesOracleDensity) {
  const auto post = conjugate_posterior_1d(0.0, 1.0, 1.0).as_statistic();
  for (double x : {-3.0, -0.5, 0.0, 1.7, 4.0})
    for (double t : {-2.0, 0.0, 0.3, 2.5}) EXPECT_NEAR(eval(post, {x}, {t}), oracle::posterior_1d(x, t), 1e-14);
}

TEST(ConjugatePosterior, MeanAndVariance) {
  const auto p = conjugate_posterior_1d(0.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(p.posterior_variance(), 0.5);
  const std::vector<double> x2{2.0}, x0{0.0};
  EXPECT_DOUBLE_EQ(p.posterior_mean(x2)[0], 1.0);
  EXPECT_DOUBLE_EQ(p.posterior_mean(x0)[0], 0.0);
}

TEST(ConjugatePosterior, FlatPriorLimitRecoversLikelihood) {
  const auto p = conjugate_posterior_1d(0.0, 1e12, 1.0);
  const std::vector<double> x{3.0};
  EXPECT_NEAR(p.posterior_mean(x)[0], 3.0, 1e-9);
  EXPECT_NEAR(p.posterior_variance(), 1.0, 1e-9);
}

TEST(ConjugatePosterior, RejectsNonPositiveVariance) {
  EXPECT_THROW(conjugate_posterior_1d(0.0, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(conjugate_posterior_1d(0.0, 1.0, -1.0), InvalidInput);
}

TEST(MixturePosterior, ShrinkageFactors) {
  const auto p = mixture_posterior_2d(2.0, {1.0, 0.01}, 0.5);
  EXPECT_DOUBLE_EQ(p.shrinkage(0), 2.0 / 3.0);
  EXPECT_NEAR(p.shrinkage(1), 200.0 / 201.0, 1e-15);
}

TEST(MixturePosterior, IdenticalComponentsCollapse) {
  const auto p = mixture_posterior_2d(2.0, {1.0, 1.0}, 0.5);
  const std::vector<double> x{1.2, -0.7};
  for (double a : {-1.0, 0.0, 0.8})
    for (double b : {-0.5, 0.4}) {
      const std::vector<double> th{a, b};
      const double d0 = a - 2.0 * x[0] / 3.0, d1 = b - 2.0 * x[1] / 3.0;
      const double expected = std::exp(-(d0 * d0 + d1 * d1) / (2.0 * 2.0 / 3.0)) / (2.0 * std::numbers::pi * 2.0 / 3.0);
      EXPECT_NEAR(p.density(x, th), expected, 1e-14);
    }
}

TEST(MixturePosterior, BroadComponentDominatesFarFromOrigin) {
  const auto p = mixture_posterior_2d(2.0, {1.0, 0.01}, 0.5);
  const std::vector<double> x{8.5, -8.5};
  const auto [broad, narrow] = p.component_weights(x);
  EXPECT_NEAR(narrow, oracle::kNarrowWeightFar, 1e-12);
  EXPECT_NEAR(broad + narrow, 1.0, 1e-15);
  EXPECT_NEAR(narrow, oracle::MixturePosterior{}.narrow_weight(x), 1e-15);
}

TEST(MixturePosterior, MatchesOracleDensity) {
  const auto p = mixture_posterior_2d(2.0, {1.0, 0.01}, 0.5);
  const oracle::MixturePosterior o;
  for (auto x : {std::vector<double>{0.0, 0.0}, {1.0, -2.0}, {8.5, -8.5}})
    for (auto t : {std::vector<double>{0.0, 0.0}, {0.9, -1.9}, {5.5, -5.0}}) {
      const double ref = o.density(x, t);
      EXPECT_NEAR(p.density(x, t), ref, 1e-12 * std::max(1.0, ref));
    }
}

TEST(MixturePosterior, RejectsBadParameters) {
  EXPECT_THROW(mixture_posterior_2d(-1.0, {1.0, 0.01}, 0.5), InvalidInput);
  EXPECT_THROW(mixture_posterior_2d(2.0, {0.0, 0.01}, 0.5), InvalidInput);
  EXPECT_THROW(mixture_posterior_2d(2.0, {1.0, 0.01}, 1.0), InvalidInput);
}

TEST(TestStatistic, DimensionMismatchIsRejected) {
  const auto post = conjugate_posterior_1d(0.0, 1.0, 1.0).as_statistic();
  EXPECT_THROW(eval(post, {1.0, 2.0}, {0.0}), InvalidInput);
  EXPECT_THROW(eval(post, {1.0}, {0.0, 1.0}), InvalidInput);
}

TEST(TestStatistic, NonFiniteOutputIsEvaluationError) {
  const TestStatistic bad("bad", 1, 1, [](auto, auto) { return std::numeric_limits<double>::quiet_NaN(); });
  EXPECT_THROW(eval(bad, {1.0}, {0.0}), EvaluationError);
  EXPECT_TRUE(TestStatistic::rejects_small_values());
}

TEST(TestStatistic, NonFiniteInputsAreRejected) {
  EXPECT_THROW(ParameterPoint({std::numeric_limits<double>::infinity()}), InvalidInput);
  EXPECT_THROW(Observation({std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
}

TEST(StatisticTable, LooksUpById) {
  StatisticTable table(1);
  const std::vector<double> a{0.5}, b{1.5};
  table.add(a, 0, 0.25);
  table.add(b, 0, 0.75);
  table.add(a, 3, 0.1);
  const auto stat = table.as_statistic();
  EXPECT_EQ(eval(stat, {0.0}, {0.5}), 0.25);
  EXPECT_EQ(eval(stat, {0.0}, {1.5}), 0.75);
  EXPECT_EQ(eval(stat, {3.0}, {0.5 + 1e-12}), 0.1);
  EXPECT_THROW(eval(stat, {1.0}, {0.5}), EvaluationError);
  EXPECT_EQ(table.observation_ids(), (std::vector<std::int64_t>{0, 3}));
}
