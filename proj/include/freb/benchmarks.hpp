#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "freb/calibration.hpp"
#include "freb/random.hpp"
#include "freb/statistics.hpp"

namespace freb {

struct NormalSpec {
  std::vector<double> mean;
  double variance;  // isotropic
};

struct UniformSpec {
  std::vector<double> lower;
  std::vector<double> upper;
};

using ParameterDistribution = std::variant<NormalSpec, UniformSpec>;

// x | θ ~ N(θ, noise_variance·I)
struct GaussianLikelihood {
  double noise_variance;
};

// x | θ ~ w·N(θ, σ₁²I) + (1−w)·N(θ, σ₂²I)
struct MixtureLikelihood {
  std::pair<double, double> variances;
  double weight;
};

using Likelihood = std::variant<GaussianLikelihood, MixtureLikelihood>;

struct SplitSizes {
  std::size_t train = 0;
  std::size_t calibration = 0;
  std::size_t diagnostic = 0;
};

// A synthetic study: prior π for the train split, reference r for the
// calibration and diagnostic splits, a shared likelihood, and targets given
// either as fixed θ* values (one observation each) or drawn from p_target.
struct Scenario {
  std::string name;
  std::size_t theta_dim = 1;
  ParameterDistribution prior;
  ParameterDistribution reference;
  Likelihood likelihood;
  std::vector<ParameterPoint> target_thetas;
  std::optional<ParameterDistribution> target_distribution;
  std::size_t target_count = 0;
  SplitSizes sizes;
  std::size_t oversampling = 10;
  std::uint64_t seed = 0;

  std::size_t obs_dim() const noexcept { return theta_dim; }
  std::size_t total_targets() const noexcept;
  void validate() const;
};

// π = N(0, 1), r = U(−10, 10), x | θ ~ N(θ, 1); B = 100,000, B′ = 50,000,
// B″ = 50,000, K = 10, θ* = 4.
Scenario gauss1d_scenario(std::uint64_t seed = 0);
// π = N(0, 2I), r = U([−10, 10]²), x | θ ~ ½N(θ, I) + ½N(θ, 0.01I);
// B = 50,000, B′ = 30,000, B″ = 20,000, K = 10,
// θ* ∈ {(8.5, −8.5), (−8.5, −8.5), (0, 0)}.
Scenario gmm2d_scenario(std::uint64_t seed = 0);
// Looks up "gauss1d" or "gmm2d".
Scenario named_scenario(std::string_view name, std::uint64_t seed = 0);

struct BenchmarkSplits {
  SampleSet train;
  SampleSet calibration;
  SampleSet diagnostic;
  SampleSet targets;
};

void draw_parameter(const ParameterDistribution& dist, CounterRng& rng, std::span<double> out);
void draw_observation(const Likelihood& likelihood, std::span<const double> theta, CounterRng& rng,
                      std::span<double> out);

// Each split comes from its own stream (streams::kTrain, ...) of the seed.
SampleSet sample_split(const Scenario& scenario, SplitRole role);
BenchmarkSplits sample_scenario(const Scenario& scenario);

// Exact posterior π(θ|x) for the scenario's prior and likelihood.
TestStatistic exact_posterior(const Scenario& scenario);

// Local coverage of the exact 1D HPD interval under x ~ N(θ, 1), prior N(0, 1):
// Φ(θ + z√2) − Φ(θ − z√2), z the (1 + credibility)/2 normal quantile.
double analytic_hpd_coverage_1d(double theta, double credibility);

// Exact amortized p-value for the 1D study: 1 − Φ(2d − θ0) + Φ(−2d − θ0),
// d = |θ0 − x/2|.
double oracle_pvalue_1d(double x, double theta0);

double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace freb
