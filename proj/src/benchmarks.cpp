#include "freb/benchmarks.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "freb/errors.hpp"

namespace freb {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal(), p);
}

double analytic_hpd_coverage_1d(double theta, double credibility) {
  if (!(credibility > 0.0 && credibility < 1.0)) throw InvalidInput("credibility must lie in (0, 1)");
  const double reach = normal_quantile(0.5 + 0.5 * credibility) * std::numbers::sqrt2;
  return normal_cdf(theta + reach) - normal_cdf(theta - reach);
}

double oracle_pvalue_1d(double x, double theta0) {
  const double d = std::abs(theta0 - 0.5 * x);
  return 1.0 - normal_cdf(2.0 * d - theta0) + normal_cdf(-2.0 * d - theta0);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t distribution_dim(const ParameterDistribution& dist) {
  return std::visit(
      [](const auto& d) -> std::size_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NormalSpec>)
          return d.mean.size();
        else
          return d.lower.size();
      },
      dist);
}

void validate_distribution(const ParameterDistribution& dist, std::size_t dim, const char* what) {
  if (distribution_dim(dist) != dim) throw InvalidInput(std::string(what) + " has the wrong dimension");
  if (const auto* n = std::get_if<NormalSpec>(&dist)) {
    if (!(n->variance > 0.0) || !std::isfinite(n->variance))
      throw InvalidInput(std::string(what) + " variance must be positive");
  } else {
    const auto& u = std::get<UniformSpec>(dist);
    if (u.upper.size() != u.lower.size()) throw InvalidInput(std::string(what) + " bounds disagree in dimension");
    for (std::size_t j = 0; j < u.lower.size(); ++j)
      if (!(u.upper[j] > u.lower[j]) || !std::isfinite(u.lower[j]) || !std::isfinite(u.upper[j]))
        throw InvalidInput(std::string(what) + " bounds must be finite and increasing");
  }
}

// Prior mass outside the reference support; 0 when r has full support.
double mass_outside_reference(const ParameterDistribution& prior, const ParameterDistribution& reference) {
  const auto* box = std::get_if<UniformSpec>(&reference);
  if (box == nullptr) return 0.0;
  double outside = 0.0;
  if (const auto* n = std::get_if<NormalSpec>(&prior)) {
    const double sd = std::sqrt(n->variance);
    for (std::size_t j = 0; j < n->mean.size(); ++j) {
      outside += normal_cdf((box->lower[j] - n->mean[j]) / sd);
      outside += 1.0 - normal_cdf((box->upper[j] - n->mean[j]) / sd);
    }
  } else {
    const auto& u = std::get<UniformSpec>(prior);
    for (std::size_t j = 0; j < u.lower.size(); ++j)
      if (u.lower[j] < box->lower[j] || u.upper[j] > box->upper[j]) outside = 1.0;
  }
  return outside;
}

}  // namespace

std::size_t Scenario::total_targets() const noexcept {
  return target_thetas.size() + (target_distribution ? target_count : 0);
}

void Scenario::validate() const {
  if (theta_dim == 0) throw InvalidInput("scenario parameter dimension must be positive");
  validate_distribution(prior, theta_dim, "prior");
  validate_distribution(reference, theta_dim, "reference distribution");
  if (target_distribution) validate_distribution(*target_distribution, theta_dim, "target distribution");
  if (const auto* g = std::get_if<GaussianLikelihood>(&likelihood)) {
    if (!(g->noise_variance > 0.0)) throw InvalidInput("likelihood noise variance must be positive");
  } else {
    const auto& m = std::get<MixtureLikelihood>(likelihood);
    if (!(m.variances.first > 0.0) || !(m.variances.second > 0.0))
      throw InvalidInput("mixture likelihood variances must be positive");
    if (!(m.weight > 0.0 && m.weight < 1.0)) throw InvalidInput("mixture weight must lie in (0, 1)");
  }
  for (const auto& t : target_thetas)
    if (t.dim() != theta_dim) throw InvalidInput("target theta has the wrong dimension");
  if (sizes.train == 0 || sizes.calibration == 0 || sizes.diagnostic == 0)
    throw InvalidInput("split sizes must be at least 1");
  if (total_targets() == 0) throw InvalidInput("scenario needs at least one target");
  if (oversampling == 0) throw InvalidInput("oversampling factor must be at least 1");
  // r must cover π; a Gaussian prior against a bounded box may leave only a
  // negligible tail outside.
  if (mass_outside_reference(prior, reference) > 1e-6)
    throw InvalidInput("reference distribution does not cover the prior's support");
}

Scenario gauss1d_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "gauss1d";
  s.theta_dim = 1;
  s.prior = NormalSpec{{0.0}, 1.0};
  s.reference = UniformSpec{{-10.0}, {10.0}};
  s.likelihood = GaussianLikelihood{1.0};
  s.target_thetas = {ParameterPoint{4.0}};
  s.sizes = {100'000, 50'000, 50'000};
  s.oversampling = 10;
  s.seed = seed;
  return s;
}

Scenario gmm2d_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "gmm2d";
  s.theta_dim = 2;
  s.prior = NormalSpec{{0.0, 0.0}, 2.0};
  s.reference = UniformSpec{{-10.0, -10.0}, {10.0, 10.0}};
  s.likelihood = MixtureLikelihood{{1.0, 0.01}, 0.5};
  s.target_thetas = {ParameterPoint{8.5, -8.5}, ParameterPoint{-8.5, -8.5}, ParameterPoint{0.0, 0.0}};
  s.sizes = {50'000, 30'000, 20'000};
  s.oversampling = 10;
  s.seed = seed;
  return s;
}

Scenario named_scenario(std::string_view name, std::uint64_t seed) {
  if (name == "gauss1d") return gauss1d_scenario(seed);
  if (name == "gmm2d") return gmm2d_scenario(seed);
  throw InvalidInput("unknown scenario '" + std::string(name) + "' (expected gauss1d or gmm2d)");
}

void draw_parameter(const ParameterDistribution& dist, CounterRng& rng, std::span<double> out) {
  if (const auto* n = std::get_if<NormalSpec>(&dist)) {
    const double sd = std::sqrt(n->variance);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = n->mean[j] + sd * rng.normal();
  } else {
    const auto& u = std::get<UniformSpec>(dist);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = rng.uniform(u.lower[j], u.upper[j]);
  }
}

void draw_observation(const Likelihood& likelihood, std::span<const double> theta, CounterRng& rng,
                      std::span<double> out) {
  double sd;
  if (const auto* g = std::get_if<GaussianLikelihood>(&likelihood)) {
    sd = std::sqrt(g->noise_variance);
  } else {
    const auto& m = std::get<MixtureLikelihood>(likelihood);
    sd = std::sqrt(rng.uniform() < m.weight ? m.variances.first : m.variances.second);
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = theta[j] + sd * rng.normal();
}

SampleSet sample_split(const Scenario& scenario, SplitRole role) {
  scenario.validate();
  const std::size_t d = scenario.theta_dim;
  SampleSet out(role, d, scenario.obs_dim());
  std::vector<double> theta(d), x(scenario.obs_dim());

  auto draw_rows = [&](const ParameterDistribution& dist, std::size_t n, std::uint64_t stream) {
    CounterRng rng(scenario.seed, stream);
    out.reserve(out.size() + n);
    for (std::size_t i = 0; i < n; ++i) {
      draw_parameter(dist, rng, theta);
      draw_observation(scenario.likelihood, theta, rng, x);
      out.add(theta, x);
    }
  };

  switch (role) {
    case SplitRole::Train:
      draw_rows(scenario.prior, scenario.sizes.train, streams::kTrain);
      out.set_reference("prior");
      break;
    case SplitRole::Calibration:
      draw_rows(scenario.reference, scenario.sizes.calibration, streams::kCalibration);
      out.set_reference("reference");
      break;
    case SplitRole::Diagnostic:
      draw_rows(scenario.reference, scenario.sizes.diagnostic, streams::kDiagnostic);
      out.set_reference("reference");
      break;
    case SplitRole::Target: {
      // Single observation per target (n = 1).
      CounterRng rng(scenario.seed, streams::kTarget);
      for (const auto& t : scenario.target_thetas) {
        draw_observation(scenario.likelihood, t.coords(), rng, x);
        out.add(t.coords(), x);
      }
      if (scenario.target_distribution) {
        for (std::size_t i = 0; i < scenario.target_count; ++i) {
          draw_parameter(*scenario.target_distribution, rng, theta);
          draw_observation(scenario.likelihood, theta, rng, x);
          out.add(theta, x);
        }
      }
      out.set_reference(scenario.target_distribution ? "target-distribution" : "fixed");
      break;
    }
  }
  return out;
}

BenchmarkSplits sample_scenario(const Scenario& scenario) {
  return {sample_split(scenario, SplitRole::Train), sample_split(scenario, SplitRole::Calibration),
          sample_split(scenario, SplitRole::Diagnostic), sample_split(scenario, SplitRole::Target)};
}

TestStatistic exact_posterior(const Scenario& scenario) {
  scenario.validate();
  const auto* prior = std::get_if<NormalSpec>(&scenario.prior);
  if (prior == nullptr) throw InvalidInput("exact posteriors are available for Gaussian priors only");
  if (const auto* g = std::get_if<GaussianLikelihood>(&scenario.likelihood))
    return GaussianConjugatePosterior(prior->mean, prior->variance, g->noise_variance).as_statistic();
  const auto& m = std::get<MixtureLikelihood>(scenario.likelihood);
  for (double c : prior->mean)
    if (c != 0.0) throw InvalidInput("mixture posterior requires a zero-mean prior");
  return GaussianMixturePosterior2D(prior->variance, m.variances, m.weight, scenario.theta_dim).as_statistic();
}

}  // namespace freb
