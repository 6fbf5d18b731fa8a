#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace freb {

// A point θ in parameter space. Coordinates are finite; dimension is fixed at
// construction.
class ParameterPoint {
 public:
  ParameterPoint() = default;
  explicit ParameterPoint(std::vector<double> coords);
  ParameterPoint(std::initializer_list<double> coords);

  std::size_t dim() const noexcept { return coords_.size(); }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;

 private:
  std::vector<double> coords_;
};

// An observation x. Values are finite.
class Observation {
 public:
  Observation() = default;
  explicit Observation(std::vector<double> values);
  Observation(std::initializer_list<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Observation&, const Observation&) = default;

 private:
  std::vector<double> values_;
};

using StatisticFn =
    std::function<double(std::span<const double> x, std::span<const double> theta)>;

// λ(x; θ). Tests reject H0: θ = θ0 for small values of the statistic; a
// statistic with the opposite orientation must be negated before wrapping.
class TestStatistic {
 public:
  TestStatistic(std::string name, std::size_t theta_dim, std::size_t obs_dim,
                StatisticFn fn);

  const std::string& name() const noexcept { return name_; }
  std::size_t theta_dim() const noexcept { return theta_dim_; }
  std::size_t obs_dim() const noexcept { return obs_dim_; }
  static constexpr bool rejects_small_values() noexcept { return true; }

  // Unchecked dimensions; throws EvaluationError on a non-finite result.
  double operator()(std::span<const double> x, std::span<const double> theta) const;

 private:
  std::string name_;
  std::size_t theta_dim_;
  std::size_t obs_dim_;
  StatisticFn fn_;
};

// Dimension-checked evaluation of λ(x; θ).
double evaluate_statistic(const TestStatistic& stat, const Observation& x,
                          const ParameterPoint& theta);

// Conjugate posterior for x | θ ~ N(θ, noise_variance·I) with prior
// θ ~ N(prior_mean, prior_variance·I).
class GaussianConjugatePosterior {
 public:
  GaussianConjugatePosterior(std::vector<double> prior_mean, double prior_variance,
                             double noise_variance);

  std::size_t dim() const noexcept { return prior_mean_.size(); }
  std::span<const double> prior_mean() const noexcept { return prior_mean_; }
  double prior_variance() const noexcept { return prior_variance_; }
  double noise_variance() const noexcept { return noise_variance_; }

  double posterior_variance() const noexcept;
  std::vector<double> posterior_mean(std::span<const double> x) const;
  double density(std::span<const double> x, std::span<const double> theta) const;
  TestStatistic as_statistic() const;

 private:
  std::vector<double> prior_mean_;
  double prior_variance_;
  double noise_variance_;
};

GaussianConjugatePosterior conjugate_posterior_1d(double prior_mean, double prior_variance,
                                                  double noise_variance);

// Posterior for x | θ ~ w·N(θ, σ₁²I) + (1−w)·N(θ, σ₂²I) with prior
// θ ~ N(0, prior_variance·I). The posterior is a two-component mixture.
class GaussianMixturePosterior2D {
 public:
  GaussianMixturePosterior2D(double prior_variance, std::pair<double, double> component_variances,
                             double mixture_weight, std::size_t dim = 2);

  std::size_t dim() const noexcept { return dim_; }
  double prior_variance() const noexcept { return prior_variance_; }
  std::pair<double, double> component_variances() const noexcept { return variances_; }
  double mixture_weight() const noexcept { return weight_; }

  // prior_variance / (prior_variance + σ_k²)
  double shrinkage(std::size_t component) const;
  // Per-axis posterior variance of component k.
  double component_variance(std::size_t component) const;
  // Normalized posterior component weights at x.
  std::pair<double, double> component_weights(std::span<const double> x) const;
  double density(std::span<const double> x, std::span<const double> theta) const;
  TestStatistic as_statistic() const;

 private:
  double prior_variance_;
  std::pair<double, double> variances_;
  double weight_;
  std::size_t dim_;
};

GaussianMixturePosterior2D mixture_posterior_2d(double prior_variance,
                                                std::pair<double, double> component_variances,
                                                double mixture_weight);

// Externally computed statistic values λ(x_id; θ), keyed by observation id and
// θ coordinates (matched to 1e-9 absolute). The wrapped statistic takes a
// one-element observation holding the id.
class StatisticTable {
 public:
  explicit StatisticTable(std::size_t theta_dim);

  void add(std::span<const double> theta, std::int64_t x_id, double lambda);
  std::size_t theta_dim() const noexcept { return theta_dim_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::vector<std::int64_t> observation_ids() const;
  const double* find(std::int64_t x_id, std::span<const double> theta) const;
  TestStatistic as_statistic(std::string name = "precomputed") const;

 private:
  using Key = std::pair<std::int64_t, std::vector<std::int64_t>>;
  Key make_key(std::int64_t x_id, std::span<const double> theta) const;

  std::size_t theta_dim_;
  std::map<Key, double> values_;
};

}  // namespace freb
