#include "freb/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "freb/errors.hpp"

namespace freb {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double c : v) {
    if (!std::isfinite(c)) throw InvalidInput(std::string(what) + " has a non-finite coordinate");
  }
}

std::string describe(std::span<const double> v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

// log N(v; 0, var·I) for an isotropic Gaussian, up to nothing (fully normalized).
double log_isotropic_normal(double squared_norm, double var, std::size_t dim) {
  return -0.5 * squared_norm / var - 0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * var);
}

}  // namespace

ParameterPoint::ParameterPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  require_finite(coords_, "parameter point");
}

ParameterPoint::ParameterPoint(std::initializer_list<double> coords)
    : ParameterPoint(std::vector<double>(coords)) {}

Observation::Observation(std::vector<double> values) : values_(std::move(values)) {
  require_finite(values_, "observation");
}

Observation::Observation(std::initializer_list<double> values)
    : Observation(std::vector<double>(values)) {}

TestStatistic::TestStatistic(std::string name, std::size_t theta_dim, std::size_t obs_dim,
                             StatisticFn fn)
    : name_(std::move(name)), theta_dim_(theta_dim), obs_dim_(obs_dim), fn_(std::move(fn)) {
  if (theta_dim_ == 0 || obs_dim_ == 0) throw InvalidInput("statistic dimensions must be positive");
  if (!fn_) throw InvalidInput("statistic evaluator is empty");
}

double TestStatistic::operator()(std::span<const double> x, std::span<const double> theta) const {
  const double value = fn_(x, theta);
  if (!std::isfinite(value)) {
    throw EvaluationError("statistic '" + name_ + "' is not finite at x=" + describe(x) +
                          ", theta=" + describe(theta));
  }
  return value;
}

double evaluate_statistic(const TestStatistic& stat, const Observation& x,
                          const ParameterPoint& theta) {
  if (x.dim() != stat.obs_dim()) {
    throw InvalidInput("observation dimension " + std::to_string(x.dim()) + " does not match statistic '" +
                       stat.name() + "' (" + std::to_string(stat.obs_dim()) + ")");
  }
  if (theta.dim() != stat.theta_dim()) {
    throw InvalidInput("parameter dimension " + std::to_string(theta.dim()) + " does not match statistic '" +
                       stat.name() + "' (" + std::to_string(stat.theta_dim()) + ")");
  }
  return stat(x.values(), theta.coords());
}

// ---------------------------------------------------------------------------

GaussianConjugatePosterior::GaussianConjugatePosterior(std::vector<double> prior_mean,
                                                       double prior_variance, double noise_variance)
    : prior_mean_(std::move(prior_mean)), prior_variance_(prior_variance), noise_variance_(noise_variance) {
  if (prior_mean_.empty()) throw InvalidInput("prior mean must have at least one coordinate");
  require_finite(prior_mean_, "prior mean");
  if (!(prior_variance_ > 0.0) || !std::isfinite(prior_variance_))
    throw InvalidInput("prior variance must be positive and finite");
  if (!(noise_variance_ > 0.0) || !std::isfinite(noise_variance_))
    throw InvalidInput("noise variance must be positive and finite");
}

double GaussianConjugatePosterior::posterior_variance() const noexcept {
  return prior_variance_ * noise_variance_ / (prior_variance_ + noise_variance_);
}

std::vector<double> GaussianConjugatePosterior::posterior_mean(std::span<const double> x) const {
  std::vector<double> mean(prior_mean_.size());
  const double total = prior_variance_ + noise_variance_;
  for (std::size_t j = 0; j < mean.size(); ++j)
    mean[j] = (x[j] * prior_variance_ + prior_mean_[j] * noise_variance_) / total;
  return mean;
}

double GaussianConjugatePosterior::density(std::span<const double> x,
                                           std::span<const double> theta) const {
  const double total = prior_variance_ + noise_variance_;
  double sq = 0.0;
  for (std::size_t j = 0; j < prior_mean_.size(); ++j) {
    const double mean = (x[j] * prior_variance_ + prior_mean_[j] * noise_variance_) / total;
    const double diff = theta[j] - mean;
    sq += diff * diff;
  }
  return std::exp(log_isotropic_normal(sq, posterior_variance(), prior_mean_.size()));
}

TestStatistic GaussianConjugatePosterior::as_statistic() const {
  auto self = std::make_shared<const GaussianConjugatePosterior>(*this);
  return TestStatistic("gaussian-conjugate-posterior", dim(), dim(),
                       [self](std::span<const double> x, std::span<const double> theta) {
                         return self->density(x, theta);
                       });
}

GaussianConjugatePosterior conjugate_posterior_1d(double prior_mean, double prior_variance,
                                                  double noise_variance) {
  return GaussianConjugatePosterior({prior_mean}, prior_variance, noise_variance);
}

// ---------------------------------------------------------------------------

GaussianMixturePosterior2D::GaussianMixturePosterior2D(double prior_variance,
                                                       std::pair<double, double> component_variances,
                                                       double mixture_weight, std::size_t dim)
    : prior_variance_(prior_variance), variances_(component_variances), weight_(mixture_weight), dim_(dim) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(prior_variance_)) throw InvalidInput("prior variance must be positive and finite");
  if (!positive(variances_.first) || !positive(variances_.second))
    throw InvalidInput("component variances must be positive and finite");
  if (!(weight_ > 0.0 && weight_ < 1.0)) throw InvalidInput("mixture weight must lie in (0, 1)");
  if (dim_ == 0) throw InvalidInput("dimension must be positive");
}

double GaussianMixturePosterior2D::shrinkage(std::size_t component) const {
  const double var = component == 0 ? variances_.first : variances_.second;
  return prior_variance_ / (prior_variance_ + var);
}

double GaussianMixturePosterior2D::component_variance(std::size_t component) const {
  const double var = component == 0 ? variances_.first : variances_.second;
  return prior_variance_ * var / (prior_variance_ + var);
}

std::pair<double, double> GaussianMixturePosterior2D::component_weights(std::span<const double> x) const {
  double sq = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) sq += x[j] * x[j];
  const double a = std::log(weight_) + log_isotropic_normal(sq, prior_variance_ + variances_.first, dim_);
  const double b = std::log1p(-weight_) + log_isotropic_normal(sq, prior_variance_ + variances_.second, dim_);
  const double top = std::max(a, b);
  const double ea = std::exp(a - top);
  const double eb = std::exp(b - top);
  return {ea / (ea + eb), eb / (ea + eb)};
}

double GaussianMixturePosterior2D::density(std::span<const double> x,
                                           std::span<const double> theta) const {
  const auto [w0, w1] = component_weights(x);
  double result = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double s = shrinkage(k);
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double diff = theta[j] - s * x[j];
      sq += diff * diff;
    }
    result += (k == 0 ? w0 : w1) * std::exp(log_isotropic_normal(sq, component_variance(k), dim_));
  }
  return result;
}

TestStatistic GaussianMixturePosterior2D::as_statistic() const {
  auto self = std::make_shared<const GaussianMixturePosterior2D>(*this);
  return TestStatistic("gaussian-mixture-posterior", dim_, dim_,
                       [self](std::span<const double> x, std::span<const double> theta) {
                         return self->density(x, theta);
                       });
}

GaussianMixturePosterior2D mixture_posterior_2d(double prior_variance,
                                                std::pair<double, double> component_variances,
                                                double mixture_weight) {
  return GaussianMixturePosterior2D(prior_variance, component_variances, mixture_weight, 2);
}

// ---------------------------------------------------------------------------

StatisticTable::StatisticTable(std::size_t theta_dim) : theta_dim_(theta_dim) {
  if (theta_dim_ == 0) throw InvalidInput("statistic table needs a positive parameter dimension");
}

StatisticTable::Key StatisticTable::make_key(std::int64_t x_id, std::span<const double> theta) const {
  std::vector<std::int64_t> q(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) q[j] = std::llround(theta[j] * 1e9);
  return {x_id, std::move(q)};
}

void StatisticTable::add(std::span<const double> theta, std::int64_t x_id, double lambda) {
  if (theta.size() != theta_dim_) throw InvalidInput("statistic table row has the wrong parameter dimension");
  require_finite(theta, "statistic table theta");
  if (!std::isfinite(lambda)) throw InvalidInput("statistic table value is not finite");
  values_[make_key(x_id, theta)] = lambda;
}

std::vector<std::int64_t> StatisticTable::observation_ids() const {
  std::vector<std::int64_t> ids;
  for (const auto& [key, value] : values_) {
    if (ids.empty() || ids.back() != key.first) ids.push_back(key.first);
  }
  return ids;
}

const double* StatisticTable::find(std::int64_t x_id, std::span<const double> theta) const {
  const auto it = values_.find(make_key(x_id, theta));
  return it == values_.end() ? nullptr : &it->second;
}

TestStatistic StatisticTable::as_statistic(std::string name) const {
  auto self = std::make_shared<const StatisticTable>(*this);
  return TestStatistic(std::move(name), theta_dim_, 1,
                       [self](std::span<const double> x, std::span<const double> theta) {
                         const auto id = static_cast<std::int64_t>(std::llround(x[0]));
                         const double* v = self->find(id, theta);
                         if (v == nullptr) {
                           throw EvaluationError("no precomputed statistic for x_id=" + std::to_string(id) +
                                                 " at theta=" + describe(theta));
                         }
                         return *v;
                       });
}

}  // namespace freb
