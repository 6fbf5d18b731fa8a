#include "freb/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "freb/errors.hpp"
#include "freb/random.hpp"

namespace freb {

std::string_view to_string(SplitRole role) noexcept {
  switch (role) {
    case SplitRole::Train: return "train";
    case SplitRole::Calibration: return "calibration";
    case SplitRole::Diagnostic: return "diagnostic";
    case SplitRole::Target: return "target";
  }
  return "unknown";
}

SplitRole parse_split_role(std::string_view name) {
  if (name == "train") return SplitRole::Train;
  if (name == "calibration") return SplitRole::Calibration;
  if (name == "diagnostic") return SplitRole::Diagnostic;
  if (name == "target") return SplitRole::Target;
  throw InvalidInput("unknown split role '" + std::string(name) + "'");
}

std::string_view to_string(LocalFit fit) noexcept {
  return fit == LocalFit::Constant ? "constant" : "quadratic";
}

LocalFit parse_local_fit(std::string_view name) {
  if (name == "constant") return LocalFit::Constant;
  if (name == "quadratic") return LocalFit::Quadratic;
  throw InvalidInput("unknown local fit '" + std::string(name) + "' (expected constant or quadratic)");
}

// ---------------------------------------------------------------------------

SampleSet::SampleSet(SplitRole role, std::size_t theta_dim, std::size_t obs_dim)
    : role_(role), theta_dim_(theta_dim), obs_dim_(obs_dim) {
  if (theta_dim_ == 0 || obs_dim_ == 0) throw InvalidInput("sample dimensions must be positive");
}

void SampleSet::add(std::span<const double> theta, std::span<const double> x) {
  if (theta.size() != theta_dim_ || x.size() != obs_dim_)
    throw InvalidInput("sample row dimensions do not match the sample set");
  for (double v : theta)
    if (!std::isfinite(v)) throw InvalidInput("sample theta is not finite");
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidInput("sample observation is not finite");
  thetas_.insert(thetas_.end(), theta.begin(), theta.end());
  xs_.insert(xs_.end(), x.begin(), x.end());
}

void SampleSet::reserve(std::size_t rows) {
  thetas_.reserve(rows * theta_dim_);
  xs_.reserve(rows * obs_dim_);
}

void CalibrationTable::validate() const {
  if (theta_dim == 0) throw InvalidInput("calibration table has no parameter dimension");
  if (lambdas.empty()) throw InvalidInput("calibration table is empty");
  if (thetas.size() != lambdas.size() * theta_dim)
    throw InvalidInput("calibration table theta and lambda columns disagree in length");
  for (double v : thetas)
    if (!std::isfinite(v)) throw InvalidInput("calibration theta is not finite");
  for (double v : lambdas)
    if (!std::isfinite(v)) throw EvaluationError("calibration statistic is not finite");
}

CalibrationTable collect_statistics(const SampleSet& cal, const TestStatistic& stat) {
  if (cal.role() != SplitRole::Calibration)
    throw InvalidInput("statistics must be collected from a calibration split, got '" +
                       std::string(to_string(cal.role())) + "'");
  if (cal.empty()) throw InvalidInput("calibration set is empty");
  if (cal.theta_dim() != stat.theta_dim() || cal.obs_dim() != stat.obs_dim())
    throw InvalidInput("calibration set dimensions do not match statistic '" + stat.name() + "'");
  CalibrationTable table;
  table.theta_dim = cal.theta_dim();
  table.thetas.assign(cal.thetas().begin(), cal.thetas().end());
  table.lambdas.resize(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) table.lambdas[i] = stat(cal.x(i), cal.theta(i));
  return table;
}

AugmentedSet augment_table(CalibrationTable table, std::size_t oversampling, std::uint64_t seed) {
  if (oversampling == 0) throw InvalidInput("oversampling factor K must be at least 1");
  table.validate();
  AugmentedSet out;
  out.oversampling = oversampling;
  out.seed = seed;
  const std::size_t n = table.size();
  out.rows.reserve(n * oversampling);
  CounterRng rng(seed, streams::kAugmentation);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < oversampling; ++j) {
      const double t = table.lambdas[rng.below(n)];
      out.rows.push_back({i, t, table.lambdas[i] <= t});
    }
  }
  out.table = std::move(table);
  return out;
}

AugmentedSet build_augmented_set(const SampleSet& cal, const TestStatistic& stat, std::size_t oversampling,
                                 std::uint64_t seed) {
  if (oversampling == 0) throw InvalidInput("oversampling factor K must be at least 1");
  return augment_table(collect_statistics(cal, stat), oversampling, seed);
}

// ---------------------------------------------------------------------------

std::size_t default_calibration_neighbors(std::size_t n) {
  return std::min<std::size_t>(std::max<std::size_t>(250, ceil_pow_two_thirds(n)), n);
}

LocalCdf::LocalCdf(std::vector<double> values, std::vector<double> cumulative, LocalFit fit, bool extrapolated)
    : values_(std::move(values)), cumulative_(std::move(cumulative)), fit_(fit), extrapolated_(extrapolated) {
  if (values_.empty() || values_.size() != cumulative_.size())
    throw InvalidInput("local CDF needs matching, non-empty value and probability columns");
}

double LocalCdf::cdf(double t) const {
  const auto idx = static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), t) - values_.begin());
  return idx == 0 ? 0.0 : cumulative_[idx - 1];
}

double LocalCdf::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  const std::size_t k = values_.size();
  if (fit_ == LocalFit::Constant) {
    // Linear interpolation at rank α(k+1), clamped to [1, k].
    const double rank = std::clamp(alpha * static_cast<double>(k + 1), 1.0, static_cast<double>(k));
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo >= k) return values_[k - 1];
    return values_[lo - 1] + frac * (values_[lo] - values_[lo - 1]);
  }
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), alpha);
  if (it == cumulative_.end()) return values_.back();
  return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

namespace {

std::size_t quadratic_terms(std::size_t dim) { return 1 + dim + dim * (dim + 1) / 2; }

// Equivalent-kernel weights of a local quadratic least-squares fit evaluated at
// the query (offset 0). Returns false if the design is singular.
bool quadratic_weights(std::span<const double> offsets, std::size_t dim, std::size_t k, std::vector<double>& weights) {
  const std::size_t p = quadratic_terms(dim);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < k; ++i) {
    const double* u = offsets.data() + i * dim;
    Eigen::Index c = 0;
    const auto r = static_cast<Eigen::Index>(i);
    design(r, c++) = 1.0;
    for (std::size_t a = 0; a < dim; ++a) design(r, c++) = u[a];
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = a; b < dim; ++b) design(r, c++) = u[a] * u[b];
  }
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Eigen::VectorXd diag = ldlt.vectorD();
  if (diag.minCoeff() <= 1e-12 * diag.maxCoeff()) return false;
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  unit(0) = 1.0;
  const Eigen::VectorXd coef = ldlt.solve(unit);
  const Eigen::VectorXd w = design * coef;
  weights.assign(w.data(), w.data() + w.size());
  return std::all_of(weights.begin(), weights.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

LocalEstimator::LocalEstimator(CalibrationTable table, EstimatorConfig config)
    : table_(std::move(table)), fit_(config.fit) {
  table_.validate();
  const std::size_t n = table_.size();
  const std::size_t d = table_.theta_dim;
  if (n < 2) throw InvalidInput("at least two calibration rows are required");
  if (config.neighbors == 0) {
    neighbors_ = default_calibration_neighbors(n);
  } else {
    if (config.neighbors > n)
      throw InvalidInput("neighbor count k=" + std::to_string(config.neighbors) + " exceeds the " +
                         std::to_string(n) + " calibration rows");
    neighbors_ = config.neighbors;
  }
  if (fit_ == LocalFit::Quadratic && neighbors_ <= quadratic_terms(d))
    throw InvalidInput("local quadratic fit needs more than " + std::to_string(quadratic_terms(d)) + " neighbors");

  standardization_ = Standardization::fit(table_.thetas, d);
  std::vector<double> z(table_.thetas.size());
  for (std::size_t i = 0; i < n; ++i)
    standardization_.apply(table_.theta(i), std::span<double>(z.data() + i * d, d));
  tree_ = KdTree(std::move(z), d);

  lower_.assign(table_.theta(0).begin(), table_.theta(0).end());
  upper_ = lower_;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      lower_[j] = std::min(lower_[j], table_.theta(i)[j]);
      upper_[j] = std::max(upper_[j], table_.theta(i)[j]);
    }
  }
}

void LocalEstimator::check_dim(std::span<const double> theta) const {
  if (theta.size() != table_.theta_dim)
    throw InvalidInput("query dimension " + std::to_string(theta.size()) + " does not match the model (" +
                       std::to_string(table_.theta_dim) + ")");
}

bool LocalEstimator::is_extrapolated(std::span<const double> theta) const {
  check_dim(theta);
  for (std::size_t j = 0; j < theta.size(); ++j)
    if (theta[j] < lower_[j] || theta[j] > upper_[j]) return true;
  return false;
}

std::vector<std::size_t> LocalEstimator::neighbor_rows(std::span<const double> theta) const {
  check_dim(theta);
  std::vector<double> z(theta.size());
  standardization_.apply(theta, z);
  return tree_.nearest(z, neighbors_);
}

LocalCdf LocalEstimator::local_cdf(std::span<const double> theta) const {
  const auto rows = neighbor_rows(theta);
  const std::size_t k = rows.size();
  const std::size_t d = table_.theta_dim;

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = table_.lambdas[rows[a]], lb = table_.lambdas[rows[b]];
    return la < lb || (la == lb && rows[a] < rows[b]);
  });

  std::vector<double> values(k), cumulative(k);
  for (std::size_t i = 0; i < k; ++i) values[i] = table_.lambdas[rows[order[i]]];

  std::vector<double> weights;
  bool weighted = false;
  if (fit_ == LocalFit::Quadratic) {
    std::vector<double> zq(d), offsets(k * d), zi(d);
    standardization_.apply(theta, zq);
    for (std::size_t i = 0; i < k; ++i) {
      standardization_.apply(table_.theta(rows[i]), zi);
      for (std::size_t j = 0; j < d; ++j) offsets[i * d + j] = zi[j] - zq[j];
    }
    weighted = quadratic_weights(offsets, d, k, weights);
  }

  if (weighted) {
    // Monotone rearrangement: running maximum of the signed cumulative weights.
    double running = 0.0, best = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      running += weights[order[i]];
      best = std::max(best, running);
      cumulative[i] = std::min(best, 1.0);
    }
    cumulative[k - 1] = 1.0;
  } else {
    for (std::size_t i = 0; i < k; ++i)
      cumulative[i] = static_cast<double>(i + 1) / static_cast<double>(k);
  }
  return LocalCdf(std::move(values), std::move(cumulative), weighted ? LocalFit::Quadratic : LocalFit::Constant,
                  is_extrapolated(theta));
}

double LocalEstimator::cdf(std::span<const double> theta, double t) const {
  if (fit_ == LocalFit::Quadratic) return local_cdf(theta).cdf(t);
  const auto rows = neighbor_rows(theta);
  std::size_t count = 0;
  for (std::size_t r : rows) count += table_.lambdas[r] <= t ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------

RejectionProbabilityModel::RejectionProbabilityModel(CalibrationTable table, EstimatorConfig config,
                                                     RejectionFitInfo info, std::vector<std::string> warnings)
    : estimator_(std::make_shared<const LocalEstimator>(std::move(table), config)),
      info_(info),
      warnings_(std::move(warnings)) {
  info_.calibration_size = estimator_->table().size();
}

PValue RejectionProbabilityModel::pvalue_from_statistic(std::span<const double> theta0, double lambda) const {
  if (!std::isfinite(lambda)) throw EvaluationError("statistic value is not finite");
  return {estimator_->cdf(theta0, lambda), estimator_->is_extrapolated(theta0)};
}

RejectionProbabilityModel fit_rejection_model(const AugmentedSet& augmented, const EstimatorConfig& config) {
  const auto& lambdas = augmented.table.lambdas;
  if (augmented.rows.size() != lambdas.size() * augmented.oversampling)
    throw InvalidInput("augmented set has " + std::to_string(augmented.rows.size()) + " rows, expected B'*K = " +
                       std::to_string(lambdas.size() * augmented.oversampling));
  std::vector<std::string> warnings;
  if (!lambdas.empty() && std::adjacent_find(lambdas.begin(), lambdas.end(), std::not_equal_to<>()) == lambdas.end())
    warnings.emplace_back("all calibration statistic values are equal; the rejection probability is a step function");
  RejectionFitInfo info;
  info.calibration_size = lambdas.size();
  info.oversampling = augmented.oversampling;
  info.augmented_rows = augmented.rows.size();
  info.seed = augmented.seed;
  return RejectionProbabilityModel(augmented.table, config, info, std::move(warnings));
}

PValue pvalue(const RejectionProbabilityModel& model, const TestStatistic& stat, const Observation& x,
              const ParameterPoint& theta0) {
  if (stat.theta_dim() != model.theta_dim())
    throw InvalidInput("statistic '" + stat.name() + "' does not match the model's parameter dimension");
  return model.pvalue_from_statistic(theta0.coords(), evaluate_statistic(stat, x, theta0));
}

// ---------------------------------------------------------------------------

CriticalValueModel::CriticalValueModel(CalibrationTable table, double alpha, EstimatorConfig config)
    : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  estimator_ = std::make_shared<const LocalEstimator>(std::move(table), config);
}

CriticalValue CriticalValueModel::at(std::span<const double> theta) const {
  const LocalCdf local = estimator_->local_cdf(theta);
  return {local.quantile(alpha_), local.extrapolated()};
}

std::vector<double> CriticalValueModel::at_levels(std::span<const double> theta,
                                                  std::span<const double> alphas) const {
  const LocalCdf local = estimator_->local_cdf(theta);
  std::vector<double> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(local.quantile(a));
  return out;
}

CriticalValueModel fit_quantile_model(const CalibrationTable& pairs, double alpha, const EstimatorConfig& config) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  return CriticalValueModel(pairs, alpha, config);
}

CriticalValue critical_value(const CriticalValueModel& model, const ParameterPoint& theta) {
  return model.at(theta.coords());
}

}  // namespace freb
