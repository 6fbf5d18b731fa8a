#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freb/neighbors.hpp"
#include "freb/statistics.hpp"

namespace freb {

enum class SplitRole { Train, Calibration, Diagnostic, Target };

std::string_view to_string(SplitRole role) noexcept;
SplitRole parse_split_role(std::string_view name);

// Labeled (θ, x) rows drawn for one split. Rows are stored flat.
class SampleSet {
 public:
  SampleSet(SplitRole role, std::size_t theta_dim, std::size_t obs_dim);

  void add(std::span<const double> theta, std::span<const double> x);
  void reserve(std::size_t rows);

  SplitRole role() const noexcept { return role_; }
  std::size_t theta_dim() const noexcept { return theta_dim_; }
  std::size_t obs_dim() const noexcept { return obs_dim_; }
  std::size_t size() const noexcept { return thetas_.size() / theta_dim_; }
  bool empty() const noexcept { return thetas_.empty(); }

  std::span<const double> theta(std::size_t i) const {
    return {thetas_.data() + i * theta_dim_, theta_dim_};
  }
  std::span<const double> x(std::size_t i) const { return {xs_.data() + i * obs_dim_, obs_dim_}; }
  std::span<const double> thetas() const noexcept { return thetas_; }
  std::span<const double> observations() const noexcept { return xs_; }

  // Free-form description of r(θ), e.g. "uniform[-10,10]".
  const std::string& reference() const noexcept { return reference_; }
  void set_reference(std::string description) { reference_ = std::move(description); }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  SplitRole role_;
  std::size_t theta_dim_;
  std::size_t obs_dim_;
  std::vector<double> thetas_;
  std::vector<double> xs_;
  std::string reference_;
};

// (θᵢ, λᵢ) pairs with λᵢ = λ(xᵢ; θᵢ) for every calibration row.
struct CalibrationTable {
  std::size_t theta_dim = 0;
  std::vector<double> thetas;
  std::vector<double> lambdas;

  std::size_t size() const noexcept { return lambdas.size(); }
  std::span<const double> theta(std::size_t i) const {
    return {thetas.data() + i * theta_dim, theta_dim};
  }
  void validate() const;
};

CalibrationTable collect_statistics(const SampleSet& cal, const TestStatistic& stat);

// One augmented calibration record: the originating row, a resampled cutoff
// t, and Y = 1{λ(x_source; θ_source) ≤ t}.
struct AugmentedRow {
  std::size_t source;
  double cutoff;
  bool indicator;
};

// Calibration table plus its B′·K augmented rows. The cutoff pool G₀ is the
// table's λ column.
struct AugmentedSet {
  CalibrationTable table;
  std::vector<AugmentedRow> rows;
  std::size_t oversampling = 0;
  std::uint64_t seed = 0;

  std::span<const double> theta(const AugmentedRow& row) const { return table.theta(row.source); }
};

// For each row draws K cutoffs with replacement from G₀ (stream
// streams::kAugmentation of the seed).
AugmentedSet build_augmented_set(const SampleSet& cal, const TestStatistic& stat, std::size_t oversampling,
                                 std::uint64_t seed);
AugmentedSet augment_table(CalibrationTable table, std::size_t oversampling, std::uint64_t seed);

// How the local conditional CDF is formed from the k nearest calibration rows.
//  Constant:  pooled empirical CDF of the neighbors' statistics.
//  Quadratic: the same neighbors reweighted by the equivalent kernel of a
//             local quadratic fit in θ (removes curvature bias), followed by a
//             monotone rearrangement.
enum class LocalFit { Constant, Quadratic };

std::string_view to_string(LocalFit fit) noexcept;
LocalFit parse_local_fit(std::string_view name);

struct EstimatorConfig {
  std::size_t neighbors = 0;  // 0 selects the default rule
  LocalFit fit = LocalFit::Constant;
};

// max(250, ⌈n^{2/3}⌉), capped at n.
std::size_t default_calibration_neighbors(std::size_t n);

// Estimated conditional distribution of λ at one θ: a nondecreasing step
// function over the neighbors' statistic values.
class LocalCdf {
 public:
  LocalCdf() = default;
  LocalCdf(std::vector<double> values, std::vector<double> cumulative, LocalFit fit, bool extrapolated);

  // F̂(t) = estimated P(λ ≤ t); in [0, 1] and nondecreasing in t.
  double cdf(double t) const;
  // Estimated α-quantile of λ.
  double quantile(double alpha) const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> cumulative() const noexcept { return cumulative_; }
  bool extrapolated() const noexcept { return extrapolated_; }

 private:
  std::vector<double> values_;
  std::vector<double> cumulative_;
  LocalFit fit_ = LocalFit::Constant;
  bool extrapolated_ = false;
};

// Shared k-NN machinery behind both fitted models.
class LocalEstimator {
 public:
  LocalEstimator(CalibrationTable table, EstimatorConfig config);

  const CalibrationTable& table() const noexcept { return table_; }
  const Standardization& standardization() const noexcept { return standardization_; }
  std::size_t neighbors() const noexcept { return neighbors_; }
  LocalFit fit() const noexcept { return fit_; }
  std::size_t theta_dim() const noexcept { return table_.theta_dim; }

  bool is_extrapolated(std::span<const double> theta) const;
  std::vector<std::size_t> neighbor_rows(std::span<const double> theta) const;
  LocalCdf local_cdf(std::span<const double> theta) const;
  // Equivalent to local_cdf(theta).cdf(t), without materializing the CDF for
  // the constant fit.
  double cdf(std::span<const double> theta, double t) const;

 private:
  void check_dim(std::span<const double> theta) const;

  CalibrationTable table_;
  Standardization standardization_;
  KdTree tree_;
  std::size_t neighbors_;
  LocalFit fit_;
  std::vector<double> lower_, upper_;
};

struct RejectionFitInfo {
  std::size_t calibration_size = 0;
  std::size_t oversampling = 0;
  std::size_t augmented_rows = 0;
  std::uint64_t seed = 0;
};

struct PValue {
  double value;
  bool extrapolated;
};

// Fitted F̂_λ(t; θ) ≈ P(λ(X; θ) ≤ t | θ). Immutable; safe for concurrent queries.
class RejectionProbabilityModel {
 public:
  RejectionProbabilityModel(CalibrationTable table, EstimatorConfig config, RejectionFitInfo info,
                            std::vector<std::string> warnings = {});

  const LocalEstimator& estimator() const noexcept { return *estimator_; }
  const RejectionFitInfo& info() const noexcept { return info_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t theta_dim() const noexcept { return estimator_->theta_dim(); }

  double cdf(std::span<const double> theta, double t) const { return estimator_->cdf(theta, t); }
  LocalCdf conditional_cdf(std::span<const double> theta) const { return estimator_->local_cdf(theta); }
  // ĥ given a precomputed λ(x; θ0).
  PValue pvalue_from_statistic(std::span<const double> theta0, double lambda) const;

 private:
  std::shared_ptr<const LocalEstimator> estimator_;
  RejectionFitInfo info_;
  std::vector<std::string> warnings_;
};

RejectionProbabilityModel fit_rejection_model(const AugmentedSet& augmented, const EstimatorConfig& config = {});

// ĥ(x; θ0) = F̂(λ(x; θ0); θ0).
PValue pvalue(const RejectionProbabilityModel& model, const TestStatistic& stat, const Observation& x,
              const ParameterPoint& theta0);

struct CriticalValue {
  double value;
  bool extrapolated;
};

// Fitted α-quantile t̂_θ of λ(X; θ) | θ. Immutable.
class CriticalValueModel {
 public:
  CriticalValueModel(CalibrationTable table, double alpha, EstimatorConfig config);

  const LocalEstimator& estimator() const noexcept { return *estimator_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t theta_dim() const noexcept { return estimator_->theta_dim(); }

  CriticalValue at(std::span<const double> theta) const;
  // Quantiles at several levels from the same local fit; nondecreasing in α.
  std::vector<double> at_levels(std::span<const double> theta, std::span<const double> alphas) const;

 private:
  std::shared_ptr<const LocalEstimator> estimator_;
  double alpha_;
};

CriticalValueModel fit_quantile_model(const CalibrationTable& pairs, double alpha,
                                      const EstimatorConfig& config = {});

CriticalValue critical_value(const CriticalValueModel& model, const ParameterPoint& theta);

}  // namespace freb
