#include "freb/diagnostics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <memory>
#include <numeric>

#include "freb/errors.hpp"

namespace freb {

MembershipRule pvalue_rule(const RejectionProbabilityModel& model, const TestStatistic& stat, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  if (stat.theta_dim() != model.theta_dim()) throw InvalidInput("statistic does not match the model dimension");
  return [model, stat, alpha](std::span<const double> x, std::span<const double> theta) {
    return model.cdf(theta, stat(x, theta)) > alpha;
  };
}

MembershipRule critval_rule(const CriticalValueModel& model, const TestStatistic& stat) {
  if (stat.theta_dim() != model.theta_dim()) throw InvalidInput("statistic does not match the model dimension");
  return [model, stat](std::span<const double> x, std::span<const double> theta) {
    return stat(x, theta) > model.at(theta).value;
  };
}

MembershipRule hpd_rule(const TestStatistic& posterior, const ParameterGrid& grid, double credibility) {
  if (!(credibility > 0.0 && credibility < 1.0)) throw InvalidInput("credibility must lie in (0, 1)");
  if (posterior.theta_dim() != grid.dim()) throw InvalidInput("grid dimension does not match the posterior");
  return [posterior, grid, credibility](std::span<const double> x, std::span<const double> theta) {
    const Observation obs(std::vector<double>(x.begin(), x.end()));
    const HpdThreshold level = hpd_threshold(posterior, obs, grid, credibility);
    return posterior(x, theta) >= level.density;
  };
}

std::vector<DiagnosticRecord> coverage_indicators(const SampleSet& diag, const MembershipRule& rule) {
  if (diag.role() != SplitRole::Diagnostic)
    throw InvalidInput("coverage diagnostics require a diagnostic split, got '" +
                       std::string(to_string(diag.role())) + "'");
  std::vector<DiagnosticRecord> out;
  out.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const auto theta = diag.theta(i);
    out.push_back({ParameterPoint(std::vector<double>(theta.begin(), theta.end())), rule(diag.x(i), theta)});
  }
  return out;
}

std::size_t default_coverage_neighbors(std::size_t n) {
  return std::min<std::size_t>(std::max<std::size_t>(200, ceil_pow_two_thirds(n)), n);
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw InvalidInput("Wilson interval needs at least one trial");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidInput("confidence must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  return {(p + z2 / (2.0 * n)) / denom, z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))};
}

CoverageModel::CoverageModel(std::vector<DiagnosticRecord> records, CoverageConfig config) {
  if (records.size() < 100)
    throw InvalidInput("coverage model needs at least 100 diagnostic records, got " + std::to_string(records.size()));
  if (!(config.confidence > 0.0 && config.confidence < 1.0)) throw InvalidInput("confidence must lie in (0, 1)");
  const std::size_t d = records.front().theta.dim();
  for (const auto& r : records)
    if (r.theta.dim() != d) throw InvalidInput("diagnostic records disagree in parameter dimension");

  // Canonical order makes the fit independent of record order, ties included.
  std::sort(records.begin(), records.end(), [](const DiagnosticRecord& a, const DiagnosticRecord& b) {
    const auto ca = a.theta.coords(), cb = b.theta.coords();
    if (std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end())) return true;
    if (std::lexicographical_compare(cb.begin(), cb.end(), ca.begin(), ca.end())) return false;
    return a.covered < b.covered;
  });

  std::vector<double> points;
  points.reserve(records.size() * d);
  covered_.reserve(records.size());
  for (const auto& r : records) {
    points.insert(points.end(), r.theta.coords().begin(), r.theta.coords().end());
    covered_.push_back(r.covered ? 1 : 0);
  }
  standardization_ = Standardization::fit(points, d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::span<double> row(points.data() + i * d, d);
    std::vector<double> raw(row.begin(), row.end());
    standardization_.apply(raw, row);
  }
  tree_ = KdTree(std::move(points), d);

  if (config.neighbors == 0) {
    neighbors_ = default_coverage_neighbors(records.size());
  } else {
    if (config.neighbors > records.size()) throw InvalidInput("coverage neighbor count exceeds the record count");
    neighbors_ = config.neighbors;
  }
  confidence_ = config.confidence;
}

CoverageEstimate CoverageModel::estimate(std::span<const double> theta) const {
  if (theta.size() != theta_dim()) throw InvalidInput("probe dimension does not match the coverage model");
  std::vector<double> z(theta.size());
  standardization_.apply(theta, z);
  const auto rows = tree_.nearest(z, neighbors_);
  std::size_t hits = 0;
  for (std::size_t r : rows) hits += covered_[r];
  const WilsonInterval w = wilson_interval(hits, rows.size(), confidence_);
  return {static_cast<double>(hits) / static_cast<double>(rows.size()), w.half_width,
          std::max(0.0, w.center - w.half_width), std::min(1.0, w.center + w.half_width)};
}

CoverageModel fit_coverage_model(std::vector<DiagnosticRecord> records, const CoverageConfig& config) {
  return CoverageModel(std::move(records), config);
}

std::string_view to_string(CoverageFlag flag) noexcept {
  switch (flag) {
    case CoverageFlag::Ok: return "ok";
    case CoverageFlag::Under: return "under";
    case CoverageFlag::Over: return "over";
  }
  return "ok";
}

std::size_t CoverageReport::flagged_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(flags.begin(), flags.end(), [](CoverageFlag f) { return f != CoverageFlag::Ok; }));
}

CoverageReport coverage_map(const CoverageModel& model, const ParameterGrid& grid, double nominal) {
  if (!(nominal > 0.0 && nominal < 1.0)) throw InvalidInput("nominal coverage must lie in (0, 1)");
  if (grid.dim() != model.theta_dim()) throw InvalidInput("probe grid dimension does not match the coverage model");
  CoverageReport report;
  report.grid = grid;
  report.nominal = nominal;
  report.sample_count = model.sample_count();
  report.estimates.resize(grid.size());
  report.half_widths.resize(grid.size());
  report.flags.resize(grid.size());
  std::vector<double> theta(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, theta);
    const CoverageEstimate e = model.estimate(theta);
    report.estimates[i] = e.estimate;
    report.half_widths[i] = e.half_width;
    report.flags[i] = e.upper < nominal ? CoverageFlag::Under : e.lower > nominal ? CoverageFlag::Over : CoverageFlag::Ok;
  }
  return report;
}

}  // namespace freb
