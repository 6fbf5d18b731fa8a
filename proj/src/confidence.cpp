#include "freb/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "freb/errors.hpp"

namespace freb {

ParameterGrid::ParameterGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw InvalidInput("grid needs at least one axis");
  size_ = 1;
  cell_measure_ = 1.0;
  for (const GridAxis& a : axes_) {
    if (a.count < 2) throw InvalidInput("grid axes need at least two points");
    if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !(a.upper > a.lower))
      throw InvalidInput("grid axis bounds must be finite and strictly increasing");
    size_ *= a.count;
    cell_measure_ *= a.spacing();
  }
  if (!(cell_measure_ > 0.0)) throw InvalidInput("grid cell measure must be positive");
}

ParameterGrid ParameterGrid::uniform(double lower, double upper, std::size_t count, std::size_t dim) {
  return ParameterGrid(std::vector<GridAxis>(dim, GridAxis{lower, upper, count}));
}

void ParameterGrid::point(std::size_t index, std::span<double> out) const {
  for (std::size_t j = axes_.size(); j-- > 0;) {
    out[j] = axes_[j].at(index % axes_[j].count);
    index /= axes_[j].count;
  }
}

ParameterPoint ParameterGrid::point(std::size_t index) const {
  std::vector<double> coords(dim());
  point(index, coords);
  return ParameterPoint(std::move(coords));
}

bool operator==(const ParameterGrid& a, const ParameterGrid& b) {
  if (a.axes_.size() != b.axes_.size()) return false;
  for (std::size_t j = 0; j < a.axes_.size(); ++j) {
    const GridAxis &x = a.axes_[j], &y = b.axes_[j];
    if (x.lower != y.lower || x.upper != y.upper || x.count != y.count) return false;
  }
  return true;
}

std::string_view to_string(SetRoute route) noexcept {
  switch (route) {
    case SetRoute::Hpd: return "hpd";
    case SetRoute::FrebPValue: return "freb-pvalue";
    case SetRoute::FrebCriticalValue: return "freb-critval";
  }
  return "unknown";
}

SetRoute parse_set_route(std::string_view name) {
  if (name == "hpd") return SetRoute::Hpd;
  if (name == "freb-pvalue" || name == "pvalue") return SetRoute::FrebPValue;
  if (name == "freb-critval" || name == "critval") return SetRoute::FrebCriticalValue;
  throw InvalidInput("unknown set route '" + std::string(name) + "'");
}

ParameterSet::ParameterSet(ParameterGrid grid, std::vector<std::uint8_t> mask, double alpha, SetRoute route)
    : grid_(std::move(grid)), mask_(std::move(mask)), alpha_(alpha), route_(route) {
  if (mask_.size() != grid_.size()) throw InvalidInput("set mask length does not match the grid size");
}

std::size_t ParameterSet::member_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; }));
}

std::vector<std::pair<std::size_t, std::size_t>> ParameterSet::runs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (!mask_[i]) continue;
    if (!out.empty() && out.back().second + 1 == i)
      out.back().second = i;
    else
      out.emplace_back(i, i);
  }
  return out;
}

double set_size(const ParameterSet& set) {
  return static_cast<double>(set.member_count()) * set.grid().cell_measure();
}

namespace {

void check_level(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) throw InvalidInput(std::string(what) + " must lie in (0, 1)");
}

void check_dims(const TestStatistic& stat, const Observation& x, const ParameterGrid& grid) {
  if (stat.theta_dim() != grid.dim())
    throw InvalidInput("grid dimension does not match statistic '" + stat.name() + "'");
  if (stat.obs_dim() != x.dim())
    throw InvalidInput("observation dimension does not match statistic '" + stat.name() + "'");
}

std::vector<double> evaluate_on_grid(const TestStatistic& stat, const Observation& x, const ParameterGrid& grid) {
  check_dims(stat, x, grid);
  std::vector<double> out(grid.size());
  std::vector<double> theta(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, theta);
    out[i] = stat(x.values(), theta);
  }
  return out;
}

HpdThreshold threshold_from_densities(std::span<const double> density, double credibility) {
  double total = 0.0;
  for (double p : density) {
    if (p < 0.0) throw InvalidInput("posterior density is negative on the grid");
    total += p;
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw InvalidInput("posterior has no mass on the grid (grid misses the posterior)");

  // Points below `floor` jointly hold less than (1 - credibility) of the mass,
  // so the HPD region is reached before any of them; skip sorting them.
  const double floor = 0.5 * (1.0 - credibility) * total / static_cast<double>(density.size());
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < density.size(); ++i)
    if (density[i] >= floor) candidates.push_back(i);
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return density[a] > density[b] || (density[a] == density[b] && a < b);
  });

  const double target = credibility * total;
  double mass = 0.0;
  double c = density[candidates.back()];
  for (std::size_t idx : candidates) {
    mass += density[idx];
    if (mass >= target) {
      c = density[idx];
      break;
    }
  }
  double admitted = 0.0;
  for (double p : density)
    if (p >= c) admitted += p;
  return {c, admitted / total};
}

}  // namespace

HpdThreshold hpd_threshold(const TestStatistic& posterior, const Observation& x, const ParameterGrid& grid,
                           double credibility) {
  check_level(credibility, "credibility");
  const auto density = evaluate_on_grid(posterior, x, grid);
  return threshold_from_densities(density, credibility);
}

ParameterSet hpd_set(const TestStatistic& posterior, const Observation& x, const ParameterGrid& grid,
                     double credibility) {
  check_level(credibility, "credibility");
  const auto density = evaluate_on_grid(posterior, x, grid);
  const HpdThreshold level = threshold_from_densities(density, credibility);
  std::vector<std::uint8_t> mask(grid.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = density[i] >= level.density ? 1 : 0;
  return ParameterSet(grid, std::move(mask), 1.0 - credibility, SetRoute::Hpd);
}

std::vector<LocalCdf> precompute_cdfs(const RejectionProbabilityModel& model, const ParameterGrid& grid) {
  if (model.theta_dim() != grid.dim()) throw InvalidInput("grid dimension does not match the model");
  std::vector<LocalCdf> out;
  out.reserve(grid.size());
  std::vector<double> theta(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, theta);
    out.push_back(model.conditional_cdf(theta));
  }
  return out;
}

std::vector<double> precompute_critical_values(const CriticalValueModel& model, const ParameterGrid& grid) {
  if (model.theta_dim() != grid.dim()) throw InvalidInput("grid dimension does not match the model");
  std::vector<double> out(grid.size());
  std::vector<double> theta(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, theta);
    out[i] = model.at(theta).value;
  }
  return out;
}

ParameterSet freb_set_pvalue(std::span<const LocalCdf> cdfs, const TestStatistic& stat, const Observation& x,
                             const ParameterGrid& grid, double alpha) {
  check_level(alpha, "alpha");
  if (cdfs.size() != grid.size()) throw InvalidInput("precomputed CDFs do not match the grid");
  const auto lambda = evaluate_on_grid(stat, x, grid);
  std::vector<std::uint8_t> mask(grid.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = cdfs[i].cdf(lambda[i]) > alpha ? 1 : 0;
  return ParameterSet(grid, std::move(mask), alpha, SetRoute::FrebPValue);
}

ParameterSet freb_set_pvalue(const RejectionProbabilityModel& model, const TestStatistic& stat, const Observation& x,
                             const ParameterGrid& grid, double alpha) {
  check_level(alpha, "alpha");
  if (model.theta_dim() != grid.dim()) throw InvalidInput("grid dimension does not match the model");
  const auto lambda = evaluate_on_grid(stat, x, grid);
  std::vector<std::uint8_t> mask(grid.size());
  std::vector<double> theta(grid.dim());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    grid.point(i, theta);
    mask[i] = model.cdf(theta, lambda[i]) > alpha ? 1 : 0;
  }
  return ParameterSet(grid, std::move(mask), alpha, SetRoute::FrebPValue);
}

ParameterSet freb_set_critval(std::span<const double> cutoffs, double alpha, const TestStatistic& stat,
                              const Observation& x, const ParameterGrid& grid) {
  check_level(alpha, "alpha");
  if (cutoffs.size() != grid.size()) throw InvalidInput("precomputed critical values do not match the grid");
  const auto lambda = evaluate_on_grid(stat, x, grid);
  std::vector<std::uint8_t> mask(grid.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = lambda[i] > cutoffs[i] ? 1 : 0;
  return ParameterSet(grid, std::move(mask), alpha, SetRoute::FrebCriticalValue);
}

ParameterSet freb_set_critval(const CriticalValueModel& model, const TestStatistic& stat, const Observation& x,
                              const ParameterGrid& grid, double alpha) {
  check_level(alpha, "alpha");
  if (std::abs(alpha - model.alpha()) > 1e-12)
    throw InvalidInput("requested alpha does not match the critical-value model's level");
  return freb_set_critval(precompute_critical_values(model, grid), model.alpha(), stat, x, grid);
}

double symmetric_difference_fraction(const ParameterSet& a, const ParameterSet& b) {
  if (!(a.grid() == b.grid())) throw InvalidInput("sets are defined over different grids");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.mask().size(); ++i) diff += (a.mask()[i] != 0) != (b.mask()[i] != 0) ? 1 : 0;
  return static_cast<double>(diff) / static_cast<double>(a.mask().size());
}

}  // namespace freb
