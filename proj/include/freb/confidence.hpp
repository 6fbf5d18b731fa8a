#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "freb/calibration.hpp"
#include "freb/statistics.hpp"

namespace freb {

struct GridAxis {
  double lower;
  double upper;
  std::size_t count;

  double spacing() const noexcept { return (upper - lower) / static_cast<double>(count - 1); }
  double at(std::size_t i) const noexcept {
    return i + 1 == count ? upper : lower + static_cast<double>(i) * spacing();
  }
};

// Regular evaluation grid over Θ. Points are ordered row-major with the first
// axis varying slowest.
class ParameterGrid {
 public:
  ParameterGrid() = default;
  explicit ParameterGrid(std::vector<GridAxis> axes);

  // Same bounds and count on every axis.
  static ParameterGrid uniform(double lower, double upper, std::size_t count, std::size_t dim);

  std::size_t dim() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<GridAxis>& axes() const noexcept { return axes_; }
  double cell_measure() const noexcept { return cell_measure_; }

  void point(std::size_t index, std::span<double> out) const;
  ParameterPoint point(std::size_t index) const;

  friend bool operator==(const ParameterGrid& a, const ParameterGrid& b);

 private:
  std::vector<GridAxis> axes_;
  std::size_t size_ = 0;
  double cell_measure_ = 0.0;
};

enum class SetRoute { Hpd, FrebPValue, FrebCriticalValue };

std::string_view to_string(SetRoute route) noexcept;
SetRoute parse_set_route(std::string_view name);

// Membership mask over a grid. For HPD sets `alpha` is 1 − credibility.
class ParameterSet {
 public:
  ParameterSet(ParameterGrid grid, std::vector<std::uint8_t> mask, double alpha, SetRoute route);

  const ParameterGrid& grid() const noexcept { return grid_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  double alpha() const noexcept { return alpha_; }
  SetRoute route() const noexcept { return route_; }

  bool contains(std::size_t index) const { return mask_.at(index) != 0; }
  std::size_t member_count() const noexcept;
  // Maximal runs of consecutive members in grid order, as [first, last]
  // index pairs. Descriptive only: FreB sets need not be connected.
  std::vector<std::pair<std::size_t, std::size_t>> runs() const;

 private:
  ParameterGrid grid_;
  std::vector<std::uint8_t> mask_;
  double alpha_;
  SetRoute route_;
};

// |B| = member count × cell measure.
double set_size(const ParameterSet& set);

struct HpdThreshold {
  double density;  // c: density of the last point admitted
  double mass;     // normalized grid mass of {θ : π(θ|x) ≥ c}
};

// Grid-normalized HPD level: admit points in decreasing density until the
// cumulative mass reaches the credibility. Ties at c are all admitted.
HpdThreshold hpd_threshold(const TestStatistic& posterior, const Observation& x, const ParameterGrid& grid,
                           double credibility);
ParameterSet hpd_set(const TestStatistic& posterior, const Observation& x, const ParameterGrid& grid,
                     double credibility);

// Local CDFs / cutoffs at every grid point, computed once and reused for any
// number of observations.
std::vector<LocalCdf> precompute_cdfs(const RejectionProbabilityModel& model, const ParameterGrid& grid);
std::vector<double> precompute_critical_values(const CriticalValueModel& model, const ParameterGrid& grid);

// {θ : ĥ(x; θ) > α}
ParameterSet freb_set_pvalue(const RejectionProbabilityModel& model, const TestStatistic& stat, const Observation& x,
                             const ParameterGrid& grid, double alpha);
ParameterSet freb_set_pvalue(std::span<const LocalCdf> cdfs, const TestStatistic& stat, const Observation& x,
                             const ParameterGrid& grid, double alpha);

// {θ : λ(x; θ) > t̂_θ}; alpha must equal the model's level.
ParameterSet freb_set_critval(const CriticalValueModel& model, const TestStatistic& stat, const Observation& x,
                              const ParameterGrid& grid, double alpha);
ParameterSet freb_set_critval(std::span<const double> cutoffs, double alpha, const TestStatistic& stat,
                              const Observation& x, const ParameterGrid& grid);

// Fraction of grid points on which two sets over the same grid disagree.
double symmetric_difference_fraction(const ParameterSet& a, const ParameterSet& b);

}  // namespace freb
