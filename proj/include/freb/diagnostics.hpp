#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "freb/calibration.hpp"
#include "freb/confidence.hpp"
#include "freb/neighbors.hpp"
#include "freb/statistics.hpp"

namespace freb {

// W = 1 iff the set built from the row's observation contains the row's θ.
struct DiagnosticRecord {
  ParameterPoint theta;
  bool covered;
};

// Pointwise set membership: does the set built from x contain θ?
using MembershipRule = std::function<bool(std::span<const double> x, std::span<const double> theta)>;

// ĥ(x; θ) > α
MembershipRule pvalue_rule(const RejectionProbabilityModel& model, const TestStatistic& stat, double alpha);
// λ(x; θ) > t̂_θ
MembershipRule critval_rule(const CriticalValueModel& model, const TestStatistic& stat);
// π(θ|x) ≥ c(x), with c from the grid HPD construction.
MembershipRule hpd_rule(const TestStatistic& posterior, const ParameterGrid& grid, double credibility);

// One record per diagnostic row; refuses any split other than diagnostic.
std::vector<DiagnosticRecord> coverage_indicators(const SampleSet& diag, const MembershipRule& rule);

struct CoverageConfig {
  std::size_t neighbors = 0;  // 0 selects max(200, ⌈B″^{2/3}⌉)
  double confidence = 0.95;   // Wilson band level
};

std::size_t default_coverage_neighbors(std::size_t n);

struct WilsonInterval {
  double center;
  double half_width;
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double confidence);

struct CoverageEstimate {
  double estimate;    // local mean of W
  double half_width;  // Wilson half-width on the local count
  double lower;
  double upper;
};

// k-NN local mean of W over standardized θ with Wilson bands.
class CoverageModel {
 public:
  CoverageModel(std::vector<DiagnosticRecord> records, CoverageConfig config);

  CoverageEstimate estimate(std::span<const double> theta) const;
  std::size_t sample_count() const noexcept { return covered_.size(); }
  std::size_t neighbors() const noexcept { return neighbors_; }
  std::size_t theta_dim() const noexcept { return standardization_.mean.size(); }

 private:
  std::vector<std::uint8_t> covered_;
  Standardization standardization_;
  KdTree tree_;
  std::size_t neighbors_;
  double confidence_;
};

CoverageModel fit_coverage_model(std::vector<DiagnosticRecord> records, const CoverageConfig& config = {});

enum class CoverageFlag { Ok, Under, Over };
std::string_view to_string(CoverageFlag flag) noexcept;

struct CoverageReport {
  ParameterGrid grid;
  std::vector<double> estimates;
  std::vector<double> half_widths;
  std::vector<CoverageFlag> flags;
  double nominal = 0.0;
  std::size_t sample_count = 0;

  std::size_t flagged_count() const noexcept;
};

// Flags a probe point when its Wilson band excludes the nominal level
// (Under if the band lies below it, Over if above).
CoverageReport coverage_map(const CoverageModel& model, const ParameterGrid& grid, double nominal);

}  // namespace freb
