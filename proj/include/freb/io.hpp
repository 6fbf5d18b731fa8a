#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freb/benchmarks.hpp"
#include "freb/calibration.hpp"
#include "freb/confidence.hpp"
#include "freb/diagnostics.hpp"
#include "freb/statistics.hpp"

namespace freb::io {

inline constexpr int kFormatVersion = 1;

// 17 significant digits; parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Provenance carried by every artifact: the producing command's config hash
// plus free-form key/value pairs. In CSVs each entry is a leading
// "# key=value" line; in JSON it is the "provenance" object.
struct Provenance {
  std::string config_hash;
  std::map<std::string, std::string> fields;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  Provenance provenance;
};

// Comma-separated, no quoting. Lines starting with '#' carry metadata.
// Throws DataError naming the line on ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

// Splits: header (split, theta_1..theta_d, x_1..x_m), one role per file.
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples, const Provenance& prov);
// `fallback` is used for a header-only file. Mixed roles are a DataError.
SampleSet read_samples_csv(const std::filesystem::path& path, SplitRole fallback, Provenance* prov = nullptr);

// Externally computed statistics: header (theta_1..theta_d, x_id, lambda).
StatisticTable read_statistic_table(const std::filesystem::path& path);

// Model artifacts (JSON). Loading rebuilds the estimator from the stored
// table, so queries after a round trip are bit-identical.
struct ModelArtifact {
  std::string statistic;  // statistic source tag, e.g. "builtin:gauss1d"
  Provenance provenance;
};

void save_rejection_model(const std::filesystem::path& path, const RejectionProbabilityModel& model,
                          const ModelArtifact& meta);
RejectionProbabilityModel load_rejection_model(const std::filesystem::path& path, ModelArtifact* meta = nullptr);

void save_critical_value_model(const std::filesystem::path& path, const CriticalValueModel& model,
                               const ModelArtifact& meta);
CriticalValueModel load_critical_value_model(const std::filesystem::path& path, ModelArtifact* meta = nullptr);

// "rejection" or "critical_value"; throws DataError otherwise.
std::string model_kind(const std::filesystem::path& path);

// ParameterSet JSON: grid axes, run-length-encoded mask, alpha, route.
std::string parameter_set_json(const ParameterSet& set, const Provenance& prov);
void save_parameter_set(const std::filesystem::path& path, const ParameterSet& set, const Provenance& prov);
ParameterSet load_parameter_set(const std::filesystem::path& path);

// Coverage CSV: theta_1..theta_d, estimate, half_width, flag.
void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& report, const Provenance& prov);

std::string scenario_json(const Scenario& scenario, const Provenance& prov);
Scenario parse_scenario_json(std::string_view text);

// Writes bytes verbatim; throws DataError on failure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace freb::io
