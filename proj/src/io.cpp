#include "freb/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "freb/errors.hpp"

namespace freb::io {

using nlohmann::json;

namespace {

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string provenance_lines(const Provenance& prov) {
  std::string out = "# config_hash=" + prov.config_hash + "\n";
  for (const auto& [k, v] : prov.fields) out += "# " + k + "=" + v + "\n";
  return out;
}

json provenance_json(const Provenance& prov) {
  json fields = json::object();
  for (const auto& [k, v] : prov.fields) fields[k] = v;
  return {{"config_hash", prov.config_hash}, {"fields", fields}};
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  if (!j.is_object()) return p;
  p.config_hash = j.value("config_hash", "");
  if (j.contains("fields"))
    for (const auto& [k, v] : j.at("fields").items()) p.fields[k] = v.get<std::string>();
  return p;
}

// Column count of a "<prefix>N" run in the header starting at `from`.
std::size_t count_prefixed(const std::vector<std::string>& header, std::size_t from, std::string_view prefix) {
  std::size_t n = 0;
  while (from + n < header.size() && header[from + n] == std::string(prefix) + std::to_string(n + 1)) ++n;
  return n;
}

double cell(const CsvTable& t, std::size_t row, std::size_t col, const std::filesystem::path& path) {
  try {
    return parse_double(t.rows[row][col]);
  } catch (const DataError&) {
    throw DataError(location(path, t.line_numbers[row]) + ": column '" + t.header[col] + "' is not a number: '" +
                    t.rows[row][col] + "'");
  }
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const std::filesystem::path& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(path.string() + ": missing or malformed field '" + key + "'");
  }
}

json model_common(const LocalEstimator& est, const ModelArtifact& meta) {
  const auto& table = est.table();
  return {{"format", "freb-model"},
          {"version", kFormatVersion},
          {"statistic", meta.statistic},
          {"provenance", provenance_json(meta.provenance)},
          {"local_fit", std::string(to_string(est.fit()))},
          {"neighbors", est.neighbors()},
          {"theta_dim", table.theta_dim},
          {"standardization", {{"mean", est.standardization().mean}, {"scale", est.standardization().scale}}},
          {"table", {{"thetas", table.thetas}, {"lambdas", table.lambdas}}}};
}

struct LoadedCommon {
  CalibrationTable table;
  EstimatorConfig config;
  Standardization standardization;
};

LoadedCommon load_common(const json& j, const std::filesystem::path& path, std::string_view kind, ModelArtifact* meta) {
  if (j.value("format", "") != "freb-model") throw DataError(path.string() + ": not a freb model artifact");
  if (j.value("version", 0) != kFormatVersion)
    throw DataError(path.string() + ": unsupported model format version " + std::to_string(j.value("version", 0)));
  if (j.value("kind", "") != kind)
    throw DataError(path.string() + ": expected a '" + std::string(kind) + "' model, found '" + j.value("kind", "") +
                    "'");
  LoadedCommon out;
  out.table.theta_dim = field<std::size_t>(j, "theta_dim", path);
  const json& t = j.at("table");
  out.table.thetas = field<std::vector<double>>(t, "thetas", path);
  out.table.lambdas = field<std::vector<double>>(t, "lambdas", path);
  out.config.neighbors = field<std::size_t>(j, "neighbors", path);
  try {
    out.config.fit = parse_local_fit(field<std::string>(j, "local_fit", path));
  } catch (const InvalidInput& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  out.standardization.mean = field<std::vector<double>>(j.at("standardization"), "mean", path);
  out.standardization.scale = field<std::vector<double>>(j.at("standardization"), "scale", path);
  if (meta != nullptr) {
    meta->statistic = j.value("statistic", "");
    meta->provenance = provenance_from_json(j.value("provenance", json::object()));
  }
  try {
    out.table.validate();
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return out;
}

void check_standardization(const Standardization& stored, const LocalEstimator& rebuilt,
                           const std::filesystem::path& path) {
  if (stored.mean != rebuilt.standardization().mean || stored.scale != rebuilt.standardization().scale)
    throw DataError(path.string() + ": stored standardization does not match the stored calibration table");
}

json distribution_json(const ParameterDistribution& d) {
  if (const auto* n = std::get_if<NormalSpec>(&d)) return {{"type", "normal"}, {"mean", n->mean}, {"variance", n->variance}};
  const auto& u = std::get<UniformSpec>(d);
  return {{"type", "uniform"}, {"lower", u.lower}, {"upper", u.upper}};
}

ParameterDistribution distribution_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "normal") return NormalSpec{j.at("mean").get<std::vector<double>>(), j.at("variance").get<double>()};
  if (type == "uniform")
    return UniformSpec{j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>()};
  throw InvalidInput("unknown distribution type '" + type + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || text.empty())
    throw DataError("not a number: '" + std::string(text) + "'");
  return v;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(f, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view meta(line);
      meta.remove_prefix(1);
      while (!meta.empty() && meta.front() == ' ') meta.remove_prefix(1);
      const auto eq = meta.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(meta.substr(0, eq)), value(meta.substr(eq + 1));
      if (key == "config_hash")
        t.provenance.config_hash = value;
      else
        t.provenance.fields[key] = value;
      continue;
    }
    auto fields = split_commas(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw DataError(location(path, number) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(number);
  }
  if (!have_header) throw DataError(path.string() + ": missing CSV header");
  return t;
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples, const Provenance& prov) {
  std::string out = provenance_lines(prov);
  if (!samples.reference().empty()) out += "# reference=" + samples.reference() + "\n";
  out += "split";
  for (std::size_t j = 0; j < samples.theta_dim(); ++j) out += ",theta_" + std::to_string(j + 1);
  for (std::size_t j = 0; j < samples.obs_dim(); ++j) out += ",x_" + std::to_string(j + 1);
  out += "\n";
  const std::string role(to_string(samples.role()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += role;
    for (double v : samples.theta(i)) out += "," + format_double(v);
    for (double v : samples.x(i)) out += "," + format_double(v);
    out += "\n";
  }
  write_text(path, out);
}

SampleSet read_samples_csv(const std::filesystem::path& path, SplitRole fallback, Provenance* prov) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "split")
    throw DataError(path.string() + ": split CSV must start with a 'split' column");
  const std::size_t d = count_prefixed(t.header, 1, "theta_");
  const std::size_t m = count_prefixed(t.header, 1 + d, "x_");
  if (d == 0 || m == 0 || 1 + d + m != t.header.size())
    throw DataError(path.string() + ": header must be split,theta_1..theta_d,x_1..x_m");

  SplitRole role = fallback;
  if (!t.rows.empty()) {
    try {
      role = parse_split_role(t.rows[0][0]);
    } catch (const InvalidInput& e) {
      throw DataError(location(path, t.line_numbers[0]) + ": " + e.what());
    }
  }
  SampleSet out(role, d, m);
  out.reserve(t.rows.size());
  std::vector<double> theta(d), x(m);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][0] != to_string(role))
      throw DataError(location(path, t.line_numbers[r]) + ": split '" + t.rows[r][0] + "' differs from '" +
                      std::string(to_string(role)) + "' earlier in the file");
    for (std::size_t j = 0; j < d; ++j) theta[j] = cell(t, r, 1 + j, path);
    for (std::size_t j = 0; j < m; ++j) x[j] = cell(t, r, 1 + d + j, path);
    try {
      out.add(theta, x);
    } catch (const InvalidInput& e) {
      throw DataError(location(path, t.line_numbers[r]) + ": " + e.what());
    }
  }
  if (auto it = t.provenance.fields.find("reference"); it != t.provenance.fields.end()) out.set_reference(it->second);
  if (prov != nullptr) *prov = t.provenance;
  return out;
}

StatisticTable read_statistic_table(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t d = count_prefixed(t.header, 0, "theta_");
  if (d == 0 || t.header.size() != d + 2 || t.header[d] != "x_id" || t.header[d + 1] != "lambda")
    throw DataError(path.string() + ": header must be theta_1..theta_d,x_id,lambda");
  StatisticTable table(d);
  std::vector<double> theta(d);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) theta[j] = cell(t, r, j, path);
    const double id = cell(t, r, d, path);
    if (id != std::floor(id)) throw DataError(location(path, t.line_numbers[r]) + ": x_id must be an integer");
    try {
      table.add(theta, static_cast<std::int64_t>(id), cell(t, r, d + 1, path));
    } catch (const InvalidInput& e) {
      throw DataError(location(path, t.line_numbers[r]) + ": " + e.what());
    }
  }
  return table;
}

void save_rejection_model(const std::filesystem::path& path, const RejectionProbabilityModel& model,
                          const ModelArtifact& meta) {
  json j = model_common(model.estimator(), meta);
  j["kind"] = "rejection";
  j["calibration_size"] = model.info().calibration_size;
  j["oversampling"] = model.info().oversampling;
  j["augmented_rows"] = model.info().augmented_rows;
  j["seed"] = model.info().seed;
  j["warnings"] = model.warnings();
  write_text(path, j.dump(1) + "\n");
}

RejectionProbabilityModel load_rejection_model(const std::filesystem::path& path, ModelArtifact* meta) {
  const json j = read_json(path);
  LoadedCommon c = load_common(j, path, "rejection", meta);
  RejectionFitInfo info;
  info.calibration_size = c.table.size();
  info.oversampling = field<std::size_t>(j, "oversampling", path);
  info.augmented_rows = field<std::size_t>(j, "augmented_rows", path);
  info.seed = field<std::uint64_t>(j, "seed", path);
  auto warnings = j.value("warnings", std::vector<std::string>{});
  try {
    RejectionProbabilityModel model(std::move(c.table), c.config, info, std::move(warnings));
    check_standardization(c.standardization, model.estimator(), path);
    return model;
  } catch (const InvalidInput& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_critical_value_model(const std::filesystem::path& path, const CriticalValueModel& model,
                               const ModelArtifact& meta) {
  json j = model_common(model.estimator(), meta);
  j["kind"] = "critical_value";
  j["alpha"] = model.alpha();
  write_text(path, j.dump(1) + "\n");
}

CriticalValueModel load_critical_value_model(const std::filesystem::path& path, ModelArtifact* meta) {
  const json j = read_json(path);
  LoadedCommon c = load_common(j, path, "critical_value", meta);
  try {
    CriticalValueModel model(std::move(c.table), field<double>(j, "alpha", path), c.config);
    check_standardization(c.standardization, model.estimator(), path);
    return model;
  } catch (const InvalidInput& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string model_kind(const std::filesystem::path& path) {
  const json j = read_json(path);
  const std::string kind = j.value("kind", "");
  if (j.value("format", "") != "freb-model" || (kind != "rejection" && kind != "critical_value"))
    throw DataError(path.string() + ": not a freb model artifact");
  return kind;
}

std::string parameter_set_json(const ParameterSet& set, const Provenance& prov) {
  json axes = json::array();
  for (const auto& a : set.grid().axes()) axes.push_back({{"lower", a.lower}, {"upper", a.upper}, {"count", a.count}});
  // Runs alternate starting with non-members; the first run may be empty.
  json rle = json::array();
  std::uint8_t current = 0;
  std::size_t length = 0;
  for (std::uint8_t v : set.mask()) {
    if ((v != 0) != (current != 0)) {
      rle.push_back(length);
      current = v != 0 ? 1 : 0;
      length = 0;
    }
    ++length;
  }
  rle.push_back(length);
  const json j = {{"format", "freb-set"},
                  {"version", kFormatVersion},
                  {"provenance", provenance_json(prov)},
                  {"grid", {{"axes", axes}}},
                  {"mask_rle", rle},
                  {"alpha", set.alpha()},
                  {"route", std::string(to_string(set.route()))},
                  {"member_count", set.member_count()},
                  {"size", set_size(set)}};
  return j.dump(1) + "\n";
}

void save_parameter_set(const std::filesystem::path& path, const ParameterSet& set, const Provenance& prov) {
  write_text(path, parameter_set_json(set, prov));
}

ParameterSet load_parameter_set(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.value("format", "") != "freb-set") throw DataError(path.string() + ": not a freb parameter set");
  try {
    std::vector<GridAxis> axes;
    for (const auto& a : j.at("grid").at("axes"))
      axes.push_back({a.at("lower").get<double>(), a.at("upper").get<double>(), a.at("count").get<std::size_t>()});
    ParameterGrid grid(std::move(axes));
    std::vector<std::uint8_t> mask;
    mask.reserve(grid.size());
    std::uint8_t value = 0;
    for (const auto& run : j.at("mask_rle")) {
      mask.insert(mask.end(), run.get<std::size_t>(), value);
      value ^= 1;
    }
    return ParameterSet(std::move(grid), std::move(mask), j.at("alpha").get<double>(),
                        parse_set_route(j.at("route").get<std::string>()));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed parameter set: " + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& report, const Provenance& prov) {
  std::string out = provenance_lines(prov);
  out += "# nominal=" + format_double(report.nominal) + "\n";
  out += "# diagnostic_rows=" + std::to_string(report.sample_count) + "\n";
  for (std::size_t j = 0; j < report.grid.dim(); ++j) out += "theta_" + std::to_string(j + 1) + ",";
  out += "estimate,half_width,flag\n";
  std::vector<double> theta(report.grid.dim());
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    report.grid.point(i, theta);
    for (double v : theta) out += format_double(v) + ",";
    out += format_double(report.estimates[i]) + "," + format_double(report.half_widths[i]) + "," +
           std::string(to_string(report.flags[i])) + "\n";
  }
  write_text(path, out);
}

std::string scenario_json(const Scenario& s, const Provenance& prov) {
  json likelihood;
  if (const auto* g = std::get_if<GaussianLikelihood>(&s.likelihood)) {
    likelihood = {{"type", "gaussian"}, {"noise_variance", g->noise_variance}};
  } else {
    const auto& m = std::get<MixtureLikelihood>(s.likelihood);
    likelihood = {{"type", "mixture"}, {"variances", {m.variances.first, m.variances.second}}, {"weight", m.weight}};
  }
  json targets = json::array();
  for (const auto& t : s.target_thetas) targets.push_back(std::vector<double>(t.coords().begin(), t.coords().end()));
  json j = {{"format", "freb-scenario"},
            {"version", kFormatVersion},
            {"provenance", provenance_json(prov)},
            {"name", s.name},
            {"theta_dim", s.theta_dim},
            {"prior", distribution_json(s.prior)},
            {"reference", distribution_json(s.reference)},
            {"likelihood", likelihood},
            {"target_thetas", targets},
            {"sizes", {{"train", s.sizes.train}, {"calibration", s.sizes.calibration}, {"diagnostic", s.sizes.diagnostic}}},
            {"oversampling", s.oversampling},
            {"seed", s.seed}};
  if (s.target_distribution) {
    j["target_distribution"] = distribution_json(*s.target_distribution);
    j["target_count"] = s.target_count;
  }
  return j.dump(1) + "\n";
}

Scenario parse_scenario_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.theta_dim = j.at("theta_dim").get<std::size_t>();
    s.prior = distribution_from_json(j.at("prior"));
    s.reference = distribution_from_json(j.at("reference"));
    const json& l = j.at("likelihood");
    const std::string type = l.at("type").get<std::string>();
    if (type == "gaussian") {
      s.likelihood = GaussianLikelihood{l.at("noise_variance").get<double>()};
    } else if (type == "mixture") {
      const auto v = l.at("variances").get<std::vector<double>>();
      if (v.size() != 2) throw InvalidInput("mixture likelihood needs two variances");
      s.likelihood = MixtureLikelihood{{v[0], v[1]}, l.at("weight").get<double>()};
    } else {
      throw InvalidInput("unknown likelihood type '" + type + "'");
    }
    for (const auto& t : j.value("target_thetas", json::array()))
      s.target_thetas.emplace_back(t.get<std::vector<double>>());
    if (j.contains("target_distribution")) {
      s.target_distribution = distribution_from_json(j.at("target_distribution"));
      s.target_count = j.value("target_count", std::size_t{0});
    }
    const json& sizes = j.at("sizes");
    s.sizes = {sizes.at("train").get<std::size_t>(), sizes.at("calibration").get<std::size_t>(),
               sizes.at("diagnostic").get<std::size_t>()};
    s.oversampling = j.value("oversampling", std::size_t{10});
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed scenario JSON: ") + e.what());
  }
}

}  // namespace freb::io
