#include "freb/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>

#include "freb/benchmarks.hpp"
#include "freb/calibration.hpp"
#include "freb/confidence.hpp"
#include "freb/diagnostics.hpp"
#include "freb/errors.hpp"
#include "freb/io.hpp"

namespace freb::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --config <json>: top-level keys set global options; an object under a
// command name sets that command's options. Command-line values win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json root;
    try {
      root = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("--config", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw CLI::ConversionError("--config", "the config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(root, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      out.push_back(std::move(item));
    }
  }
};

std::string short_num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

std::string file_hash(const std::string& path) { return io::fnv1a_hex(io::read_text(path)); }

io::Provenance provenance(const json& settings, const std::string& command) {
  io::Provenance p;
  p.config_hash = io::fnv1a_hex(settings.dump());
  p.fields["command"] = command;
  return p;
}

void check_level(double value, const char* name) {
  if (!(value > 0.0 && value < 1.0)) throw UsageError(std::string(name) + " must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// Statistic sources

struct StatisticOptions {
  std::string builtin;       // --statistic builtin:<scenario>
  std::string lambda_table;  // --lambda-table <csv>
};

// A resolved λ. Table-backed statistics are looked up by row index, so the
// observation handed to them is the one-element id of the row.
struct StatisticSource {
  std::string tag;
  std::optional<TestStatistic> stat;
  bool by_id = false;

  std::vector<double> observation(const SampleSet& rows, std::size_t i) const {
    if (by_id) return {static_cast<double>(i)};
    return {rows.x(i).begin(), rows.x(i).end()};
  }
  const TestStatistic& operator*() const { return *stat; }
};

StatisticSource resolve_statistic(const StatisticOptions& opts, const std::string& fallback) {
  if (!opts.builtin.empty() && !opts.lambda_table.empty())
    throw UsageError("give exactly one statistic source: --statistic or --lambda-table");
  std::string tag;
  if (!opts.builtin.empty())
    tag = opts.builtin;
  else if (!opts.lambda_table.empty())
    tag = "table:" + opts.lambda_table;
  else
    tag = fallback;
  if (tag.empty()) throw UsageError("missing statistic source: pass --statistic builtin:<scenario> or --lambda-table");

  StatisticSource src;
  src.tag = tag;
  if (tag.rfind("builtin:", 0) == 0) {
    try {
      src.stat = exact_posterior(named_scenario(tag.substr(8)));
    } catch (const InvalidInput& e) {
      throw UsageError(std::string("--statistic: ") + e.what());
    }
  } else if (tag.rfind("table:", 0) == 0) {
    src.stat = io::read_statistic_table(tag.substr(6)).as_statistic();
    src.by_id = true;
  } else {
    throw UsageError("unknown statistic source '" + tag + "' (expected builtin:<scenario> or a --lambda-table)");
  }
  return src;
}

void check_statistic_fits(const StatisticSource& src, const SampleSet& rows, const std::string& what) {
  if ((*src).theta_dim() != rows.theta_dim())
    throw DataError(what + " has " + std::to_string(rows.theta_dim()) + " parameter columns but statistic '" +
                    src.tag + "' expects " + std::to_string((*src).theta_dim()));
  if (!src.by_id && (*src).obs_dim() != rows.obs_dim())
    throw DataError(what + " has " + std::to_string(rows.obs_dim()) + " observation columns but statistic '" +
                    src.tag + "' expects " + std::to_string((*src).obs_dim()));
}

// ---------------------------------------------------------------------------
// Grids

struct GridOptions {
  double lower = -10.0;
  double upper = 10.0;
  std::size_t count = 0;  // 0: 2001 points in 1D, 201 per axis in 2D, 51 otherwise
};

ParameterGrid make_grid(const GridOptions& g, std::size_t dim) {
  const std::size_t count = g.count != 0 ? g.count : dim == 1 ? 2001 : dim == 2 ? 201 : 51;
  if (!(g.upper > g.lower) || count < 2) throw UsageError("grid needs lower < upper and at least 2 points per axis");
  return ParameterGrid::uniform(g.lower, g.upper, count, dim);
}

json grid_json(const ParameterGrid& grid) {
  json axes = json::array();
  for (const auto& a : grid.axes()) axes.push_back({a.lower, a.upper, a.count});
  return axes;
}

// ---------------------------------------------------------------------------
// Fitted-model routes shared by infer and diagnose

struct RouteOptions {
  std::string model;
  std::string route;  // pvalue | critval | hpd; default from the model kind
  std::optional<double> alpha;
  StatisticOptions statistic;
  GridOptions grid;
};

struct ResolvedRoute {
  SetRoute route;
  double alpha;
  std::optional<RejectionProbabilityModel> rejection;
  std::optional<CriticalValueModel> critval;
  StatisticSource statistic;
  std::string model_hash;

  std::size_t theta_dim() const {
    if (rejection) return rejection->theta_dim();
    if (critval) return critval->theta_dim();
    return (*statistic).theta_dim();
  }
  const CalibrationTable* calibration() const {
    if (rejection) return &rejection->estimator().table();
    if (critval) return &critval->estimator().table();
    return nullptr;
  }
};

ResolvedRoute resolve_route(const RouteOptions& opts) {
  ResolvedRoute r;
  std::optional<SetRoute> requested;
  if (!opts.route.empty()) {
    try {
      requested = parse_set_route(opts.route);
    } catch (const InvalidInput& e) {
      throw UsageError(std::string("--route: ") + e.what());
    }
  }
  io::ModelArtifact meta;
  if (!opts.model.empty()) {
    const std::string kind = io::model_kind(opts.model);
    r.route = kind == "rejection" ? SetRoute::FrebPValue : SetRoute::FrebCriticalValue;
    if (requested && *requested != r.route)
      throw UsageError("--route " + opts.route + " does not match the " + kind + " model in " + opts.model);
    if (r.route == SetRoute::FrebPValue)
      r.rejection = io::load_rejection_model(opts.model, &meta);
    else
      r.critval = io::load_critical_value_model(opts.model, &meta);
    r.model_hash = file_hash(opts.model);
  } else {
    if (!requested || *requested != SetRoute::Hpd)
      throw UsageError("--model is required unless --route hpd is given");
    r.route = SetRoute::Hpd;
  }

  if (r.critval) {
    r.alpha = r.critval->alpha();
    if (opts.alpha && *opts.alpha != r.alpha)
      throw UsageError("--alpha " + short_num(*opts.alpha) + " differs from the critical-value model's level " +
                       short_num(r.alpha));
  } else {
    r.alpha = opts.alpha.value_or(0.1);
  }
  check_level(r.alpha, "alpha");

  r.statistic = resolve_statistic(opts.statistic, meta.statistic);
  if (r.calibration() != nullptr && (*r.statistic).theta_dim() != r.theta_dim())
    throw DataError("statistic '" + r.statistic.tag + "' does not match the model's parameter dimension");
  return r;
}

json route_settings(const ResolvedRoute& r, const ParameterGrid& grid) {
  return {{"route", std::string(to_string(r.route))},
          {"alpha", r.alpha},
          {"model", r.model_hash},
          {"statistic", r.statistic.tag},
          {"grid", grid_json(grid)}};
}

// ---------------------------------------------------------------------------
// Commands

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct BenchmarkOptions {
  std::string scenario;
  std::string scenario_file;
  std::size_t target_count = 0;
  std::size_t train_size = 0, calibration_size = 0, diagnostic_size = 0;
};

int cmd_benchmark(const Globals& g, const BenchmarkOptions& o, bool seed_given, std::ostream& out) {
  if (o.scenario.empty() == o.scenario_file.empty())
    throw UsageError("give exactly one of --scenario or --scenario-file");
  Scenario s;
  try {
    if (!o.scenario.empty()) {
      s = named_scenario(o.scenario, g.seed);
    } else {
      s = io::parse_scenario_json(io::read_text(o.scenario_file));
      if (seed_given) s.seed = g.seed;
    }
    if (o.target_count > 0) {
      s.target_distribution = s.prior;
      s.target_count = o.target_count;
    }
    if (o.train_size > 0) s.sizes.train = o.train_size;
    if (o.calibration_size > 0) s.sizes.calibration = o.calibration_size;
    if (o.diagnostic_size > 0) s.sizes.diagnostic = o.diagnostic_size;
    s.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }

  const io::Provenance bare;
  const json settings = {{"command", "benchmark"}, {"scenario", json::parse(io::scenario_json(s, bare))}};
  io::Provenance prov = provenance(settings, "benchmark");
  prov.fields["scenario"] = s.name;
  prov.fields["seed"] = std::to_string(s.seed);

  const fs::path dir(g.out);
  fs::create_directories(dir);
  const std::pair<SplitRole, const char*> files[] = {{SplitRole::Train, "train.csv"},
                                                     {SplitRole::Calibration, "calibration.csv"},
                                                     {SplitRole::Diagnostic, "diagnostic.csv"},
                                                     {SplitRole::Target, "targets.csv"}};
  for (const auto& [role, name] : files) {
    const SampleSet split = sample_split(s, role);
    io::Provenance p = prov;
    p.fields["split"] = std::string(to_string(role));
    io::write_samples_csv(dir / name, split, p);
    out << name << ": " << split.size() << " rows\n";
  }
  io::write_text(dir / "scenario.json", io::scenario_json(s, prov));
  out << "scenario.json: " << s.name << " (seed " << s.seed << ")\n";
  return kOk;
}

struct CalibrateOptions {
  std::string cal;
  StatisticOptions statistic;
  std::string route = "both";
  double alpha = 0.1;
  std::size_t oversampling = 10;
  std::size_t neighbors = 0;
  std::string local_fit = "constant";
};

int cmd_calibrate(const Globals& g, const CalibrateOptions& o, std::ostream& out) {
  const bool want_pvalue = o.route == "pvalue" || o.route == "both";
  const bool want_critval = o.route == "critval" || o.route == "both";
  if (!want_pvalue && !want_critval) throw UsageError("--route must be pvalue, critval or both");
  if (o.oversampling == 0) throw UsageError("--K must be at least 1");
  if (want_critval) check_level(o.alpha, "alpha");
  EstimatorConfig config;
  config.neighbors = o.neighbors;
  try {
    config.fit = parse_local_fit(o.local_fit);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const StatisticSource src = resolve_statistic(o.statistic, "");

  io::Provenance in_prov;
  const SampleSet cal = io::read_samples_csv(o.cal, SplitRole::Calibration, &in_prov);
  if (cal.role() != SplitRole::Calibration)
    throw DataError(o.cal + " holds '" + std::string(to_string(cal.role())) + "' rows, not calibration rows");
  if (cal.empty()) throw DataError(o.cal + " has no calibration rows");
  check_statistic_fits(src, cal, o.cal);

  CalibrationTable table;
  table.theta_dim = cal.theta_dim();
  table.thetas.assign(cal.thetas().begin(), cal.thetas().end());
  table.lambdas.resize(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) table.lambdas[i] = (*src)(src.observation(cal, i), cal.theta(i));

  json settings = {{"command", "calibrate"},
                   {"calibration", file_hash(o.cal)},
                   {"statistic", src.tag},
                   {"route", o.route},
                   {"K", o.oversampling},
                   {"k", o.neighbors},
                   {"local_fit", o.local_fit},
                   {"seed", g.seed}};
  if (want_critval) settings["alpha"] = o.alpha;
  io::ModelArtifact meta{src.tag, provenance(settings, "calibrate")};
  meta.provenance.fields["calibration_source"] = in_prov.config_hash;

  const fs::path dir(g.out);
  fs::create_directories(dir);
  if (want_pvalue) {
    const AugmentedSet augmented = augment_table(table, o.oversampling, g.seed);
    const RejectionProbabilityModel model = fit_rejection_model(augmented, config);
    io::save_rejection_model(dir / "rejection_model.json", model, meta);
    out << "rejection_model.json: B'=" << model.info().calibration_size << " K=" << model.info().oversampling
        << " augmented_rows=" << model.info().augmented_rows << " k=" << model.estimator().neighbors() << "\n";
    for (const auto& w : model.warnings()) out << "warning: " << w << "\n";
  }
  if (want_critval) {
    const CriticalValueModel model = fit_quantile_model(table, o.alpha, config);
    io::save_critical_value_model(dir / "critval_model.json", model, meta);
    out << "critval_model.json: B'=" << table.size() << " alpha=" << short_num(o.alpha)
        << " k=" << model.estimator().neighbors() << "\n";
  }
  return kOk;
}

struct InferOptions {
  RouteOptions route;
  std::string targets;
};

int cmd_infer(const Globals& g, const InferOptions& o, std::ostream& out) {
  const ResolvedRoute r = resolve_route(o.route);
  io::Provenance in_prov;
  const SampleSet targets = io::read_samples_csv(o.targets, SplitRole::Target, &in_prov);
  if (targets.role() != SplitRole::Target)
    throw DataError(o.targets + " holds '" + std::string(to_string(targets.role())) + "' rows, not targets");
  const ParameterGrid grid = make_grid(o.route.grid, r.theta_dim());
  if (!targets.empty()) check_statistic_fits(r.statistic, targets, o.targets);

  json settings = route_settings(r, grid);
  settings["command"] = "infer";
  settings["targets"] = file_hash(o.targets);
  io::Provenance prov = provenance(settings, "infer");
  prov.fields["route"] = std::string(to_string(r.route));

  std::vector<LocalCdf> cdfs;
  std::vector<double> cutoffs;
  if (!targets.empty()) {
    if (r.rejection) cdfs = precompute_cdfs(*r.rejection, grid);
    if (r.critval) cutoffs = precompute_critical_values(*r.critval, grid);
  }

  const fs::path dir(g.out);
  fs::create_directories(dir);
  std::string summary = "# config_hash=" + prov.config_hash + "\n";
  summary += "target_id,route,alpha,set_size,contains_truth\n";
  const TestStatistic& stat = *r.statistic;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::vector<double> xv = r.statistic.observation(targets, i);
    const Observation x(xv);
    const auto truth = targets.theta(i);
    std::optional<ParameterSet> set;
    bool contains = false;
    switch (r.route) {
      case SetRoute::FrebPValue:
        set = freb_set_pvalue(cdfs, stat, x, grid, r.alpha);
        contains = r.rejection->cdf(truth, stat(xv, truth)) > r.alpha;
        break;
      case SetRoute::FrebCriticalValue:
        set = freb_set_critval(cutoffs, r.alpha, stat, x, grid);
        contains = stat(xv, truth) > r.critval->at(truth).value;
        break;
      case SetRoute::Hpd: {
        const ParameterSet hpd = hpd_set(stat, x, grid, 1.0 - r.alpha);
        set.emplace(grid, std::vector<std::uint8_t>(hpd.mask().begin(), hpd.mask().end()), r.alpha, SetRoute::Hpd);
        contains = stat(xv, truth) >= hpd_threshold(stat, x, grid, 1.0 - r.alpha).density;
        break;
      }
    }
    io::Provenance p = prov;
    p.fields["target_id"] = std::to_string(i);
    io::save_parameter_set(dir / ("set_" + std::to_string(i) + ".json"), *set, p);
    summary += std::to_string(i) + "," + std::string(to_string(r.route)) + "," + io::format_double(r.alpha) + "," +
               io::format_double(set_size(*set)) + "," + (contains ? "true" : "false") + "\n";
  }
  io::write_text(dir / "summary.csv", summary);
  out << "summary.csv: " << targets.size() << " targets, route " << to_string(r.route) << ", alpha "
      << short_num(r.alpha) << "\n";
  return kOk;
}

struct DiagnoseOptions {
  RouteOptions route;
  std::string diag;
  std::optional<double> nominal;
  double probe_lower = -9.0;
  double probe_upper = 9.0;
  std::size_t probe_count = 37;
  std::size_t neighbors = 0;
  double confidence = 0.95;
};

void print_flagged(const CoverageReport& report, std::ostream& out) {
  const std::size_t under =
      static_cast<std::size_t>(std::count(report.flags.begin(), report.flags.end(), CoverageFlag::Under));
  out << "probe points: " << report.grid.size() << ", flagged: " << report.flagged_count() << " (under " << under
      << ", over " << report.flagged_count() - under << ")\n";
  auto coords = [&](std::size_t i) {
    const ParameterPoint p = report.grid.point(i);
    std::string s = "(";
    for (std::size_t j = 0; j < p.dim(); ++j) s += (j ? ", " : "") + short_num(p[j]);
    return s + ")";
  };
  for (std::size_t i = 0; i < report.flags.size();) {
    if (report.flags[i] == CoverageFlag::Ok) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double lo = report.estimates[i], hi = report.estimates[i];
    while (j + 1 < report.flags.size() && report.flags[j + 1] == report.flags[i]) {
      ++j;
      lo = std::min(lo, report.estimates[j]);
      hi = std::max(hi, report.estimates[j]);
    }
    out << "  " << to_string(report.flags[i]) << ": " << coords(i) << " to " << coords(j) << ", estimate "
        << short_num(lo) << " to " << short_num(hi) << "\n";
    i = j + 1;
  }
}

int cmd_diagnose(const Globals& g, const DiagnoseOptions& o, std::ostream& out) {
  if (o.nominal) check_level(*o.nominal, "nominal coverage");
  check_level(o.confidence, "--confidence");
  if (o.probe_count < 2 || !(o.probe_upper > o.probe_lower))
    throw UsageError("probe grid needs lower < upper and at least 2 points");

  io::Provenance in_prov;
  const SampleSet diag = io::read_samples_csv(o.diag, SplitRole::Diagnostic, &in_prov);
  const auto marked = in_prov.fields.find("split");
  if (diag.role() == SplitRole::Calibration || (marked != in_prov.fields.end() && marked->second == "calibration"))
    throw DataError(o.diag + " is marked as calibration data; diagnostics need an independent diagnostic split");
  if (diag.role() != SplitRole::Diagnostic)
    throw DataError(o.diag + " holds '" + std::string(to_string(diag.role())) + "' rows, not diagnostic rows");
  if (diag.size() < 100) throw DataError(o.diag + " has fewer than 100 diagnostic rows");

  const ResolvedRoute r = resolve_route(o.route);
  const double nominal = o.nominal.value_or(1.0 - r.alpha);
  check_statistic_fits(r.statistic, diag, o.diag);

  if (const CalibrationTable* cal = r.calibration()) {
    std::set<std::vector<double>> seen;
    for (std::size_t i = 0; i < cal->size(); ++i) seen.emplace(cal->theta(i).begin(), cal->theta(i).end());
    for (std::size_t i = 0; i < diag.size(); ++i)
      if (seen.count(std::vector<double>(diag.theta(i).begin(), diag.theta(i).end())) != 0)
        throw DataError(o.diag + ": row " + std::to_string(i + 1) +
                        " repeats a calibration parameter; diagnostic and calibration splits overlap");
  }

  const ParameterGrid grid = make_grid(o.route.grid, r.theta_dim());
  MembershipRule rule;
  switch (r.route) {
    case SetRoute::FrebPValue: rule = pvalue_rule(*r.rejection, *r.statistic, r.alpha); break;
    case SetRoute::FrebCriticalValue: rule = critval_rule(*r.critval, *r.statistic); break;
    case SetRoute::Hpd: rule = hpd_rule(*r.statistic, grid, 1.0 - r.alpha); break;
  }
  std::vector<DiagnosticRecord> records;
  records.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const auto theta = diag.theta(i);
    records.push_back({ParameterPoint(std::vector<double>(theta.begin(), theta.end())),
                       rule(r.statistic.observation(diag, i), theta)});
  }
  const CoverageModel model = fit_coverage_model(std::move(records), {o.neighbors, o.confidence});
  const ParameterGrid probes = ParameterGrid::uniform(o.probe_lower, o.probe_upper, o.probe_count, r.theta_dim());
  const CoverageReport report = coverage_map(model, probes, nominal);

  json settings = route_settings(r, grid);
  settings["command"] = "diagnose";
  settings["diagnostic"] = file_hash(o.diag);
  settings["nominal"] = nominal;
  settings["probes"] = grid_json(probes);
  settings["neighbors"] = model.neighbors();
  settings["confidence"] = o.confidence;
  io::Provenance prov = provenance(settings, "diagnose");
  prov.fields["route"] = std::string(to_string(r.route));

  const fs::path dir(g.out);
  fs::create_directories(dir);
  io::write_coverage_csv(dir / "coverage.csv", report, prov);
  out << "coverage.csv: route " << to_string(r.route) << ", nominal " << short_num(nominal) << ", B''=" << diag.size()
      << ", k=" << model.neighbors() << "\n";
  print_flagged(report, out);
  return kOk;
}

void add_route_options(CLI::App* cmd, RouteOptions& o) {
  cmd->add_option("--model", o.model, "Fitted model JSON from calibrate");
  cmd->add_option("--route", o.route, "pvalue, critval or hpd (default: from the model)");
  cmd->add_option("--alpha", o.alpha, "Miscoverage level; HPD sets use credibility 1 - alpha");
  cmd->add_option("--statistic", o.statistic.builtin, "Statistic source builtin:<scenario>");
  cmd->add_option("--lambda-table", o.statistic.lambda_table, "CSV of precomputed theta..,x_id,lambda rows");
  cmd->add_option("--grid-lower", o.grid.lower, "Grid lower bound per axis")->capture_default_str();
  cmd->add_option("--grid-upper", o.grid.upper, "Grid upper bound per axis")->capture_default_str();
  cmd->add_option("--grid-count", o.grid.count, "Grid points per axis (default 2001 in 1D, 201 in 2D)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequentist calibration of posterior-based confidence sets", "freb"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values");
  app.require_subcommand(1);
  app.fallthrough();

  Globals globals;
  auto* seed_opt = app.add_option("--seed", globals.seed, "64-bit seed")->capture_default_str();
  app.add_option("--out", globals.out, "Output directory")->capture_default_str();

  BenchmarkOptions bench;
  auto* c_bench = app.add_subcommand("benchmark", "Sample the train/calibration/diagnostic/target splits");
  c_bench->add_option("--scenario", bench.scenario, "gauss1d or gmm2d");
  c_bench->add_option("--scenario-file", bench.scenario_file, "Scenario JSON");
  c_bench->add_option("--target-count", bench.target_count, "Extra targets drawn from the prior");
  c_bench->add_option("--train-size", bench.train_size, "Override B");
  c_bench->add_option("--calibration-size", bench.calibration_size, "Override B'");
  c_bench->add_option("--diagnostic-size", bench.diagnostic_size, "Override B''");

  CalibrateOptions cal;
  auto* c_cal = app.add_subcommand("calibrate", "Fit rejection-probability and/or critical-value models");
  c_cal->add_option("--cal", cal.cal, "Calibration split CSV")->required();
  c_cal->add_option("--statistic", cal.statistic.builtin, "Statistic source builtin:<scenario>");
  c_cal->add_option("--lambda-table", cal.statistic.lambda_table, "CSV of precomputed theta..,x_id,lambda rows");
  c_cal->add_option("--route", cal.route, "pvalue, critval or both")->capture_default_str();
  c_cal->add_option("--alpha", cal.alpha, "Level of the critical-value model")->capture_default_str();
  c_cal->add_option("--K", cal.oversampling, "Cutoffs drawn per calibration row")->capture_default_str();
  c_cal->add_option("--k,--neighbors", cal.neighbors, "Nearest neighbors (0: max(250, ceil(B'^(2/3))))");
  c_cal->add_option("--local-fit", cal.local_fit, "constant or quadratic")->capture_default_str();

  InferOptions infer;
  auto* c_infer = app.add_subcommand("infer", "Build confidence sets for target observations");
  add_route_options(c_infer, infer.route);
  c_infer->add_option("--targets", infer.targets, "Target split CSV")->required();

  DiagnoseOptions diag;
  auto* c_diag = app.add_subcommand("diagnose", "Estimate local coverage across the parameter space");
  add_route_options(c_diag, diag.route);
  c_diag->add_option("--diag", diag.diag, "Diagnostic split CSV")->required();
  c_diag->add_option("--nominal", diag.nominal, "Nominal coverage (default 1 - alpha)");
  c_diag->add_option("--probe-lower", diag.probe_lower, "Probe grid lower bound")->capture_default_str();
  c_diag->add_option("--probe-upper", diag.probe_upper, "Probe grid upper bound")->capture_default_str();
  c_diag->add_option("--probe-count", diag.probe_count, "Probe points per axis")->capture_default_str();
  c_diag->add_option("--coverage-neighbors", diag.neighbors, "Neighbors (0: max(200, ceil(B''^(2/3))))");
  c_diag->add_option("--confidence", diag.confidence, "Wilson band level")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (c_bench->parsed()) return cmd_benchmark(globals, bench, seed_opt->count() > 0, out);
    if (c_cal->parsed()) return cmd_calibrate(globals, cal, out);
    if (c_infer->parsed()) return cmd_infer(globals, infer, out);
    if (c_diag->parsed()) return cmd_diagnose(globals, diag, out);
    return kUsageError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const EvaluationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace freb::cli
