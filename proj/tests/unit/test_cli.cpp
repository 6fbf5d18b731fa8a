#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>

#include <unistd.h>

#include "freb/cli.hpp"
#include "freb/io.hpp"

using namespace freb;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Per-process root: ctest may run tests from this binary in parallel.
fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "freb_cli_tests" / std::to_string(::getpid()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One shared small gauss1d run: 5000 calibration rows, 20000 diagnostic rows.
const fs::path& gauss_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("gauss");
    const auto r = run({"--seed", "5", "--out", d.string(), "benchmark", "--scenario", "gauss1d", "--train-size",
                        "100", "--calibration-size", "5000", "--diagnostic-size", "20000"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto c = run({"--seed", "5", "--out", d.string(), "calibrate", "--cal", (d / "calibration.csv").string(),
                        "--statistic", "builtin:gauss1d"});
    EXPECT_EQ(c.code, 0) << c.err;
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (gauss_dir() / name).string(); }

}  // namespace

TEST(CliBenchmark, WritesAllSplits) {
  const auto d = gauss_dir();
  for (const char* f : {"train.csv", "calibration.csv", "diagnostic.csv", "targets.csv", "scenario.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  EXPECT_EQ(io::read_samples_csv(d / "calibration.csv", SplitRole::Calibration).size(), 5000u);
  const auto targets = io::read_samples_csv(d / "targets.csv", SplitRole::Target);
  ASSERT_EQ(targets.size(), 1u);
  EXPECT_EQ(targets.theta(0)[0], 4.0);
}

TEST(CliBenchmark, Gmm2dDefaultSizes) {
  const auto d = fresh_dir("gmm");
  const auto r = run({"--out", d.string(), "benchmark", "--scenario", "gmm2d", "--train-size", "10",
                      "--diagnostic-size", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cal = io::read_samples_csv(d / "calibration.csv", SplitRole::Calibration);
  EXPECT_EQ(cal.size(), 30000u);
  EXPECT_EQ(cal.theta_dim(), 2u);
  EXPECT_EQ(io::read_samples_csv(d / "targets.csv", SplitRole::Target).size(), 3u);
}

TEST(CliBenchmark, UnknownScenarioIsUsageError) {
  const auto d = fresh_dir("unknown");
  EXPECT_EQ(run({"--out", d.string(), "benchmark", "--scenario", "gauss3d"}).code, cli::kUsageError);
  EXPECT_EQ(run({"--out", d.string(), "nonsense"}).code, cli::kUsageError);
  EXPECT_EQ(run({}).code, cli::kUsageError);
}

TEST(CliCalibrate, RecordsOversamplingAndSize) {
  io::ModelArtifact meta;
  const auto model = io::load_rejection_model(path("rejection_model.json"), &meta);
  EXPECT_EQ(model.info().oversampling, 10u);
  EXPECT_EQ(model.info().calibration_size, 5000u);
  EXPECT_EQ(model.info().augmented_rows, 50000u);
  EXPECT_EQ(meta.statistic, "builtin:gauss1d");
  EXPECT_EQ(io::load_critical_value_model(path("critval_model.json")).alpha(), 0.1);
}

TEST(CliCalibrate, CritvalOnlyRoute) {
  const auto d = fresh_dir("critonly");
  const auto r = run({"--out", d.string(), "calibrate", "--cal", path("calibration.csv"), "--statistic",
                      "builtin:gauss1d", "--route", "critval", "--alpha", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "critval_model.json"));
  EXPECT_FALSE(fs::exists(d / "rejection_model.json"));
}

TEST(CliCalibrate, MissingStatisticIsUsageError) {
  const auto d = fresh_dir("nostat");
  EXPECT_EQ(run({"--out", d.string(), "calibrate", "--cal", path("calibration.csv")}).code, cli::kUsageError);
  EXPECT_EQ(run({"--out", d.string(), "calibrate", "--cal", path("calibration.csv"), "--statistic",
                 "builtin:gauss1d", "--route", "bogus"})
                .code,
            cli::kUsageError);
}

TEST(CliCalibrate, MalformedRowIsDataError) {
  const auto d = fresh_dir("malformed");
  io::write_text(d / "cal.csv", "split,theta_1,x_1\ncalibration,0.5,1\ncalibration,nan?,1\n");
  const auto r = run({"--out", d.string(), "calibrate", "--cal", (d / "cal.csv").string(), "--statistic",
                      "builtin:gauss1d"});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find(":3"), std::string::npos) << r.err;
  EXPECT_EQ(run({"--out", d.string(), "calibrate", "--cal", (d / "absent.csv").string(), "--statistic",
                 "builtin:gauss1d"})
                .code,
            cli::kDataError);
}

TEST(CliCalibrate, LambdaTableMatchesBuiltin) {
  const auto d = fresh_dir("table");
  const auto cal = io::read_samples_csv(path("calibration.csv"), SplitRole::Calibration);
  std::string text = "theta_1,x_id,lambda\n";
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const double th = cal.theta(i)[0], x = cal.x(i)[0];
    const double z = th - 0.5 * x;
    text += io::format_double(th) + "," + std::to_string(i) + "," +
            io::format_double(std::exp(-z * z) / std::sqrt(std::numbers::pi)) + "\n";
  }
  io::write_text(d / "lam.csv", text);
  const auto r = run({"--seed", "5", "--out", d.string(), "calibrate", "--cal", path("calibration.csv"),
                      "--lambda-table", (d / "lam.csv").string(), "--route", "critval"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a = io::load_critical_value_model(d / "critval_model.json");
  const auto b = io::load_critical_value_model(path("critval_model.json"));
  for (double th : {-5.0, 0.0, 3.0}) {
    const std::vector<double> t{th};
    EXPECT_NEAR(a.at(t).value, b.at(t).value, 1e-12);
  }
}

TEST(CliInfer, FrebCoversFourHpdDoesNot) {
  const auto d = fresh_dir("infer");
  const auto targets = path("targets.csv");
  ASSERT_EQ(run({"--out", (d / "p").string(), "infer", "--model", path("rejection_model.json"), "--targets", targets})
                .code,
            0);
  ASSERT_EQ(run({"--out", (d / "h").string(), "infer", "--route", "hpd", "--statistic", "builtin:gauss1d",
                 "--targets", targets})
                .code,
            0);
  const auto p = io::read_csv(d / "p" / "summary.csv");
  const auto h = io::read_csv(d / "h" / "summary.csv");
  EXPECT_EQ(p.header, (std::vector<std::string>{"target_id", "route", "alpha", "set_size", "contains_truth"}));
  ASSERT_EQ(p.rows.size(), 1u);
  EXPECT_EQ(p.rows[0][4], "true");
  EXPECT_EQ(h.rows[0][4], "false");
  const auto set = io::load_parameter_set(d / "h" / "set_0.json");
  EXPECT_EQ(set.alpha(), 0.1);
  EXPECT_NEAR(set_size(set), 2.33, 0.03);
}

TEST(CliInfer, EmptyTargetsWriteHeaderOnly) {
  const auto d = fresh_dir("empty");
  io::write_text(d / "t.csv", "split,theta_1,x_1\n");
  const auto r = run({"--out", d.string(), "infer", "--model", path("critval_model.json"), "--targets",
                      (d / "t.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = io::read_csv(d / "summary.csv");
  EXPECT_EQ(s.header.size(), 5u);
  EXPECT_TRUE(s.rows.empty());
}

TEST(CliInfer, AlphaMismatchWithCritvalModel) {
  const auto d = fresh_dir("alpha");
  EXPECT_EQ(run({"--out", d.string(), "infer", "--model", path("critval_model.json"), "--alpha", "0.2", "--targets",
                 path("targets.csv")})
                .code,
            cli::kUsageError);
  EXPECT_EQ(run({"--out", d.string(), "infer", "--targets", path("targets.csv")}).code, cli::kUsageError);
}

TEST(CliDiagnose, HpdUndercoversNearFour) {
  const auto d = fresh_dir("diag_hpd");
  const auto r = run({"--out", d.string(), "diagnose", "--route", "hpd", "--statistic", "builtin:gauss1d", "--diag",
                      path("diagnostic.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("under"), std::string::npos);
  const auto t = io::read_csv(d / "coverage.csv");
  ASSERT_EQ(t.rows.size(), 37u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"theta_1", "estimate", "half_width", "flag"}));
  EXPECT_EQ(t.rows[26][0], "4");
  EXPECT_LT(io::parse_double(t.rows[26][1]), 0.1);
  EXPECT_EQ(t.rows[26][3], "under");
  EXPECT_EQ(t.rows[18][3], "over");
  EXPECT_EQ(io::parse_double(t.provenance.fields.at("nominal")), 0.9);
}

TEST(CliDiagnose, NominalOutOfRangeIsUsageError) {
  const auto d = fresh_dir("nominal");
  for (const char* bad : {"1", "0", "1.5"})
    EXPECT_EQ(run({"--out", d.string(), "diagnose", "--route", "hpd", "--statistic", "builtin:gauss1d", "--diag",
                   path("diagnostic.csv"), "--nominal", bad})
                  .code,
              cli::kUsageError)
        << bad;
}

TEST(CliDiagnose, RefusesCalibrationData) {
  const auto d = fresh_dir("refuse");
  const auto r = run({"--out", d.string(), "diagnose", "--model", path("rejection_model.json"), "--diag",
                      path("calibration.csv")});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("calibration"), std::string::npos);
  EXPECT_FALSE(fs::exists(d / "coverage.csv"));
}

TEST(CliDiagnose, RefusesOverlappingParameters) {
  const auto d = fresh_dir("overlap");
  // Calibration rows relabelled as diagnostic rows.
  std::string text = io::read_text(path("calibration.csv"));
  std::string relabelled;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("calibration,", 0) == 0) line = "diagnostic," + line.substr(12);
    if (line.rfind("# split=", 0) == 0) continue;
    relabelled += line + "\n";
  }
  io::write_text(d / "diag.csv", relabelled);
  EXPECT_EQ(run({"--out", d.string(), "diagnose", "--model", path("critval_model.json"), "--diag",
                 (d / "diag.csv").string()})
                .code,
            cli::kDataError);
}

TEST(CliDiagnose, TooFewRowsIsDataError) {
  const auto d = fresh_dir("few");
  io::write_text(d / "diag.csv", "split,theta_1,x_1\ndiagnostic,0,0\n");
  EXPECT_EQ(run({"--out", d.string(), "diagnose", "--route", "hpd", "--statistic", "builtin:gauss1d", "--diag",
                 (d / "diag.csv").string()})
                .code,
            cli::kDataError);
}

TEST(CliDeterminism, ByteIdenticalOutputs) {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  for (const auto& d : {a, b}) {
    ASSERT_EQ(run({"--seed", "9", "--out", d.string(), "benchmark", "--scenario", "gauss1d", "--train-size", "10",
                   "--calibration-size", "2000", "--diagnostic-size", "500"})
                  .code,
              0);
    ASSERT_EQ(run({"--seed", "9", "--out", d.string(), "calibrate", "--cal", (d / "calibration.csv").string(),
                   "--statistic", "builtin:gauss1d", "--local-fit", "quadratic"})
                  .code,
              0);
    ASSERT_EQ(run({"--out", d.string(), "diagnose", "--model", (d / "critval_model.json").string(), "--diag",
                   (d / "diagnostic.csv").string()})
                  .code,
              0);
  }
  for (const char* f : {"calibration.csv", "rejection_model.json", "critval_model.json", "coverage.csv"})
    EXPECT_EQ(io::read_text(a / f), io::read_text(b / f)) << f;
}

TEST(CliConfig, JsonConfigSetsOptions) {
  const auto d = fresh_dir("config");
  io::write_text(d / "cfg.json", "{\"seed\": 3, \"out\": \"" + d.string() +
                                     "\", \"benchmark\": {\"scenario\": \"gauss1d\", \"train-size\": 10, "
                                     "\"calibration-size\": 321, \"diagnostic-size\": 10}}");
  const auto r = run({"--config", (d / "cfg.json").string(), "benchmark"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_samples_csv(d / "calibration.csv", SplitRole::Calibration).size(), 321u);
  io::write_text(d / "bad.json", "[1, 2]");
  EXPECT_EQ(run({"--config", (d / "bad.json").string(), "benchmark"}).code, cli::kUsageError);
}
