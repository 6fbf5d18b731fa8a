#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "freb/benchmarks.hpp"
#include "freb/calibration.hpp"
#include "freb/confidence.hpp"
#include "freb/diagnostics.hpp"
#include "freb/errors.hpp"
#include "freb/io.hpp"

namespace py = pybind11;
using namespace freb;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Row-major view of a (rows,) or (rows, cols) float64 array.
struct Batch {
  Array data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

Batch batch(const Array& a, const char* name) {
  if (a.ndim() == 1) return {a, static_cast<std::size_t>(a.shape(0)), 1};
  if (a.ndim() == 2) return {a, static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))};
  throw InvalidInput(std::string(name) + " must be 1- or 2-dimensional");
}

std::vector<double> column(const Array& a, std::size_t expected, const char* name) {
  if (a.ndim() != 1 || static_cast<std::size_t>(a.shape(0)) != expected)
    throw InvalidInput(std::string(name) + " must be 1-dimensional with " + std::to_string(expected) +
                       " rows, got shape " + (a.ndim() == 1 ? std::to_string(a.shape(0)) : "of rank " + std::to_string(a.ndim())));
  return {a.data(), a.data() + expected};
}

CalibrationTable make_table(const Array& thetas, const Array& lambdas) {
  const Batch th = batch(thetas, "thetas");
  CalibrationTable t;
  t.theta_dim = th.cols;
  t.thetas.assign(th.data.data(), th.data.data() + th.rows * th.cols);
  t.lambdas = column(lambdas, th.rows, "lambdas");
  t.validate();
  return t;
}

py::array_t<double> vector_to_array(std::vector<double> v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> matrix(std::span<const double> flat, std::size_t cols) {
  const auto rows = static_cast<py::ssize_t>(flat.size() / cols);
  py::array_t<double> out(cols == 1 ? std::vector<py::ssize_t>{rows} : std::vector<py::ssize_t>{rows, static_cast<py::ssize_t>(cols)});
  std::copy(flat.begin(), flat.end(), out.mutable_data());
  return out;
}

// Fitted rejection-probability model with explicit release.
class RejectionHandle {
 public:
  RejectionHandle(RejectionProbabilityModel model, std::size_t augmented_rows)
      : model_(std::move(model)), augmented_rows_(augmented_rows) {}

  const RejectionProbabilityModel& model() const {
    if (!model_) throw std::runtime_error("rejection model handle has been released");
    return *model_;
  }
  bool released() const { return !model_; }
  void release() { model_.reset(); }

  py::dict manifest() const {
    const auto& m = model();
    py::dict d;
    d["calibration_size"] = m.info().calibration_size;
    d["oversampling"] = m.info().oversampling;
    d["augmented_rows"] = augmented_rows_;
    d["seed"] = m.info().seed;
    d["neighbors"] = m.estimator().neighbors();
    d["local_fit"] = std::string(to_string(m.estimator().fit()));
    d["theta_dim"] = m.theta_dim();
    d["warnings"] = m.warnings();
    return d;
  }

  py::array_t<double> pvalue(const Array& thetas, const Array& lambdas) const {
    const auto& m = model();
    const Batch th = batch(thetas, "thetas");
    if (th.cols != m.theta_dim()) throw InvalidInput("thetas have the wrong number of columns");
    const auto lam = column(lambdas, th.rows, "lambdas");
    std::vector<double> out(th.rows);
    {
      py::gil_scoped_release nogil;
      for (std::size_t i = 0; i < th.rows; ++i) out[i] = m.pvalue_from_statistic(th.row(i), lam[i]).value;
    }
    return vector_to_array(std::move(out));
  }

  void save(const std::string& path, const std::string& statistic) const {
    io::save_rejection_model(path, model(), {statistic, {}});
  }

 private:
  std::optional<RejectionProbabilityModel> model_;
  std::size_t augmented_rows_;
};

RejectionHandle fit_rejection(const Array& thetas, const Array& lambdas, std::size_t oversampling,
                              std::size_t neighbors, std::uint64_t seed, const std::string& local_fit) {
  CalibrationTable table = make_table(thetas, lambdas);
  const LocalFit fit = parse_local_fit(local_fit);
  py::gil_scoped_release nogil;
  const AugmentedSet aug = augment_table(std::move(table), oversampling, seed);
  const std::size_t rows = aug.rows.size();
  return RejectionHandle(fit_rejection_model(aug, {neighbors, fit}), rows);
}

TestStatistic builtin_statistic(const std::string& scenario) { return exact_posterior(named_scenario(scenario)); }

py::array_t<double> evaluate(const std::string& scenario, const Array& xs, const Array& thetas) {
  const TestStatistic stat = builtin_statistic(scenario);
  const Batch x = batch(xs, "x"), th = batch(thetas, "thetas");
  if (x.rows != th.rows) throw InvalidInput("x and thetas need equal row counts");
  if (x.cols != stat.obs_dim() || th.cols != stat.theta_dim())
    throw InvalidInput("array widths do not match the " + scenario + " statistic");
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = stat(x.row(i), th.row(i));
  return vector_to_array(std::move(out));
}

py::dict split_dict(const SampleSet& s) {
  py::dict d;
  d["theta"] = matrix(s.thetas(), s.theta_dim());
  d["x"] = matrix(s.observations(), s.obs_dim());
  return d;
}

py::dict sample(const std::string& name, std::uint64_t seed, std::optional<std::size_t> train,
                std::optional<std::size_t> calibration, std::optional<std::size_t> diagnostic) {
  Scenario s = named_scenario(name, seed);
  if (train) s.sizes.train = *train;
  if (calibration) s.sizes.calibration = *calibration;
  if (diagnostic) s.sizes.diagnostic = *diagnostic;
  s.validate();
  const BenchmarkSplits splits = sample_scenario(s);
  py::dict d;
  d["train"] = split_dict(splits.train);
  d["calibration"] = split_dict(splits.calibration);
  d["diagnostic"] = split_dict(splits.diagnostic);
  d["targets"] = split_dict(splits.targets);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Frequentist calibration of posterior-based confidence sets";
  m.attr("FORMAT_VERSION") = io::kFormatVersion;

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_ArithmeticError);

  py::class_<RejectionHandle>(m, "RejectionModel")
      .def("pvalue", &RejectionHandle::pvalue, py::arg("thetas"), py::arg("lambdas"),
           "h(theta0) = F_hat(lambda; theta0) for each row")
      .def("manifest", &RejectionHandle::manifest)
      .def("release", &RejectionHandle::release)
      .def_property_readonly("released", &RejectionHandle::released)
      .def("save", &RejectionHandle::save, py::arg("path"), py::arg("statistic") = "")
      .def_static(
          "load",
          [](const std::string& path) {
            auto model = io::load_rejection_model(path);
            const std::size_t rows = model.info().augmented_rows;
            return RejectionHandle(std::move(model), rows);
          },
          py::arg("path"));

  m.def("fit_rejection", &fit_rejection, py::arg("thetas"), py::arg("lambdas"), py::arg("K") = 10,
        py::arg("k") = 0, py::arg("seed") = 0, py::arg("local_fit") = "constant",
        "Fit the rejection-probability model from calibration thetas and their statistic values");

  py::class_<CriticalValueModel>(m, "CriticalValueModel")
      .def_property_readonly("alpha", &CriticalValueModel::alpha)
      .def("__call__",
           [](const CriticalValueModel& self, const Array& thetas) {
             const Batch th = batch(thetas, "thetas");
             if (th.cols != self.theta_dim()) throw InvalidInput("thetas have the wrong number of columns");
             std::vector<double> out(th.rows);
             for (std::size_t i = 0; i < th.rows; ++i) out[i] = self.at(th.row(i)).value;
             return vector_to_array(std::move(out));
           })
      .def("save", [](const CriticalValueModel& self, const std::string& path,
                      const std::string& statistic) { io::save_critical_value_model(path, self, {statistic, {}}); },
           py::arg("path"), py::arg("statistic") = "")
      .def_static("load", [](const std::string& path) { return io::load_critical_value_model(path); });

  m.def(
      "fit_critical_values",
      [](const Array& thetas, const Array& lambdas, double alpha, std::size_t k, const std::string& local_fit) {
        return fit_quantile_model(make_table(thetas, lambdas), alpha, {k, parse_local_fit(local_fit)});
      },
      py::arg("thetas"), py::arg("lambdas"), py::arg("alpha"), py::arg("k") = 0, py::arg("local_fit") = "constant");

  py::class_<CoverageModel>(m, "CoverageModel")
      .def_property_readonly("neighbors", &CoverageModel::neighbors)
      .def("__call__", [](const CoverageModel& self, const Array& thetas) {
        const Batch th = batch(thetas, "thetas");
        if (th.cols != self.theta_dim()) throw InvalidInput("thetas have the wrong number of columns");
        std::vector<double> est(th.rows), half(th.rows), lo(th.rows), hi(th.rows);
        for (std::size_t i = 0; i < th.rows; ++i) {
          const auto e = self.estimate(th.row(i));
          est[i] = e.estimate;
          half[i] = e.half_width;
          lo[i] = e.lower;
          hi[i] = e.upper;
        }
        py::dict d;
        d["estimate"] = vector_to_array(std::move(est));
        d["half_width"] = vector_to_array(std::move(half));
        d["lower"] = vector_to_array(std::move(lo));
        d["upper"] = vector_to_array(std::move(hi));
        return d;
      });

  m.def(
      "fit_coverage",
      [](const Array& thetas, const std::vector<bool>& covered, std::size_t k, double confidence) {
        const Batch th = batch(thetas, "thetas");
        if (covered.size() != th.rows) throw InvalidInput("covered needs one entry per theta row");
        std::vector<DiagnosticRecord> records;
        records.reserve(th.rows);
        for (std::size_t i = 0; i < th.rows; ++i)
          records.push_back({ParameterPoint(std::vector<double>(th.row(i).begin(), th.row(i).end())), covered[i]});
        return fit_coverage_model(std::move(records), {k, confidence});
      },
      py::arg("thetas"), py::arg("covered"), py::arg("k") = 0, py::arg("confidence") = 0.95);

  m.def("statistic", &evaluate, py::arg("scenario"), py::arg("x"), py::arg("thetas"),
        "Exact posterior density of a built-in scenario at paired rows");
  m.def("sample", &sample, py::arg("scenario"), py::arg("seed") = 0, py::arg("train") = py::none(),
        py::arg("calibration") = py::none(), py::arg("diagnostic") = py::none());

  m.def(
      "oracle_pvalue_1d",
      [](const Array& x, const Array& theta0) {
        const auto xs = column(x, static_cast<std::size_t>(x.size()), "x");
        const auto th = column(theta0, xs.size(), "theta0");
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = oracle_pvalue_1d(xs[i], th[i]);
        return vector_to_array(std::move(out));
      },
      py::arg("x"), py::arg("theta0"));
  m.def("analytic_hpd_coverage_1d", &analytic_hpd_coverage_1d, py::arg("theta"), py::arg("credibility"));

  m.def(
      "pvalue_set",
      [](const RejectionHandle& h, const std::string& scenario, const Array& x, double alpha, double lower,
         double upper, std::size_t count) {
        const ParameterGrid grid = ParameterGrid::uniform(lower, upper, count, h.model().theta_dim());
        const Batch xb = batch(x, "x");
        const ParameterSet set = freb_set_pvalue(h.model(), builtin_statistic(scenario),
                                                 Observation(std::vector<double>(xb.data.data(), xb.data.data() + xb.rows * xb.cols)),
                                                 grid, alpha);
        py::array_t<bool> mask(static_cast<py::ssize_t>(grid.size()));
        std::copy(set.mask().begin(), set.mask().end(), mask.mutable_data());
        return py::make_tuple(mask, set_size(set));
      },
      py::arg("model"), py::arg("scenario"), py::arg("x"), py::arg("alpha") = 0.1, py::arg("lower") = -10.0,
      py::arg("upper") = 10.0, py::arg("count") = 2001,
      "Grid mask of {theta : h > alpha} and its size");
}
