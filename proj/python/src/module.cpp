#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "thr/calibration.hpp"
#include "thr/crossfit.hpp"
#include "thr/dataset.hpp"
#include "thr/error.hpp"
#include "thr/inference.hpp"
#include "thr/report.hpp"
#include "thr/simulation.hpp"

namespace py = pybind11;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

thr::Dataset to_dataset(const DArray& x, const IArray& y, const IArray& a) {
  if (x.ndim() != 2) throw thr::ShapeError("x must be a 2-d array");
  if (y.ndim() != 1 || a.ndim() != 1) throw thr::ShapeError("y and a must be 1-d arrays");
  const auto rows = static_cast<std::size_t>(x.shape(0)), cols = static_cast<std::size_t>(x.shape(1));
  thr::Matrix m(std::vector<double>(x.data(), x.data() + rows * cols), cols);
  return thr::Dataset(std::move(m), std::vector<int>(y.data(), y.data() + y.size()),
                      std::vector<int>(a.data(), a.data() + a.size()));
}

py::object as_python(const thr::Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

thr::ClassifierSpec classifier_spec(const std::string& name, int trees, int min_leaf, std::optional<int> max_depth,
                                    std::optional<std::size_t> knn_k, double ridge) {
  thr::ClassifierSpec s;
  s.kind = thr::parse_classifier_kind(name);
  s.forest.n_trees = trees;
  s.forest.min_leaf = min_leaf;
  s.forest.max_depth = max_depth;
  s.knn_k = knn_k;
  s.ridge = ridge;
  return s;
}

py::tuple dataset_arrays(const thr::Dataset& d) {
  DArray x({d.size(), d.dim()});
  std::copy(d.covariates().values().begin(), d.covariates().values().end(), x.mutable_data());
  IArray y(d.size()), a(d.size());
  std::copy(d.outcomes().begin(), d.outcomes().end(), y.mutable_data());
  std::copy(d.arms().begin(), d.arms().end(), a.mutable_data());
  return py::make_tuple(x, y, a);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Partition-based bounds on the treatment harm rate";

  py::register_exception<thr::Error>(m, "ThrError", PyExc_ValueError);

  m.def(
      "estimate",
      [](const DArray& x, const IArray& y, const IArray& a, const std::string& classifier, const std::string& calibrate,
         std::size_t k, double alpha, std::size_t ci_draws, std::uint64_t seed, unsigned threads, int trees,
         int min_leaf, std::optional<int> max_depth, std::optional<std::size_t> knn_k, double ridge) {
        const auto data = to_dataset(x, y, a);
        thr::CrossfitOptions o;
        o.k = k;
        o.classifier = classifier_spec(classifier, trees, min_leaf, max_depth, knn_k, ridge);
        o.calibration = thr::parse_calibration_method(calibrate);
        o.alpha = alpha;
        o.ci_draws = ci_draws;
        o.seed = seed;
        o.threads = threads;
        thr::CrossfitResult r;
        {
          py::gil_scoped_release release;
          r = thr::crossfit_estimate(data, o);
        }
        return as_python(thr::to_json(r));
      },
      py::arg("x"), py::arg("y"), py::arg("a"), py::arg("classifier") = "forest", py::arg("calibrate") = "none",
      py::arg("k") = 2, py::arg("alpha") = 0.05, py::arg("ci_draws") = 10000, py::arg("seed") = 1,
      py::arg("threads") = 1, py::arg("trees") = 100, py::arg("min_leaf") = 5, py::arg("max_depth") = py::none(),
      py::arg("knn_k") = py::none(), py::arg("ridge") = 1e-4,
      "Cross-fitted bounds; y in {-1,+1}, a in {0,1}. Returns the estimate as a dict.");

  m.def(
      "simulate",
      [](int scenario, std::size_t n, double sigma, std::size_t reps, const std::vector<std::string>& methods,
         std::size_t k, double alpha, std::size_t ci_draws, std::uint64_t seed, unsigned threads,
         std::size_t theta_draws, const std::string& intercept_mode, int trees) {
        thr::MonteCarloConfig c;
        c.scenario = scenario;
        c.n = n;
        c.sigma = sigma;
        c.reps = reps;
        c.methods.clear();
        for (const auto& name : methods) {
          if (name == "naive") c.methods.push_back(thr::MethodSpec::naive());
          else if (name == "oracle") c.methods.push_back(thr::MethodSpec::oracle());
          else c.methods.push_back(thr::MethodSpec::learner(classifier_spec(name, trees, 5, {}, {}, 1e-4)));
        }
        c.k = k;
        c.alpha = alpha;
        c.ci_draws = ci_draws;
        c.seed = seed;
        c.threads = threads;
        c.theta_draws = theta_draws;
        c.scenario_options.mode = thr::parse_intercept_mode(intercept_mode);
        thr::MonteCarloResult r;
        {
          py::gil_scoped_release release;
          r = thr::run_monte_carlo(c);
        }
        return as_python(thr::to_json(r));
      },
      py::arg("scenario") = 1, py::arg("n") = 500, py::arg("sigma") = 1.0, py::arg("reps") = 200,
      py::arg("methods") = std::vector<std::string>{"naive", "oracle"}, py::arg("k") = 2, py::arg("alpha") = 0.05,
      py::arg("ci_draws") = 0, py::arg("seed") = 1, py::arg("threads") = 1, py::arg("theta_draws") = 10000000,
      py::arg("intercept_mode") = "index-only", py::arg("trees") = 100);

  m.def(
      "generate",
      [](int scenario, std::size_t n, double sigma, std::uint64_t seed, const std::string& intercept_mode) {
        thr::ScenarioOptions so;
        so.mode = thr::parse_intercept_mode(intercept_mode);
        const auto s = thr::make_scenario(scenario, sigma, so);
        thr::Rng rng = thr::make_rng(seed, {thr::stream::data});
        const auto sim = thr::generate(s, n, rng);
        const py::tuple xya = dataset_arrays(sim.data);
        IArray y0(static_cast<py::ssize_t>(n)), y1(static_cast<py::ssize_t>(n));
        std::copy(sim.y0.begin(), sim.y0.end(), y0.mutable_data());
        std::copy(sim.y1.begin(), sim.y1.end(), y1.mutable_data());
        return py::dict(py::arg("x") = xya[0], py::arg("y") = xya[1], py::arg("a") = xya[2], py::arg("y0") = y0,
                        py::arg("y1") = y1);
      },
      py::arg("scenario") = 1, py::arg("n") = 500, py::arg("sigma") = 1.0, py::arg("seed") = 1,
      py::arg("intercept_mode") = "index-only",
      "One simulated trial with both potential outcomes. Same stream as `thrbounds generate`.");

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& outcome_col, const std::string& arm_col,
         const std::string& covariate_cols, std::optional<double> favorable_value) {
        thr::CsvSchema schema;
        schema.outcome_col = outcome_col;
        schema.arm_col = arm_col;
        if (!covariate_cols.empty()) schema.covariate_cols = thr::parse_covariate_cols(covariate_cols);
        schema.favorable_value = favorable_value;
        return dataset_arrays(thr::load_csv(path, schema));
      },
      py::arg("path"), py::arg("outcome_col") = "y", py::arg("arm_col") = "a", py::arg("covariate_cols") = "",
      py::arg("favorable_value") = py::none(), "Returns (x, y, a) with y in {-1,+1}.");

  m.def(
      "population",
      [](int scenario, double sigma, std::size_t draws, std::uint64_t seed, const std::string& intercept_mode) {
        thr::ScenarioOptions so;
        so.mode = thr::parse_intercept_mode(intercept_mode);
        const auto s = thr::make_scenario(scenario, sigma, so);
        thr::PopulationSummary p;
        {
          py::gil_scoped_release release;
          p = thr::population_summary(s, draws, seed, 0);
        }
        return as_python(thr::to_json(p));
      },
      py::arg("scenario") = 1, py::arg("sigma") = 1.0, py::arg("draws") = 10000000, py::arg("seed") = 1,
      py::arg("intercept_mode") = "index-only");

  m.def(
      "bounds_from_cells",
      [](const IArray& y, const IArray& a, const std::vector<std::size_t>& cell) {
        const std::size_t n = static_cast<std::size_t>(y.size());
        DArray zeros({n, std::size_t{1}});
        std::fill_n(zeros.mutable_data(), n, 0.0);
        const auto data = to_dataset(zeros, y, a);
        std::size_t j = 0;
        for (auto c : cell) j = std::max(j, c + 1);
        if (j == 0 || j > 4) throw thr::ParameterError("bounds_from_cells: need 1 to 4 cells");
        std::vector<thr::CellLabel> labels(thr::at_pair_cells().begin(), thr::at_pair_cells().begin() + j);
        if (j == 1) labels = {thr::CellLabel::whole()};
        return as_python(thr::to_json(thr::estimate_bounds_merging(thr::cell_stats(data, cell, labels))));
      },
      py::arg("y"), py::arg("a"), py::arg("cell"), "Bounds for a given cell index per row (merging degenerate cells).");

  m.def(
      "isotonic",
      [](const std::vector<double>& scores, const std::vector<int>& labels01) {
        return thr::isotonic_fit_values(scores, labels01);
      },
      py::arg("scores"), py::arg("labels01"));

  m.def(
      "sample_cell_sizes",
      [](std::size_t n, const std::vector<std::size_t>& counts, std::size_t draws, std::uint64_t seed,
         std::optional<std::int64_t> m_total) {
        thr::Rng rng(seed);
        return thr::sample_cell_sizes(n, counts, draws, rng, m_total);
      },
      py::arg("n"), py::arg("counts"), py::arg("draws"), py::arg("seed") = 1, py::arg("m_total") = py::none());
}
