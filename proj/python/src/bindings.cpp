#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "aquad/adaptive.hpp"
#include "aquad/errors.hpp"
#include "aquad/harness.hpp"
#include "aquad/oracle.hpp"
#include "aquad/targets.hpp"

namespace py = pybind11;
using namespace aquad;

namespace {

nlohmann::json parse(const std::string& text) {
  try {
    return text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad JSON: ") + e.what());
  }
}

std::string run_json(const std::string& config, const std::string& target, int dim) {
  TargetDensity t = make_target(TargetSpec{target, target == "multimodal" ? 10 : dim});
  RunConfig c = run_config_from_json(parse(config), t.dim(), t.support());
  py::gil_scoped_release release;
  return report_json(run(c, t)).dump();
}

std::string experiment_json(const std::string& config) {
  ExperimentConfig c = experiment_from_json(parse(config));
  GridTruth truth = experiment_truth(c);
  ExperimentResult r;
  {
    py::gil_scoped_release release;
    r = run_experiment(c, truth);
  }
  return table_csv(r.table);
}

std::string oracle_json(const std::string& target, int dim, std::size_t resolution) {
  return to_json(grid_truth(make_target(TargetSpec{target, dim}), resolution)).dump();
}

std::map<std::string, std::vector<double>> evidence(int data_planets, int planets, std::vector<double> sigmas,
                                                    std::uint64_t seed, std::size_t presample, std::size_t T) {
  ExoplanetConfig c;
  c.seed = seed;
  c.presample = presample;
  c.T = T;
  EvidenceCurve e;
  {
    py::gil_scoped_release release;
    e = exoplanet_evidence_profile(reference_dataset(data_planets, seed), planets, sigmas, c);
  }
  return {{"sigma", e.sigma}, {"log_z", e.log_z}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive interpolative quadrature";

  py::register_exception<Error>(m, "AquadError", PyExc_RuntimeError);
  py::register_exception<BudgetExhausted>(m, "BudgetExhausted", PyExc_RuntimeError);

  m.def("banana_log_density", [](std::vector<double> x) { return banana_log_density(x, static_cast<int>(x.size())); },
        py::arg("x"));
  m.def("multimodal_log_density", [](std::vector<double> x) {
    if (x.size() != 10) throw InvalidArgument("multimodal target is 10-dimensional");
    return multimodal_log_density(x);
  }, py::arg("x"));
  m.def("solve_kepler", &solve_kepler, py::arg("mean_anomaly"), py::arg("e"));
  m.def("_run", &run_json, py::arg("config"), py::arg("target") = "banana", py::arg("dim") = 2);
  m.def("_experiment", &experiment_json, py::arg("config"));
  m.def("_oracle", &oracle_json, py::arg("target") = "banana", py::arg("dim") = 2, py::arg("resolution") = 2000);
  m.def("exoplanet_evidence", &evidence, py::arg("data_planets"), py::arg("planets"), py::arg("sigmas"),
        py::arg("seed") = 0, py::arg("presample") = 10000, py::arg("T") = 500);
}
