// Python bindings. Structured results cross the boundary as JSON documents
// so they match the CLI output field for field.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "finsler/report.hpp"
#include "finsler/suites.hpp"

namespace py = pybind11;
using namespace finsler;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::handle& obj) {
  return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

MetricInstance metric_from(const py::object& source) {
  if (py::isinstance<py::str>(source)) return build_metric(load_metric_spec(source.cast<std::string>()));
  return build_metric(metric_spec_from_json(from_py(source)));
}

TransportMode mode_from(const std::string& s) {
  if (s == "supported") return TransportMode::Supported;
  if (s == "transported") return TransportMode::Transported;
  if (s == "curve-velocity") return TransportMode::CurveVelocity;
  throw Error(ErrorCode::BadConfig, "unknown transport mode '" + s + "'");
}

std::vector<PointState> sampled(const MetricInstance& m, int count, std::uint64_t seed) {
  std::vector<PointState> out;
  for (auto& s : sample_points(m, count, seed)) out.push_back(PointState{std::move(s.x), std::move(s.y)});
  return out;
}

Json suite_json(const SuiteResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"check", row.check}, {"point", row.point}, {"residual", number(row.residual)},
                    {"tolerance", row.tolerance}, {"pass", row.pass}, {"note", row.note}});
  }
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) params[k] = number(v);
  return {{"suite", r.suite}, {"pass", r.pass}, {"parameters", params}, {"rows", rows}};
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Numerical Finsler curvature engine";
  mod.attr("__version__") = kToolVersion;

  py::exception<Error>(mod, "FinslerError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = py::module_::import("finsler._core").attr("FinslerError");
      py::object exc = type(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<MetricInstance>(mod, "Metric")
      .def(py::init(&metric_from), py::arg("spec"), "Build from a spec dict or a spec file path.")
      .def_property_readonly("dimension", &MetricInstance::dimension)
      .def_property_readonly("spec", [](const MetricInstance& m) { return to_py(to_json(m.spec())); })
      .def(
          "F",
          [](const MetricInstance& m, const std::vector<double>& x, const std::vector<double>& y) {
            m.require_in_chart(x);
            return m.value(x, y);
          },
          py::arg("x"), py::arg("y"))
      .def(
          "sample_points",
          [](const MetricInstance& m, int count, std::uint64_t seed) {
            std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
            for (const auto& s : sample_points(m, count, seed)) out.emplace_back(s.x, s.y);
            return out;
          },
          py::arg("count"), py::arg("seed") = 1)
      .def(
          "validate",
          [](const MetricInstance& m, int samples, std::uint64_t seed, double tol) {
            return to_py(to_json(validate(m, samples, seed, tol)));
          },
          py::arg("samples") = 10, py::arg("seed") = 1, py::arg("tol") = 1e-10);

  mod.def(
      "curvature",
      [](const MetricInstance& m, const std::vector<double>& x, const std::vector<double>& y, bool full) {
        return to_py(to_json(compute_bundle(m, PointState{x, y}), full));
      },
      py::arg("metric"), py::arg("x"), py::arg("y"), py::arg("full") = false);

  mod.def(
      "flag_curvature",
      [](const MetricInstance& m, const std::vector<double>& x, const std::vector<double>& y,
         const std::vector<double>& u) { return flag_curvature(m, PointState{x, y}, u); },
      py::arg("metric"), py::arg("x"), py::arg("y"), py::arg("u"));

  mod.def(
      "fit_relative_stretch",
      [](const MetricInstance& m, int samples, std::uint64_t seed) {
        return to_py(to_json(fit_relative_stretch(m, sampled(m, samples, seed))));
      },
      py::arg("metric"), py::arg("samples") = 10, py::arg("seed") = 1);

  mod.def(
      "semi_c_fit",
      [](const MetricInstance& m, const std::vector<double>& x, const std::vector<double>& y) {
        return to_py(to_json(fit_semi_c_reducible(m, PointState{x, y})));
      },
      py::arg("metric"), py::arg("x"), py::arg("y"));

  mod.def(
      "berwald_frame",
      [](const MetricInstance& m, const std::vector<double>& x, const std::vector<double>& y) {
        return to_py(to_json(berwald_frame(m, PointState{x, y})));
      },
      py::arg("metric"), py::arg("x"), py::arg("y"));

  mod.def(
      "classify",
      [](const MetricInstance& m, int samples, std::uint64_t seed) {
        return to_py(to_json(classify(m, samples, seed)));
      },
      py::arg("metric"), py::arg("samples") = 10, py::arg("seed") = 1);

  mod.def(
      "geodesic",
      [](const MetricInstance& m, const std::vector<double>& x0, const std::vector<double>& y0, double t,
         int samples, bool unit_speed) {
        IntegratorOptions opts;
        opts.samples = samples;
        const GeodesicSolution g = integrate_geodesic(m, x0, y0, t, opts, unit_speed);
        Json j = summary_json(g);
        j["times"] = g.times;
        j["x"] = g.x;
        j["v"] = g.v;
        return to_py(j);
      },
      py::arg("metric"), py::arg("x0"), py::arg("y0"), py::arg("t"), py::arg("samples") = 20,
      py::arg("unit_speed") = false);

  mod.def(
      "parallelogram",
      [](const MetricInstance& m, const std::vector<double>& x0, const std::vector<double>& u,
         const std::vector<double>& v, const std::vector<double>& w0, const std::vector<double>& eps,
         const std::string& mode) { return to_py(to_json(parallelogram_holonomy(m, x0, u, v, w0, eps, mode_from(mode)))); },
      py::arg("metric"), py::arg("x0"), py::arg("u"), py::arg("v"), py::arg("w0"), py::arg("eps"),
      py::arg("mode") = "supported");

  mod.def("suite_names", &suite_names);
  mod.def(
      "run_suite",
      [](const MetricInstance& m, const std::string& name, int samples, std::uint64_t seed) {
        SuiteOptions opts;
        opts.samples = samples;
        opts.seed = seed;
        return to_py(suite_json(run_suite(m, name, opts)));
      },
      py::arg("metric"), py::arg("suite"), py::arg("samples") = 10, py::arg("seed") = 1);
}
