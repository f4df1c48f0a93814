// SPDX-License-Identifier: Apache-2.0
//
// Python bindings for the shell shape optimization core: NURBS geometry,
// refinement, the coupled assembly, and the benchmark optimization runs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shellopt/benchmarks.hpp"
#include "shellopt/run_io.hpp"
#include "shellopt/sensitivity.hpp"

namespace py = pybind11;
using namespace shellopt;

namespace {

// Benchmark plus its optimizer driver, kept alive together.
struct PyBenchmark {
  explicit PyBenchmark(const std::string& name, double alpha, int max_iter,
                       int resolution) {
    BenchmarkOverrides ov;
    ov.alpha = alpha;
    ov.max_iter = max_iter;
    ov.resolution = resolution;
    bench = std::make_unique<Benchmark>(make_benchmark(name, ov));
    opt = std::make_unique<ShapeOptimization>(std::move(bench->problem));
  }
  std::unique_ptr<Benchmark> bench;
  std::unique_ptr<ShapeOptimization> opt;
};

} // namespace

PYBIND11_MODULE(_shellopt, m) {
  m.doc() = "shape optimization of penalty-coupled multi-patch shells";

  py::class_<NurbsSurface>(m, "Surface")
      .def_static("from_json", &surface_from_json_text, py::arg("text"))
      .def_static(
          "flat_rectangle",
          [](int degree, int spans_u, int spans_v, double x0, double x1,
             double y0, double y1) {
            return NurbsSurface::flat_rectangle(
                KnotVector::uniform(degree, spans_u),
                KnotVector::uniform(degree, spans_v), x0, x1, y0, y1);
          },
          py::arg("degree"), py::arg("spans_u"), py::arg("spans_v"),
          py::arg("x0"), py::arg("x1"), py::arg("y0"), py::arg("y1"))
      .def("to_json", &surface_to_json_text)
      .def_property_readonly("degrees",
                             [](const NurbsSurface& s) {
                               return std::pair(s.kv_u().degree(),
                                                s.kv_v().degree());
                             })
      .def_property_readonly("knots_u",
                             [](const NurbsSurface& s) { return s.kv_u().knots(); })
      .def_property_readonly("knots_v",
                             [](const NurbsSurface& s) { return s.kv_v().knots(); })
      .def_property_readonly("control_points",
                             [](const NurbsSurface& s) { return s.control_points(); })
      .def_property_readonly("weights",
                             [](const NurbsSurface& s) { return s.weights(); })
      .def(
          "evaluate",
          [](const NurbsSurface& s, double u, double v) {
            return Vec3(s.evaluate(Vec2(u, v), 0).X);
          },
          py::arg("u"), py::arg("v"))
      .def(
          "normal",
          [](const NurbsSurface& s, double u, double v) {
            const SurfacePoint p = s.evaluate(Vec2(u, v), 1);
            return Vec3(p.X1.cross(p.X2).normalized());
          },
          py::arg("u"), py::arg("v"))
      .def(
          "elevated",
          [](const NurbsSurface& s, int direction, int times) {
            return s.elevate_order(direction, times);
          },
          py::arg("direction"), py::arg("times") = 1)
      .def(
          "refined",
          [](const NurbsSurface& s, int direction, const std::vector<double>& knots) {
            return s.insert_knots(direction, knots);
          },
          py::arg("direction"), py::arg("knots"));

  py::class_<IterateRecord>(m, "IterateRecord")
      .def_readonly("iteration", &IterateRecord::iteration)
      .def_readonly("z", &IterateRecord::z)
      .def_readonly("objective", &IterateRecord::objective)
      .def_readonly("normalized", &IterateRecord::normalized)
      .def_readonly("grad_norm", &IterateRecord::grad_norm)
      .def_readonly("violation", &IterateRecord::violation)
      .def_readonly("coord_residual", &IterateRecord::coord_residual);

  py::class_<OptimizationOutcome>(m, "Outcome")
      .def_readonly("converged", &OptimizationOutcome::converged)
      .def_readonly("message", &OptimizationOutcome::message)
      .def_readonly("z", &OptimizationOutcome::z)
      .def_readonly("history", &OptimizationOutcome::history);

  py::class_<PyBenchmark>(m, "Benchmark")
      .def(py::init<const std::string&, double, int, int>(), py::arg("name"),
           py::arg("alpha") = 1000.0, py::arg("max_iter") = 100,
           py::arg("resolution") = -1)
      .def_property_readonly("z0",
                             [](const PyBenchmark& b) { return b.bench->z0; })
      .def_property_readonly(
          "num_vars",
          [](const PyBenchmark& b) { return b.bench->design->num_vars(); })
      .def_property_readonly("energy_reference",
                             [](const PyBenchmark& b) {
                               return b.bench->energy_reference;
                             })
      .def(
          "objective",
          [](PyBenchmark& b, const VecX& z) { return b.opt->evaluate(z, false).f; },
          py::arg("z"))
      .def(
          "objective_gradient",
          [](PyBenchmark& b, const VecX& z) {
            const EvaluateResult ev = b.opt->evaluate(z, true);
            return std::pair(ev.f, VecX(ev.grad));
          },
          py::arg("z"))
      .def("run", [](PyBenchmark& b) { return b.opt->run(b.bench->z0); })
      .def(
          "solve",
          [](PyBenchmark& b, const VecX& z) {
            const EvaluateResult ev = b.opt->evaluate(z, false);
            return std::pair(ev.f, VecX(ev.d));
          },
          py::arg("z"),
          "equilibrium solve at a design point; returns (internal energy, "
          "displacement dofs)")
      .def("intersection_coordinates", [](const PyBenchmark& b, int k) {
        return b.bench->assembly->intersection(k).mesh.stacked();
      });

  m.def(
      "analyze_geometry",
      [](const std::string& geometry_path, const std::string& config_path) {
        AnalyzeSetup setup = analyze_from_files(geometry_path, config_path);
        const VecX d = setup.assembly->newton_solve(VecX());
        py::dict out;
        out["internal_energy"] = setup.assembly->internal_energy(d);
        double umax = 0.0;
        for (int i = 0; i < d.size() / 3; ++i)
          umax = std::max(umax, d.segment<3>(3 * i).norm());
        out["max_displacement"] = umax;
        out["dofs"] = setup.assembly->num_dofs();
        return out;
      },
      py::arg("geometry_path"), py::arg("config_path") = "");
}
