// SPDX-License-Identifier: Apache-2.0
//
// shellopt: shape optimization of penalty-coupled multi-patch
// Kirchhoff-Love shells with moving patch intersections.

#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "shellopt/run_io.hpp"
#include "shellopt/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace shellopt;

namespace {

int cmd_run(const std::string& benchmark, const std::string& config,
            const std::string& out_dir, double alpha, int max_iter, double tol,
            bool fd_check) {
  BenchmarkOverrides ov;
  ov.alpha = alpha;
  ov.max_iter = max_iter;
  ov.kkt_tol = tol;
  if (!config.empty()) ov = overrides_from_config(config, ov);

  std::cout << "building benchmark '" << benchmark << "'...\n";
  Benchmark b = make_benchmark(benchmark, ov);
  fs::create_directories(out_dir);
  const std::string log_path = (fs::path(out_dir) / "convergence.jsonl").string();
  std::error_code ec;
  fs::remove(log_path, ec);
  const std::string snap_dir = (fs::path(out_dir) / "snapshots").string();

  const double energy_reference = b.problem.energy_reference;
  ShapeOptimization opt(std::move(b.problem));

  if (fd_check) {
    std::cout << "gradient check at the initial design:\n";
    const EvaluateResult ev = opt.evaluate(b.z0, true);
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
      VecX dir(b.z0.size());
      for (int i = 0; i < dir.size(); ++i) dir[i] = dist(gen);
      dir /= dir.norm();
      const double h = 1e-6;
      const double fp = opt.evaluate(b.z0 + h * dir, false).f;
      const double fm = opt.evaluate(b.z0 - h * dir, false).f;
      const double fd = (fp - fm) / (2 * h);
      const double an = ev.grad.dot(dir);
      std::cout << "  direction " << trial << ": adjoint " << an << "  fd " << fd
                << "  rel " << std::abs(an - fd) / std::max(1e-300, std::abs(fd))
                << "\n";
    }
    opt.evaluate(b.z0, false);  // restore the initial state
  }

  opt.on_iterate = [&](const IterateRecord& rec) {
    append_convergence_record(log_path, rec);
    write_geometry_snapshot(snap_dir, rec.iteration, *b.assembly);
    std::cout << "iter " << rec.iteration << "  J = " << rec.objective
              << "  J/ref = " << rec.normalized << "  |grad| = " << rec.grad_norm
              << "  viol = " << rec.violation << "\n";
  };

  const OptimizationOutcome outcome = opt.run(b.z0);
  std::cout << (outcome.converged ? "converged: " : "stopped: ")
            << outcome.message << "\n";
  std::cout << "final design:";
  for (int i = 0; i < outcome.z.size(); ++i) std::cout << " " << outcome.z[i];
  std::cout << "\n";

  // final equilibrium field for viewers
  b.assembly->solve_all_coordinates();
  const VecX d = b.assembly->newton_solve(VecX());
  write_displacement_vtk((fs::path(out_dir) / "final_displacement.vtk").string(),
                         *b.assembly, d);
  write_summary((fs::path(out_dir) / "summary.json").string(), outcome,
                benchmark, energy_reference);
  std::cout << "artifacts written to " << out_dir << "\n";
  return outcome.converged ? 0 : 2;
}

int cmd_analyze(const std::string& geometry, const std::string& config,
                const std::string& out_dir) {
  AnalyzeSetup setup = analyze_from_files(geometry, config);
  const VecX d = setup.assembly->newton_solve(VecX());
  const double wint = setup.assembly->internal_energy(d);
  double umax = 0.0;
  for (int i = 0; i < d.size() / 3; ++i)
    umax = std::max(umax, d.segment<3>(3 * i).norm());
  std::cout << "patches: " << setup.assembly->num_patches()
            << "  dofs: " << setup.assembly->num_dofs() << "\n";
  std::cout << "internal energy: " << wint << " J\n";
  std::cout << "max displacement: " << umax << " m\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_displacement_vtk((fs::path(out_dir) / "displacement.vtk").string(),
                           *setup.assembly, d);
    std::cout << "field written to " << out_dir << "/displacement.vtk\n";
  }
  return 0;
}

int cmd_refine(const std::string& geometry, int elevate,
               const std::string& insert, const std::string& direction,
               const std::string& output) {
  NurbsSurface s = read_surface_json(geometry);
  std::vector<int> dirs;
  if (direction == "u") dirs = {0};
  else if (direction == "v") dirs = {1};
  else dirs = {0, 1};
  for (int dir : dirs)
    if (elevate > 0) s = s.elevate_order(dir, elevate);
  if (!insert.empty()) {
    std::vector<double> knots;
    std::stringstream ss(insert);
    std::string tok;
    while (std::getline(ss, tok, ',')) knots.push_back(std::stod(tok));
    for (int dir : dirs) s = s.insert_knots(dir, knots);
  }
  write_surface_json(s, output);
  std::cout << "wrote " << output << " (" << s.n1() << " x " << s.n2()
            << " control points, degrees " << s.kv_u().degree() << "/"
            << s.kv_v().degree() << ")\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"shape optimization of penalty-coupled multi-patch shells"};
  app.require_subcommand(1);

  std::string benchmark, config, out_dir = "out", geometry, output;
  double alpha = 1000.0, tol = -1.0;
  int max_iter = 100, elevate = 0;
  std::string insert, direction = "both";
  bool fd_check = false;

  auto* run = app.add_subcommand("run", "run a built-in benchmark optimization");
  run->add_option("benchmark", benchmark, "tbeam-flat | tbeam-curved | tube")
      ->required();
  run->add_option("--config", config, "JSON config with overrides");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--alpha", alpha, "penalty coefficient");
  run->add_option("--max-iter", max_iter, "optimizer iteration cap");
  run->add_option("--tol", tol, "optimizer stationarity tolerance");
  run->add_flag("--fd-check", fd_check,
                "compare the adjoint gradient with finite differences first");

  auto* analyze = app.add_subcommand("analyze", "solve one geometry and report");
  analyze->add_option("geometry", geometry, "geometry JSON file")->required();
  analyze->add_option("--config", config, "analysis config JSON");
  analyze->add_option("--out", out_dir, "output directory for the field export");

  auto* refine = app.add_subcommand("refine", "order elevation / knot insertion");
  refine->add_option("geometry", geometry, "geometry JSON file")->required();
  refine->add_option("--elevate", elevate, "degree elevation steps");
  refine->add_option("--insert", insert, "comma-separated knots to insert");
  refine->add_option("--direction", direction, "u, v, or both");
  refine->add_option("-o,--output", output, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(benchmark, config, out_dir, alpha, max_iter, tol, fd_check);
    if (*analyze) return cmd_analyze(geometry, config, out_dir == "out" ? "" : out_dir);
    if (*refine) return cmd_refine(geometry, elevate, insert, direction, output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
