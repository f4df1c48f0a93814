// SPDX-License-Identifier: Apache-2.0
#include "shellopt/run_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace shellopt {

using nlohmann::json;

BenchmarkOverrides overrides_from_config(const std::string& path,
                                         BenchmarkOverrides base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  in >> j;
  if (j.contains("alpha")) base.alpha = j["alpha"].get<double>();
  if (j.contains("max_iter")) base.max_iter = j["max_iter"].get<int>();
  if (j.contains("kkt_tol")) base.kkt_tol = j["kkt_tol"].get<double>();
  if (j.contains("resolution")) base.resolution = j["resolution"].get<int>();
  if (j.contains("rotational_variant"))
    base.rotational_nu_squared = j["rotational_variant"].get<std::string>() == "squared";
  return base;
}

void append_convergence_record(const std::string& path, const IterateRecord& rec) {
  json j;
  j["iteration"] = rec.iteration;
  j["objective"] = rec.objective;
  j["normalized"] = rec.normalized;
  j["grad_norm"] = rec.grad_norm;
  j["max_violation"] = rec.violation;
  j["coord_residual"] = rec.coord_residual;
  j["z"] = std::vector<double>(rec.z.data(), rec.z.data() + rec.z.size());
  std::ofstream out(path, std::ios::app);
  out << j.dump() << "\n";
}

void write_geometry_snapshot(const std::string& dir, int iteration,
                             const NonMatchingAssembly& asmb) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  char name[64];
  for (int p = 0; p < asmb.num_patches(); ++p) {
    std::snprintf(name, sizeof(name), "iter_%03d_patch_%d.json", iteration, p);
    write_surface_json(asmb.patch(p).surface(), (fs::path(dir) / name).string());
  }
}

void write_displacement_vtk(const std::string& path,
                            const NonMatchingAssembly& asmb, const VecX& d,
                            int n) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int pts_per_patch = (n + 1) * (n + 1);
  const int total_pts = pts_per_patch * asmb.num_patches();
  const int cells_per_patch = n * n;
  const int total_cells = cells_per_patch * asmb.num_patches();

  out << "# vtk DataFile Version 3.0\n";
  out << "shell mid-surface displacement\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << total_pts << " double\n";
  std::vector<Vec3> disp;
  disp.reserve(total_pts);
  for (int p = 0; p < asmb.num_patches(); ++p) {
    const NurbsSurface& s = asmb.patch(p).surface();
    const int off = asmb.patch_offset(p);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const Vec2 xi(double(i) / n, double(j) / n);
        const SurfaceBasis b = s.basis(xi, 0);
        Vec3 X = Vec3::Zero(), u = Vec3::Zero();
        for (int k = 0; k < b.count(); ++k) {
          const int idx = b.index(k);
          X += b.N[k] * Vec3(s.control_points().row(idx));
          u += b.N[k] * Vec3(d[off + 3 * idx], d[off + 3 * idx + 1],
                             d[off + 3 * idx + 2]);
        }
        out << X[0] << " " << X[1] << " " << X[2] << "\n";
        disp.push_back(u);
      }
  }
  out << "CELLS " << total_cells << " " << 5 * total_cells << "\n";
  for (int p = 0; p < asmb.num_patches(); ++p) {
    const int base = p * pts_per_patch;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int a = base + i * (n + 1) + j;
        out << "4 " << a << " " << a + (n + 1) << " " << a + (n + 1) + 1 << " "
            << a + 1 << "\n";
      }
  }
  out << "CELL_TYPES " << total_cells << "\n";
  for (int c = 0; c < total_cells; ++c) out << "9\n";
  out << "POINT_DATA " << total_pts << "\nVECTORS displacement double\n";
  for (const Vec3& u : disp) out << u[0] << " " << u[1] << " " << u[2] << "\n";
}

void write_summary(const std::string& path, const OptimizationOutcome& outcome,
                   const std::string& benchmark, double energy_reference) {
  json j;
  j["benchmark"] = benchmark;
  j["converged"] = outcome.converged;
  j["message"] = outcome.message;
  j["iterations"] = outcome.history.empty() ? 0 : outcome.history.back().iteration;
  j["z"] = std::vector<double>(outcome.z.data(), outcome.z.data() + outcome.z.size());
  if (!outcome.history.empty()) {
    j["objective"] = outcome.history.back().objective;
    j["normalized_objective"] = outcome.history.back().normalized;
  }
  j["energy_reference"] = energy_reference;
  std::ofstream out(path);
  out << j.dump(1) << "\n";
}

AnalyzeSetup analyze_from_files(const std::string& geometry_path,
                                const std::string& config_path) {
  json cfg = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    in >> cfg;
  }
  CouplingConfig cc;
  if (cfg.contains("coupling")) {
    const auto& c = cfg["coupling"];
    if (c.contains("alpha")) cc.alpha = c["alpha"].get<double>();
    if (c.contains("gauss_per_segment"))
      cc.gauss_per_segment = c["gauss_per_segment"].get<int>();
    if (c.contains("rotational_variant"))
      cc.rotational_nu_squared = c["rotational_variant"] == "squared";
  }
  AnalyzeSetup setup;
  setup.assembly = std::make_unique<NonMatchingAssembly>(cc);

  auto patch_from = [&](const json& pj, const std::string& geom) {
    NurbsSurface s = read_surface_json(geom);
    const double E = pj.value("material", json::object()).value("E", 1e7);
    const double nu = pj.value("material", json::object()).value("nu", 0.0);
    const double t = pj.value("thickness", 0.1);
    LoadSpec load = LoadSpec::dead_pressure(1.0, Vec3(0, 0, -1));
    if (pj.contains("load")) {
      const auto& lj = pj["load"];
      const std::string kind = lj.value("kind", "dead-pressure");
      if (kind == "none")
        load = LoadSpec::none();
      else if (kind == "follower-pressure")
        load = LoadSpec::follower_pressure(lj.value("magnitude", 1.0));
      else {
        Vec3 dir(0, 0, -1);
        if (lj.contains("direction"))
          for (int c = 0; c < 3; ++c) dir[c] = lj["direction"][c].get<double>();
        load = LoadSpec::dead_pressure(lj.value("magnitude", 1.0), dir.normalized());
      }
    }
    ShellPatch patch(std::move(s), t, Material(E, nu), load);
    const json bcs = pj.value("bc", json::array({{{"edge", "vmin"}, {"rows", 2}}}));
    for (const auto& bc : bcs) {
      const std::string edge = bc.value("edge", "vmin");
      const int rows = bc.value("rows", 2);
      Edge e = Edge::VMin;
      if (edge == "umin") e = Edge::UMin;
      else if (edge == "umax") e = Edge::UMax;
      else if (edge == "vmax") e = Edge::VMax;
      if (bc.contains("components")) {
        for (const auto& comp : bc["components"])
          patch.fix_edge_component(e, comp.get<int>(), rows);
      } else {
        patch.clamp_edge(e, rows);
      }
    }
    return patch;
  };

  if (cfg.contains("patches")) {
    for (const auto& pj : cfg["patches"])
      setup.assembly->add_patch(patch_from(pj, pj.at("geometry").get<std::string>()));
    if (cfg.contains("intersections"))
      for (const auto& pr : cfg["intersections"])
        setup.assembly->add_intersection(pr.at(0).get<int>(), pr.at(1).get<int>());
    setup.assembly->solve_all_coordinates();
  } else {
    setup.assembly->add_patch(patch_from(cfg, geometry_path));
  }
  return setup;
}

} // namespace shellopt
