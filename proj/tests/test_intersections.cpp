// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shellopt/errors.hpp"
#include "shellopt/intersections.hpp"
#include "test_geoms.hpp"
#include "test_support.hpp"

using namespace shellopt;
using namespace testgeo;
using namespace testsup;

TEST_CASE("orthogonal patches crossing in the interior") {
  // vertical plane passes through the horizontal one
  const NurbsSurface a = flange(-1, 1, 0, 2, 4, 4);
  const NurbsSurface b = web(0.5, 0, 2, -0.5, 0.5, 4, 4);
  const DetectionResult det = detect_intersection(a, b);
  CHECK(det.topology.kind == IntersectionKind::InteriorInterior);
  CHECK(det.mesh.m >= 5);
  for (int i = 0; i < det.mesh.m; ++i) {
    // straight parametric line u = (0.5+1)/2 = 0.75 on the flange
    CHECK(det.mesh.xiA[i][0] == doctest::Approx(0.75).epsilon(1e-6));
    const Vec3 xa = a.evaluate(det.mesh.xiA[i], 0).X;
    const Vec3 xb = b.evaluate(det.mesh.xiB[i], 0).X;
    CHECK((xa - xb).norm() < 1e-7);
  }
  CHECK(det.topology.pinned.size() == 2);
}

TEST_CASE("T-junction: web edge resting on the flange") {
  const NurbsSurface a = flange(-1, 1, 0, 10, 4, 8);
  const NurbsSurface b = web(0.5, 0, 10, -2, 0, 8, 4);
  const DetectionResult det = detect_intersection(a, b);
  CHECK(det.topology.kind == IntersectionKind::InteriorEdge);
  CHECK(det.topology.tjunction_side == 1);
  CHECK(det.topology.tjunction_component == 1);
  CHECK(det.topology.tjunction_value == doctest::Approx(1.0));
  // host-side pins at the axial ends
  for (const auto& pin : det.topology.pinned) CHECK(pin.side == 0);
  for (int i = 0; i < det.mesh.m; ++i)
    CHECK(det.mesh.xiB[i][1] == doctest::Approx(1.0));
}

TEST_CASE("parallel planes do not intersect") {
  const NurbsSurface a = flange(0, 1, 0, 1, 2, 2);
  NurbsSurface b = flange(0, 1, 0, 1, 2, 2);
  MatX P = b.control_points();
  P.col(2).array() += 0.3;
  b.set_control_points(P);
  CHECK_THROWS_AS(detect_intersection(a, b), NoIntersectionError);
}

TEST_CASE("coincident overlapping planes are flagged as tangential") {
  const NurbsSurface a = flange(0, 1, 0, 1, 2, 2);
  const NurbsSurface b = flange(0.5, 1.5, 0, 1, 2, 2);
  CHECK_THROWS_AS(detect_intersection(a, b), DegenerateIntersectionError);
}

TEST_CASE("implicit residual vanishes at a solved state and flags perturbations") {
  const NurbsSurface a = flange(-1, 1, 0, 2, 4, 4);
  const NurbsSurface b = web(0.3, 0, 2, -0.5, 0.5, 4, 4);
  const DetectionResult det = detect_intersection(a, b);
  const CoordinateSolveResult sol =
      solve_intersection(a, b, det.mesh, det.topology);
  CHECK(sol.residual_norm < 1e-10);

  const VecX R0 = intersection_residual(a, b, sol.mesh, det.topology);
  CHECK(R0.lpNorm<Eigen::Infinity>() < 1e-10);
  // coincidence rows in meters at the solved state
  for (int i = 0; i < 3 * sol.mesh.m; ++i) CHECK(std::abs(R0[i]) < 1e-10);

  // slide one interior node along the intersection (axial direction):
  // coincidence stays, spacing rows move
  IntersectionMesh pert = sol.mesh;
  const int mid = pert.m / 2;
  pert.xiA[mid][1] += 0.01;        // flange axial component
  pert.xiB[mid][0] += 0.01 * 1.0;  // web axial component (same y scale)
  const VecX R1 = intersection_residual(a, b, pert, det.topology);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(R1[3 * mid + c]) < 1e-9);
  double spacing_change = 0.0;
  for (int j = 3 * pert.m; j < 4 * pert.m - 2; ++j)
    spacing_change = std::max(spacing_change, std::abs(R1[j]));
  CHECK(spacing_change > 1e-4);
}

TEST_CASE("already-converged coordinates return immediately") {
  const NurbsSurface a = flange(-1, 1, 0, 2, 4, 4);
  const NurbsSurface b = web(0.5, 0, 2, -0.5, 0.5, 4, 4);
  const DetectionResult det = detect_intersection(a, b);
  const CoordinateSolveResult s1 = solve_intersection(a, b, det.mesh, det.topology);
  const CoordinateSolveResult s2 =
      solve_intersection(a, b, s1.mesh, det.topology);
  CHECK(s2.iterations <= 1);
  CHECK((s2.mesh.stacked() - s1.mesh.stacked()).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("web translation moves host coordinates by the parametric ratio") {
  const NurbsSurface a = flange(-1, 1, 0, 10, 4, 8);
  NurbsSurface b = web(0.5, 0, 10, -2, 0, 8, 4);
  const DetectionResult det = detect_intersection(a, b);
  const CoordinateSolveResult s0 = solve_intersection(a, b, det.mesh, det.topology);

  MatX P = b.control_points();
  P.col(0).array() += 0.1;
  b.set_control_points(P);
  const CoordinateSolveResult s1 = solve_intersection(a, b, s0.mesh, det.topology);
  CHECK(s1.residual_norm < 1e-10);
  for (int i = 0; i < s1.mesh.m; ++i) {
    // flange is 2 m wide: du = dx/2
    CHECK(s1.mesh.xiA[i][0] - s0.mesh.xiA[i][0] ==
          doctest::Approx(0.05).epsilon(1e-8));
    CHECK(std::abs(s1.mesh.xiA[i][1] - s0.mesh.xiA[i][1]) < 1e-9);
    CHECK((s1.mesh.xiB[i] - s0.mesh.xiB[i]).norm() < 1e-9);
  }
}

TEST_CASE("curved host: solved nodes stay on the surface near the web edge") {
  const NurbsSurface a = arch(0.3, 0, 10, 6, 6);
  const double zt = arch_height(0.3, 0.5);
  NurbsSurface b = web(0.5, 0, 10, zt - 2.0, zt, 6, 6);
  const DetectionResult det = detect_intersection(a, b);
  CHECK(det.topology.kind == IntersectionKind::InteriorEdge);

  // push the web slightly sideways: its edge now pokes through the arch
  MatX P = b.control_points();
  P.col(0).array() += 0.02;
  b.set_control_points(P);
  const CoordinateSolveResult sol = solve_intersection(a, b, det.mesh, det.topology);
  CHECK(sol.residual_norm < 1e-10);
  for (int i = 0; i < sol.mesh.m; ++i) {
    const Vec3 xa = a.evaluate(sol.mesh.xiA[i], 0, true).X;
    const Vec3 xb = b.evaluate(sol.mesh.xiB[i], 0, true).X;
    CHECK((xa - xb).norm() < 1e-9);
    // the curve parked slightly below the web top edge
    CHECK(sol.mesh.xiB[i][1] < 1.0 + 1e-12);
    // on the arch surface: z equals the arch height at that x
    CHECK(std::abs(xa[2] - arch_height(0.3, xa[0])) < 1e-9);
  }
}

TEST_CASE("equal spacing and pin preservation at solved states") {
  const NurbsSurface a = arch(0.3, 0, 10, 6, 6);
  const double zt = arch_height(0.3, 0.5);
  const NurbsSurface b = web(0.5, 0, 10, zt - 2.0, zt, 6, 6);
  const DetectionResult det = detect_intersection(a, b);
  const CoordinateSolveResult sol = solve_intersection(a, b, det.mesh, det.topology);

  std::vector<double> lengths;
  for (int i = 0; i + 1 < sol.mesh.m; ++i) {
    const Vec3 x0 = a.evaluate(sol.mesh.xiA[i], 0, true).X;
    const Vec3 x1 = a.evaluate(sol.mesh.xiA[i + 1], 0, true).X;
    lengths.push_back((x1 - x0).norm());
  }
  const double lmin = *std::min_element(lengths.begin(), lengths.end());
  const double lmax = *std::max_element(lengths.begin(), lengths.end());
  CHECK(lmax / lmin - 1.0 < 1e-6);

  const VecX x = sol.mesh.stacked();
  for (const auto& pin : det.topology.pinned) {
    const int flat = pin.side * 2 * sol.mesh.m + 2 * pin.node + pin.component;
    CHECK(x[flat] == doctest::Approx(pin.value));
  }
}

TEST_CASE("T-junction node selection covers every edge basis function") {
  // paper-style illustration: three edge dofs -> three selected nodes
  std::vector<double> params;
  const int m = 11;
  for (int i = 0; i < m; ++i) params.push_back(double(i) / (m - 1));
  CHECK(select_tjunction_nodes(KnotVector(2, {0, 0, 0, 1, 1, 1}), params).size() == 3);
  // cubic single-span edge: four dofs -> four selected nodes
  CHECK(select_tjunction_nodes(KnotVector(3, {0, 0, 0, 0, 1, 1, 1, 1}), params).size() == 4);

  // support-coverage audit over random knot vectors
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 1 + trial % 3;
    const int spans = 1 + static_cast<int>(urand(0, 3));
    const KnotVector kv = KnotVector::uniform(p, spans);
    if (kv.num_basis() > m) continue;
    const auto sel = select_tjunction_nodes(kv, params);
    CHECK(static_cast<int>(sel.size()) == kv.num_basis());
    const auto& t = kv.knots();
    for (int k = 0; k < kv.num_basis(); ++k) {
      bool covered = false;
      for (int idx : sel)
        if (params[idx] >= t[k] - 1e-12 && params[idx] <= t[k + p + 1] + 1e-12)
          covered = true;
      CHECK(covered);
    }
  }

  // more edge dofs than nodes is infeasible
  std::vector<double> few = {0.0, 0.5, 1.0};
  CHECK_THROWS_AS(
      select_tjunction_nodes(KnotVector(3, {0, 0, 0, 0, 1, 1, 1, 1}), few),
      InfeasibleConstraintError);
}

TEST_CASE("coordinate Jacobian matches finite differences") {
  const NurbsSurface a = arch(0.3, 0, 10, 4, 4);
  const double zt = arch_height(0.3, 0.4);
  const NurbsSurface b = web(0.4, 0, 10, zt - 1.5, zt, 4, 4);
  const DetectionResult det = detect_intersection(a, b);
  const CoordinateSolveResult sol = solve_intersection(a, b, det.mesh, det.topology);
  const MatX J = intersection_jacobian_coords(a, b, sol.mesh, det.topology);
  const VecX x0 = sol.mesh.stacked();
  for (int trial = 0; trial < 10; ++trial) {
    const int col = static_cast<int>(urand(0, 4 * sol.mesh.m - 1e-9));
    const double h = 1e-7;
    IntersectionMesh mp = sol.mesh, mm = sol.mesh;
    VecX xp = x0, xm = x0;
    xp[col] += h;
    xm[col] -= h;
    mp.set_stacked(xp);
    mm.set_stacked(xm);
    const VecX fd = (intersection_residual(a, b, mp, det.topology) -
                     intersection_residual(a, b, mm, det.topology)) /
                    (2 * h);
    CHECK((VecX(J.col(col)) - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
  }
}
