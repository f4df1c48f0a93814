// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shellopt/coupling.hpp"
#include "shellopt/errors.hpp"
#include "test_geoms.hpp"
#include "test_support.hpp"

using namespace shellopt;
using namespace testgeo;
using namespace testsup;

namespace {

const Material kMat(1e7, 0.0);

// two coplanar patches forming the unit plate, split at x = xsplit
NonMatchingAssembly split_plate(double xsplit, int spans_left, int spans_right,
                                int spans_y, double pressure,
                                CouplingConfig cfg = {}) {
  NonMatchingAssembly asmb(cfg);
  ShellPatch left(flange(0, xsplit, 0, 1, spans_left, spans_y), 0.01, kMat,
                  LoadSpec::dead_pressure(pressure, Vec3(0, 0, -1)));
  ShellPatch right(flange(xsplit, 1, 0, 1, spans_right, spans_y), 0.01, kMat,
                   LoadSpec::dead_pressure(pressure, Vec3(0, 0, -1)));
  left.clamp_edge(Edge::UMin, 2);
  left.clamp_edge(Edge::VMin, 2);
  left.clamp_edge(Edge::VMax, 2);
  right.clamp_edge(Edge::UMax, 2);
  right.clamp_edge(Edge::VMin, 2);
  right.clamp_edge(Edge::VMax, 2);
  asmb.add_patch(std::move(left));
  asmb.add_patch(std::move(right));
  asmb.add_intersection(0, 1);
  return asmb;
}

// T-beam: flange plus hanging web with a T-junction
NonMatchingAssembly tbeam(double web_x, int res = 4) {
  NonMatchingAssembly asmb;
  ShellPatch top(flange(-1, 1, 0, 10, res, 2 * res), 0.1, kMat,
                 LoadSpec::dead_pressure(1.0, Vec3(0, 0, -1)));
  ShellPatch w(web(web_x, 0, 10, -2, 0, 2 * res, res), 0.1, kMat);
  top.clamp_edge(Edge::VMax, 2);  // rear end
  w.clamp_edge(Edge::UMax, 2);
  asmb.add_patch(std::move(top));
  asmb.add_patch(std::move(w));
  asmb.add_intersection(0, 1);
  return asmb;
}

} // namespace

TEST_CASE("interpolation operators reproduce surface values and derivatives") {
  const NurbsSurface s = arch(0.3, 0, 10, 4, 4);
  std::vector<Vec2> nodes;
  for (int i = 0; i < 7; ++i) nodes.emplace_back(urand(), urand());
  nodes.front() = Vec2(0, 0);  // patch corner
  const InterpolationOperators ops = build_interpolation(s, nodes);

  VecX P(3 * s.num_points());
  for (int k = 0; k < s.num_points(); ++k)
    for (int c = 0; c < 3; ++c) P[3 * k + c] = s.control_points()(k, c);
  const VecX vals = ops.values * P;
  const VecX ders = ops.derivatives * P;
  const int m = static_cast<int>(nodes.size());
  for (int i = 0; i < m; ++i) {
    const SurfacePoint sp = s.evaluate(nodes[i], 1);
    CHECK((Vec3(vals.segment<3>(3 * i)) - sp.X).norm() < 1e-13);
    CHECK((Vec3(ders.segment<3>(3 * i)) - sp.X1).norm() < 1e-12);
    CHECK((Vec3(ders.segment<3>(3 * m + 3 * i)) - sp.X2).norm() < 1e-12);
  }
  // corner node: a single unit entry at the corner control point
  int nnz = 0;
  for (int c = 0; c < 3; ++c)
    for (SpMat::InnerIterator it(ops.values, 0); it; ++it) {
      (void)it;
      ++nnz;
      break;
    }
  CHECK(ops.values.coeff(0, 0) == doctest::Approx(1.0));
  CHECK(Vec3(vals.segment<3>(0)).isApprox(Vec3(s.control_points().row(0)), 1e-13));
}

TEST_CASE("orthogonal patch frames: conormal of one aligns with the normal of the other") {
  NonMatchingAssembly asmb = tbeam(0.5);
  const VecX d = VecX::Zero(asmb.num_dofs());
  const IntersectionFrames fa = asmb.frames_at(0, 2, 0.3, d, 0);
  const IntersectionFrames fb = asmb.frames_at(0, 2, 0.3, d, 1);
  CHECK(std::abs(std::abs(fa.An.dot(fb.A3)) - 1.0) < 1e-12);
  // zero displacement: deformed frames equal reference frames
  CHECK((fa.a3 - fa.A3).norm() < 1e-14);
  CHECK((fa.an - fa.An).norm() < 1e-14);
  CHECK((fa.at - fa.At).norm() < 1e-14);
}

TEST_CASE("frames match direct surface evaluation at mesh nodes") {
  NonMatchingAssembly asmb = tbeam(0.3);
  const VecX d = random_vec(asmb.num_dofs(), 1e-3);
  const Intersection& ix = asmb.intersection(0);
  const int seg = ix.mesh.m / 2;
  // zeta = 0 evaluates exactly at node `seg`
  const IntersectionFrames fr = asmb.frames_at(0, seg, 0.0, d, 0);
  const NurbsSurface& s = asmb.patch(0).surface();
  const SurfacePoint sp = s.evaluate(ix.mesh.xiA[seg], 1, true);
  CHECK((fr.A1 - sp.X1).norm() < 1e-12);
  CHECK((fr.A2 - sp.X2).norm() < 1e-12);
  CHECK((fr.A3 - Vec3(sp.X1.cross(sp.X2).normalized())).norm() < 1e-12);
  // deformed covariant basis from perturbed control points
  NurbsSurface sd = s;
  MatX Pd = s.control_points();
  for (int k = 0; k < Pd.rows(); ++k)
    for (int c = 0; c < 3; ++c) Pd(k, c) += d[3 * k + c];
  sd.set_control_points(Pd);
  const SurfacePoint spd = sd.evaluate(ix.mesh.xiA[seg], 1, true);
  CHECK((fr.a1 - spd.X1).norm() < 1e-12);
  CHECK((fr.a3 - Vec3(spd.X1.cross(spd.X2).normalized())).norm() < 1e-12);
}

TEST_CASE("penalty energy vanishes at rest and under identical rigid motion") {
  NonMatchingAssembly asmb = tbeam(0.5);
  CHECK(asmb.penalty_energy(VecX::Zero(asmb.num_dofs())) == doctest::Approx(0.0));
  VecX d(asmb.num_dofs());
  for (int k = 0; k < asmb.num_dofs() / 3; ++k) {
    d[3 * k] = 0.21;
    d[3 * k + 1] = -0.43;
    d[3 * k + 2] = 0.1;
  }
  CHECK(asmb.penalty_energy(d) < 1e-10);
}

TEST_CASE("constant normal offset has the closed-form penalty energy") {
  NonMatchingAssembly asmb = split_plate(0.5, 4, 4, 4, 0.0);
  const double delta = 1e-4;
  VecX d = VecX::Zero(asmb.num_dofs());
  const int off = asmb.patch_offset(1);
  for (int k = 0; k < asmb.patch(1).num_points(); ++k)
    d[off + 3 * k + 2] = delta;
  const double ad = asmb.intersection(0).params.alpha_d;
  const double expected = 0.5 * ad * delta * delta * 1.0;  // edge length 1
  CHECK(rel_err(asmb.penalty_energy(d), expected) < 1e-10);
}

TEST_CASE("penalty energy is nonnegative for random displacements") {
  NonMatchingAssembly asmb = tbeam(0.4);
  for (int trial = 0; trial < 10; ++trial)
    CHECK(asmb.penalty_energy(random_vec(asmb.num_dofs(), 1e-3)) >= 0.0);
}

TEST_CASE("penalty residual vanishes at rest and matches finite differences") {
  NonMatchingAssembly asmb = tbeam(0.35);
  // no loads: the zero state is the energy minimum
  asmb.patch(0).set_load(LoadSpec::none());
  NonMatchingAssembly::Request req;
  req.residual = true;
  CHECK(asmb.assemble(VecX::Zero(asmb.num_dofs()), req)
            .residual.lpNorm<Eigen::Infinity>() < 1e-10);

  const VecX d0 = random_vec(asmb.num_dofs(), 1e-4);
  const VecX R = asmb.assemble(d0, req).residual;
  for (int trial = 0; trial < 10; ++trial) {
    int i = static_cast<int>(urand(0, asmb.num_dofs() - 1e-9));
    while (asmb.is_fixed(i)) i = (i + 1) % asmb.num_dofs();
    const double fd = fd_best(
        [&](double s) {
          VecX d = d0;
          d[i] += s;
          return asmb.assemble(d, {}).potential_energy;
        },
        0.0);
    if (std::abs(fd) > 1e-9) CHECK(rel_err(R[i], fd) < 1e-6);
  }
}

TEST_CASE("penalty stiffness cross blocks are exact transposes") {
  NonMatchingAssembly asmb = tbeam(0.45);
  const VecX d = random_vec(asmb.num_dofs(), 1e-3);
  NonMatchingAssembly::Request req;
  req.stiffness = true;
  const SpMat K = asmb.assemble(d, req).stiffness;
  const int nA = asmb.patch(0).num_dofs();
  const int nB = asmb.patch(1).num_dofs();
  const MatX Kd = MatX(K);
  const MatX KAB = Kd.block(0, nA, nA, nB);
  const MatX KBA = Kd.block(nA, 0, nB, nA);
  const double scale = std::max(1.0, KAB.lpNorm<Eigen::Infinity>());
  CHECK((KAB - KBA.transpose()).lpNorm<Eigen::Infinity>() < 1e-13 * scale);
  // dead loads only: the whole tangent is symmetric
  CHECK((Kd - Kd.transpose()).lpNorm<Eigen::Infinity>() < 1e-12 * scale);
}

TEST_CASE("coupled stiffness matches finite differences of the residual") {
  NonMatchingAssembly asmb = tbeam(0.55, 3);
  const VecX d0 = random_vec(asmb.num_dofs(), 1e-4);
  NonMatchingAssembly::Request req;
  req.residual = true;
  req.stiffness = true;
  const auto res = asmb.assemble(d0, req);
  const MatX K = MatX(res.stiffness);
  for (int trial = 0; trial < 8; ++trial) {
    int j = static_cast<int>(urand(0, asmb.num_dofs() - 1e-9));
    while (asmb.is_fixed(j)) j = (j + 1) % asmb.num_dofs();
    const double h = 1e-6;
    VecX dp = d0, dm = d0;
    dp[j] += h;
    dm[j] -= h;
    NonMatchingAssembly::Request rr;
    rr.residual = true;
    const VecX col =
        (asmb.assemble(dp, rr).residual - asmb.assemble(dm, rr).residual) /
        (2 * h);
    CHECK((VecX(K.col(j)) - col).norm() < 1e-5 * std::max(1.0, col.norm()));
  }
}

TEST_CASE("zero load gives the zero solution") {
  NonMatchingAssembly asmb = tbeam(0.5, 3);
  asmb.patch(0).set_load(LoadSpec::none());
  const VecX d = asmb.newton_solve(VecX());
  CHECK(d.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("coupled plate matches the conforming single-patch plate") {
  const double q = 10.0;
  NonMatchingAssembly asmb = split_plate(0.5, 4, 4, 8, q);
  const VecX d = asmb.newton_solve(VecX());

  ShellPatch single(flange(0, 1, 0, 1, 8, 8), 0.01, kMat,
                    LoadSpec::dead_pressure(q, Vec3(0, 0, -1)));
  single.clamp_edge(Edge::UMin, 2);
  single.clamp_edge(Edge::UMax, 2);
  single.clamp_edge(Edge::VMin, 2);
  single.clamp_edge(Edge::VMax, 2);
  const VecX ds = patch_newton_solve(single);

  auto displacement = [](const ShellPatch& p, const VecX& dv, int off,
                         const Vec2& xi) {
    const SurfaceBasis b = p.surface().basis(xi, 0);
    Vec3 u = Vec3::Zero();
    for (int k = 0; k < b.count(); ++k)
      u += b.N[k] * Vec3(dv[off + 3 * b.index(k)], dv[off + 3 * b.index(k) + 1],
                         dv[off + 3 * b.index(k) + 2]);
    return u;
  };

  // max deflection of the reference plate
  double wmax = 0.0;
  for (int i = 1; i < 10; ++i)
    for (int j = 1; j < 10; ++j)
      wmax = std::max(wmax, std::abs(displacement(single, ds, 0,
                                                  Vec2(i / 10.0, j / 10.0))[2]));

  double mismatch = 0.0, seam_jump = 0.0;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const double x = i / 10.0, y = j / 10.0;
      const Vec3 u_single = displacement(single, ds, 0, Vec2(x, y));
      Vec3 u_split;
      if (x <= 0.5)
        u_split = displacement(asmb.patch(0), d, 0, Vec2(x / 0.5, y));
      else
        u_split = displacement(asmb.patch(1), d, asmb.patch_offset(1),
                               Vec2((x - 0.5) / 0.5, y));
      mismatch = std::max(mismatch, (u_split - u_single).norm());
    }
  for (int j = 0; j <= 10; ++j) {
    const Vec3 ua = displacement(asmb.patch(0), d, 0, Vec2(1.0, j / 10.0));
    const Vec3 ub = displacement(asmb.patch(1), d, asmb.patch_offset(1),
                                 Vec2(0.0, j / 10.0));
    seam_jump = std::max(seam_jump, (ua - ub).norm());
  }
  CHECK(mismatch < 1e-3 * wmax);
  CHECK(seam_jump < 1e-3 * wmax);
}

TEST_CASE("coupled plate converges toward the conforming solution under refinement") {
  const double q = 10.0;
  ShellPatch single(flange(0, 1, 0, 1, 12, 12), 0.01, kMat,
                    LoadSpec::dead_pressure(q, Vec3(0, 0, -1)));
  single.clamp_edge(Edge::UMin, 2);
  single.clamp_edge(Edge::UMax, 2);
  single.clamp_edge(Edge::VMin, 2);
  single.clamp_edge(Edge::VMax, 2);
  const VecX ds = patch_newton_solve(single);
  const SurfaceBasis bc = single.surface().basis(Vec2(0.5, 0.5), 0);
  double w_ref = 0.0;
  for (int k = 0; k < bc.count(); ++k) w_ref += bc.N[k] * ds[3 * bc.index(k) + 2];

  std::vector<double> errs;
  for (const int lv : {1, 2, 4}) {
    NonMatchingAssembly asmb = split_plate(0.5, 2 * lv, 2 * lv, 4 * lv, q);
    const VecX d = asmb.newton_solve(VecX());
    const SurfaceBasis b = asmb.patch(0).surface().basis(Vec2(1.0, 0.5), 0);
    double w = 0.0;
    for (int k = 0; k < b.count(); ++k) w += b.N[k] * d[3 * b.index(k) + 2];
    errs.push_back(std::abs(w - w_ref));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

TEST_CASE("T-beam equilibrium keeps displacement continuity across the junction") {
  NonMatchingAssembly asmb = tbeam(0.5, 4);
  asmb.solve_all_coordinates();
  const VecX d = asmb.newton_solve(VecX());
  CHECK(asmb.max_coordinate_residual() < 1e-10);
  const Intersection& ix = asmb.intersection(0);
  double wmax = 0.0;
  for (int i = 0; i < asmb.patch(0).num_points(); ++i)
    wmax = std::max(wmax, std::abs(d[3 * i + 2]));
  for (int i = 0; i < ix.mesh.m; ++i) {
    const SurfaceBasis ba = asmb.patch(0).surface().basis(ix.mesh.xiA[i], 0, true);
    const SurfaceBasis bb = asmb.patch(1).surface().basis(ix.mesh.xiB[i], 0, true);
    Vec3 ua = Vec3::Zero(), ub = Vec3::Zero();
    for (int k = 0; k < ba.count(); ++k)
      for (int c = 0; c < 3; ++c) ua[c] += ba.N[k] * d[3 * ba.index(k) + c];
    const int off = asmb.patch_offset(1);
    for (int k = 0; k < bb.count(); ++k)
      for (int c = 0; c < 3; ++c) ub[c] += bb.N[k] * d[off + 3 * bb.index(k) + c];
    CHECK((ua - ub).norm() < 2e-2 * wmax);  // penalty-tight continuity
  }
}
