// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shellopt/design.hpp"
#include "test_geoms.hpp"
#include "test_support.hpp"

using namespace shellopt;
using namespace testgeo;
using namespace testsup;

namespace {
const Material kMat(1e7, 0.0);
}

TEST_CASE("rigid translation shifts every control point") {
  NonMatchingAssembly asmb;
  asmb.add_patch(ShellPatch(web(0.5, 0, 10, -2, 0, 4, 4), 0.1, kMat));
  DesignSpace ds(&asmb);
  ds.add_map(0, std::make_unique<RigidTranslationMap>(
                    asmb.patch(0).surface().control_points(),
                    std::vector<Vec3>{Vec3(1, 0, 0)}));
  VecX z(1);
  z[0] = 0.3;
  const MatX before = asmb.patch(0).surface().control_points();
  ds.apply(z);
  const MatX after = asmb.patch(0).surface().control_points();
  for (int k = 0; k < after.rows(); ++k) {
    CHECK(after(k, 0) - before(k, 0) == doctest::Approx(0.3));
    CHECK(after(k, 1) == doctest::Approx(before(k, 1)));
    CHECK(after(k, 2) == doctest::Approx(before(k, 2)));
  }
}

TEST_CASE("planar map Jacobian matches finite differences") {
  NonMatchingAssembly asmb;
  asmb.add_patch(ShellPatch(flange(-1, 1, 0, 2, 2, 2), 0.1, kMat));
  DesignSpace ds(&asmb);
  ds.add_map(0, std::make_unique<PlanarMap>(
                    asmb.patch(0).surface().control_points(),
                    std::array<int, 2>{0, 1}, Vec3(0.2, 1.0, 0.0)));
  VecX z(3);
  z << 0.1, -0.2, 0.3;
  ds.apply(z);
  const SpMat J = ds.jacobian(z);
  for (int col = 0; col < 3; ++col) {
    const double h = 1e-7;
    VecX zp = z, zm = z;
    zp[col] += h;
    zm[col] -= h;
    NonMatchingAssembly ap = asmb, am = asmb;
    DesignSpace dp(&ap), dm(&am);
    dp.add_map(0, std::make_unique<PlanarMap>(
                      MatX(flange(-1, 1, 0, 2, 2, 2).control_points()),
                      std::array<int, 2>{0, 1}, Vec3(0.2, 1.0, 0.0)));
    dm.add_map(0, std::make_unique<PlanarMap>(
                      MatX(flange(-1, 1, 0, 2, 2, 2).control_points()),
                      std::array<int, 2>{0, 1}, Vec3(0.2, 1.0, 0.0)));
    dp.apply(zp);
    dm.apply(zm);
    const VecX fd = (ap.flat_points() - am.flat_points()) / (2 * h);
    CHECK((VecX(J.col(col)) - fd).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("web profile map: multilevel chain preserves geometry after updates") {
  // analysis model: cubic x cubic refined web
  const KnotVector axial_dm(1, {0, 0, 1, 1});
  const KnotVector profile_dm(3, {0, 0, 0, 0, 1, 1, 1, 1});
  NurbsSurface target = web(0.5, 0, 10, -1.775, 0.225, 8, 8);
  NonMatchingAssembly asmb;
  asmb.add_patch(ShellPatch(target, 0.1, kMat));
  DesignSpace ds(&asmb);
  auto map = std::make_unique<WebProfileMap>(axial_dm, profile_dm, 0.0, 10.0,
                                             asmb.patch(0).surface());
  const WebProfileMap* mp = map.get();
  ds.add_map(0, std::move(map));
  CHECK(ds.num_vars() == 6);

  VecX z(6);
  z << 0.41, 0.52, 0.47, 0.55, 0.3, -1.7;  // bent profile
  ds.apply(z);
  const NurbsSurface dm = mp->design_model(z);
  const NurbsSurface& am = asmb.patch(0).surface();
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((dm.evaluate(xi).X - am.evaluate(xi).X).norm() < 1e-12);
  }

  // perturbing one coarse variable moves the fine model by the map column
  const SpMat J = ds.jacobian(z);
  VecX z2 = z;
  z2[2] += 0.05;
  NonMatchingAssembly a2 = asmb;
  DesignSpace d2(&a2);
  d2.add_map(0, std::make_unique<WebProfileMap>(axial_dm, profile_dm, 0.0, 10.0,
                                                a2.patch(0).surface()));
  d2.apply(z2);
  const VecX diff = a2.flat_points() - asmb.flat_points();
  CHECK((diff - 0.05 * VecX(J.col(2))).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("identity FFD block reproduces the original control points") {
  const NurbsSurface s = arch(0.3, 0, 2, 3, 3);
  const BsplineVolume block = BsplineVolume::identity_box(
      KnotVector::uniform(3, 2), KnotVector::uniform(3, 2),
      KnotVector::uniform(1, 1), Vec3(-1.2, -0.2, -0.1), Vec3(1.2, 2.2, 0.5));
  const FfdBlock ffd = ffd_build({{0, &s}}, block);
  const MatX back = ffd_apply(ffd, 0, block.control_points());
  CHECK((back - s.control_points()).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("uniform block stretch scales embedded control points") {
  const NurbsSurface s = flange(0.2, 0.8, 0.1, 0.9, 2, 2);
  const BsplineVolume block = BsplineVolume::identity_box(
      KnotVector::uniform(2, 1), KnotVector::uniform(2, 1),
      KnotVector::uniform(1, 1), Vec3(0, 0, -0.5), Vec3(1, 1, 0.5));
  const FfdBlock ffd = ffd_build({{0, &s}}, block);
  MatX Q = block.control_points();
  Q.col(0) *= 1.1;
  const MatX moved = ffd_apply(ffd, 0, Q);
  for (int k = 0; k < moved.rows(); ++k) {
    CHECK(moved(k, 0) == doctest::Approx(1.1 * s.control_points()(k, 0)).epsilon(1e-10));
    CHECK(moved(k, 1) == doctest::Approx(s.control_points()(k, 1)).epsilon(1e-10));
  }
}

TEST_CASE("FFD map moves grouped block points along one coordinate") {
  NonMatchingAssembly asmb;
  asmb.add_patch(ShellPatch(flange(0.1, 0.9, 0.1, 0.9, 2, 2), 0.1, kMat));
  const BsplineVolume block = BsplineVolume::identity_box(
      KnotVector::uniform(2, 1), KnotVector::uniform(2, 1),
      KnotVector::uniform(1, 1), Vec3(0, 0, -0.5), Vec3(1, 1, 0.5));
  auto ffd = std::make_shared<FfdBlock>(
      ffd_build({{0, &asmb.patch(0).surface()}}, block));
  // one variable moving every block point in z: a rigid lift
  std::vector<int> all(block.num_points());
  for (int i = 0; i < block.num_points(); ++i) all[i] = i;
  DesignSpace ds(&asmb);
  ds.add_map(0, std::make_unique<FfdMap>(ffd, 0, 2, std::vector<std::vector<int>>{all}));
  VecX z(1);
  z[0] = 0.25;
  const MatX before = asmb.patch(0).surface().control_points();
  ds.apply(z);
  const MatX after = asmb.patch(0).surface().control_points();
  for (int k = 0; k < after.rows(); ++k)
    CHECK(after(k, 2) - before(k, 2) == doctest::Approx(0.25).epsilon(1e-10));

  // Jacobian matches finite differences
  const SpMat J = ds.jacobian(z);
  CHECK(J.cols() == 1);
  NonMatchingAssembly a2 = asmb;
  DesignSpace d2(&a2);
  d2.add_map(0, std::make_unique<FfdMap>(ffd, 0, 2, std::vector<std::vector<int>>{all}));
  VecX zp(1), zm(1);
  zp[0] = z[0] + 1e-6;
  zm[0] = z[0] - 1e-6;
  d2.apply(zp);
  const VecX Pp = a2.flat_points();
  d2.apply(zm);
  const VecX Pm = a2.flat_points();
  CHECK((VecX(J.col(0)) - (Pp - Pm) / 2e-6).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("flat patch volume is area times thickness, gradient passes FD") {
  NonMatchingAssembly asmb;
  asmb.add_patch(ShellPatch(flange(-1, 1, 0, 10, 4, 4), 0.1, kMat));
  DesignSpace ds(&asmb);
  ds.add_map(0, std::make_unique<RigidTranslationMap>(
                    asmb.patch(0).surface().control_points(),
                    std::vector<Vec3>{Vec3(1, 0, 0)}));
  VecX z = VecX::Zero(1);
  ds.apply(z);
  const SpMat J = ds.jacobian(z);
  VecX grad;
  const double vol = patch_volume(asmb, 0, J, &grad);
  CHECK(vol == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(grad[0]) < 1e-10);  // translation keeps the volume

  // a map that actually changes the area: web with a profile
  NonMatchingAssembly a2;
  a2.add_patch(ShellPatch(web(0.5, 0, 10, -1.775, 0.225, 8, 8), 0.1, kMat));
  DesignSpace d2(&a2);
  d2.add_map(0, std::make_unique<WebProfileMap>(
                    KnotVector(1, {0, 0, 1, 1}),
                    KnotVector(3, {0, 0, 0, 0, 1, 1, 1, 1}), 0.0, 10.0,
                    a2.patch(0).surface()));
  VecX z6(6);
  z6 << 0.45, 0.5, 0.55, 0.5, 0.225, -1.775;
  d2.apply(z6);
  const SpMat J6 = d2.jacobian(z6);
  VecX g6;
  const double v0 = patch_volume(a2, 0, J6, &g6);
  CHECK(v0 > 0.0);
  for (int col = 0; col < 6; ++col) {
    const double fd = fd_best(
        [&](double s) {
          NonMatchingAssembly at = a2;
          DesignSpace dt(&at);
          dt.add_map(0, std::make_unique<WebProfileMap>(
                            KnotVector(1, {0, 0, 1, 1}),
                            KnotVector(3, {0, 0, 0, 0, 1, 1, 1, 1}), 0.0, 10.0,
                            at.patch(0).surface()));
          VecX zt = z6;
          zt[col] += s;
          dt.apply(zt);
          return patch_volume(at, 0, J6, nullptr);
        },
        0.0);
    if (std::abs(fd) > 1e-10) CHECK(rel_err(g6[col], fd) < 1e-6);
  }
}

TEST_CASE("min-distance constraint is linear in the design variables") {
  MinDistanceConstraint c(0, 1, 0.4);
  VecX z(2);
  z << 1.0, 0.3;
  ConstraintState st;
  st.z = &z;
  VecX v;
  MatX g;
  c.eval(st, v, g);
  CHECK(v[0] == doctest::Approx(0.3));
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("T-junction constraint reports edge-coordinate violations with gradients") {
  NonMatchingAssembly asmb;
  ShellPatch top(flange(-1, 1, 0, 10, 4, 4), 0.1, kMat);
  ShellPatch w(web(0.5, 0, 10, -2, 0, 4, 4), 0.1, kMat);
  asmb.add_patch(std::move(top));
  asmb.add_patch(std::move(w));
  asmb.add_intersection(0, 1);
  asmb.solve_all_coordinates();

  DesignSpace ds(&asmb);
  ds.add_map(0, std::make_unique<FixedMap>(asmb.patch(0).surface().control_points()));
  ds.add_map(1, std::make_unique<RigidTranslationMap>(
                    asmb.patch(1).surface().control_points(),
                    std::vector<Vec3>{Vec3(0, 0, 1)}));  // vertical motion
  VecX z = VecX::Zero(1);
  const SpMat J = ds.jacobian(z);

  std::vector<double> params;
  for (int i = 0; i < asmb.intersection(0).mesh.m; ++i)
    params.push_back(asmb.intersection(0).mesh.xiB[i][0]);
  const auto nodes =
      select_tjunction_nodes(KnotVector(1, {0, 0, 1, 1}), params);
  TJunctionConstraint c(0, nodes);
  ConstraintState st;
  st.asmb = &asmb;
  st.z = &z;
  st.dPdz = &J;
  VecX v;
  MatX g;
  c.eval(st, v, g);
  for (int r = 0; r < v.size(); ++r) CHECK(std::abs(v[r]) < 1e-10);
  // raising the web by dz lowers the edge coordinate by dz / height (2 m)
  for (int r = 0; r < v.size(); ++r)
    CHECK(g(r, 0) == doctest::Approx(-0.5).epsilon(1e-6));
}
