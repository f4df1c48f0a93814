// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shellopt/errors.hpp"
#include "shellopt/nurbs.hpp"
#include "test_support.hpp"

using namespace shellopt;
using namespace testsup;

namespace {

NurbsSurface random_surface(int pu, int pv, int spans_u, int spans_v,
                            double jitter = 0.3) {
  const KnotVector ku = KnotVector::uniform(pu, spans_u);
  const KnotVector kv = KnotVector::uniform(pv, spans_v);
  NurbsSurface flat = NurbsSurface::flat_rectangle(ku, kv, 0, 2, 0, 1);
  MatX P = flat.control_points();
  for (int k = 0; k < P.rows(); ++k)
    for (int c = 0; c < 3; ++c) P(k, c) += jitter * (2 * urand() - 1);
  return NurbsSurface(ku, kv, P, flat.weights());
}

} // namespace

TEST_CASE("clamped endpoint and Bernstein midpoint values") {
  KnotVector kv(2, {0, 0, 0, 1, 1, 1});
  int first = 0;
  MatX d0 = kv.basis_derivatives(0.0, 0, &first);
  CHECK(first == 0);
  CHECK(d0(0, 0) == doctest::Approx(1.0));
  CHECK(d0(0, 1) == doctest::Approx(0.0));
  CHECK(d0(0, 2) == doctest::Approx(0.0));

  MatX dm = kv.basis_derivatives(0.5, 0, &first);
  CHECK(dm(0, 0) == doctest::Approx(0.25));
  CHECK(dm(0, 1) == doctest::Approx(0.5));
  CHECK(dm(0, 2) == doctest::Approx(0.25));
}

TEST_CASE("basis matches independent de Boor recursion on a refined cubic") {
  std::vector<double> knots = {0, 0, 0, 0};
  for (int i = 1; i <= 7; ++i) knots.push_back(i / 8.0);
  for (int i = 0; i < 4; ++i) knots.push_back(1.0);
  KnotVector kv(3, knots);
  for (int trial = 0; trial < 25; ++trial) {
    const double u = urand();
    int first = 0;
    MatX d = kv.basis_derivatives(u, 1, &first);
    const auto all = deboor_all(knots, 3, u);
    double sum = 0.0;
    for (int j = 0; j <= 3; ++j) {
      CHECK(d(0, j) == doctest::Approx(all[first + j]).epsilon(1e-12));
      sum += d(0, j);
      CHECK(d(1, j) ==
            doctest::Approx(deboor_deriv(knots, first + j, 3, u)).epsilon(1e-10));
    }
    CHECK(std::abs(sum - 1.0) < 1e-14);
  }
}

TEST_CASE("partition of unity and derivative sums over random knot vectors") {
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 1 + trial % 4;
    const int spans = 1 + static_cast<int>(urand(0, 5));
    KnotVector kv = KnotVector::uniform(p, spans);
    const double u = urand();
    int first = 0;
    MatX d = kv.basis_derivatives(u, std::min(p, 1), &first);
    CHECK(std::abs(d.row(0).sum() - 1.0) < 1e-13);
    if (p >= 1) CHECK(std::abs(d.row(1).sum()) < 1e-12 * (1 + spans * p));
  }
}

TEST_CASE("second derivatives match finite differences of first derivatives") {
  KnotVector kv = KnotVector::uniform(3, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const double u = urand(0.05, 0.95);
    int first = 0;
    MatX d = kv.basis_derivatives(u, 2, &first);
    const double h = 1e-5;
    int fp = 0, fm = 0;
    MatX dp = kv.basis_derivatives(u + h, 1, &fp);
    MatX dm = kv.basis_derivatives(u - h, 1, &fm);
    if (fp != first || fm != first) continue;  // skip span boundaries
    for (int j = 0; j <= 3; ++j) {
      const double fd = (dp(1, j) - dm(1, j)) / (2 * h);
      if (std::abs(fd) > 1e-6)
        CHECK(rel_err(d(2, j), fd) < 1e-6);
    }
  }
}

TEST_CASE("domain and argument errors") {
  KnotVector kv(2, {0, 0, 0, 1, 1, 1});
  int first = 0;
  CHECK_THROWS_AS(kv.basis_derivatives(1.5, 0, &first), std::domain_error);
  CHECK_THROWS_AS(kv.basis_derivatives(0.5, 3, &first), std::invalid_argument);
  CHECK_THROWS_AS(KnotVector(2, {0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(KnotVector(2, {0, 0, 1, 1}), std::invalid_argument);
}

TEST_CASE("flat patch evaluation is the identity map") {
  NurbsSurface s = NurbsSurface::flat_rectangle(KnotVector::uniform(2, 2),
                                                KnotVector::uniform(3, 1), 0, 1,
                                                0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec2 xi(urand(), urand());
    const SurfacePoint sp = s.evaluate(xi);
    CHECK((sp.X - Vec3(xi[0], xi[1], 0)).norm() < 1e-14);
    CHECK((sp.X1 - Vec3(1, 0, 0)).norm() < 1e-13);
    CHECK((sp.X2 - Vec3(0, 1, 0)).norm() < 1e-13);
  }
}

TEST_CASE("uniform weight scaling leaves the surface unchanged") {
  NurbsSurface s = random_surface(2, 2, 2, 2);
  NurbsSurface s2(s.kv_u(), s.kv_v(), s.control_points(), 2.0 * s.weights());
  for (int trial = 0; trial < 10; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((s.evaluate(xi).X - s2.evaluate(xi).X).norm() < 1e-14);
  }
}

TEST_CASE("exact quarter circle arc") {
  // 90-degree arc as a quadratic NURBS with middle weight sqrt(2)/2,
  // extruded trivially in the second direction.
  KnotVector ku(2, {0, 0, 0, 1, 1, 1});
  KnotVector kv(1, {0, 0, 1, 1});
  MatX P(6, 3);
  P << 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 1;
  VecX w(6);
  const double s2 = std::sqrt(2.0) / 2.0;
  w << 1, 1, s2, s2, 1, 1;
  NurbsSurface arc(ku, kv, P, w);
  for (double u : {0.5, 0.25, 0.7}) {
    const Vec3 X = arc.evaluate(Vec2(u, 0.3)).X;
    CHECK(std::abs(X.head<2>().norm() - 1.0) < 1e-14);
  }
}

TEST_CASE("knot insertion reproduces the multilevel knot vectors") {
  KnotVector dm(2, {0, 0, 0, 1, 1, 1});
  KnotVector oe = dm.elevated(1);
  CHECK(oe.knots() == std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1});
  std::vector<double> ins = {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875};
  KnotVector kr = oe.inserted(ins);
  CHECK(kr.num_basis() == 11);
  CHECK(kr.degree() == 3);
}

TEST_CASE("insertion with empty list returns identity map") {
  NurbsSurface s = random_surface(3, 2, 2, 1);
  MatX M;
  NurbsSurface r = s.insert_knots(0, {}, &M);
  CHECK(M.isIdentity(0.0));
  CHECK((r.control_points() - s.control_points()).norm() == 0.0);
}

TEST_CASE("knot insertion preserves geometry on a random cubic patch") {
  NurbsSurface s = random_surface(3, 3, 2, 2);
  MatX M;
  NurbsSurface r = s.insert_knots(0, {0.37}, &M);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((s.evaluate(xi).X - r.evaluate(xi).X).norm() < 1e-12);
  }
  // rows of the subdivision matrix sum to one
  for (int i = 0; i < M.rows(); ++i)
    CHECK(std::abs(M.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("order elevation of a straight line inserts the midpoint") {
  KnotVector ku(1, {0, 0, 1, 1});
  KnotVector kv(1, {0, 0, 1, 1});
  NurbsSurface line = NurbsSurface::flat_rectangle(ku, kv, 0, 2, 0, 1);
  NurbsSurface e = line.elevate_order(0, 1);
  CHECK(e.n1() == 3);
  CHECK((e.point(1, 0) - Vec3(1, 0, 0)).norm() < 1e-13);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((line.evaluate(xi).X - e.evaluate(xi).X).norm() < 1e-13);
  }
}

TEST_CASE("order elevation preserves geometry on a random quadratic patch") {
  NurbsSurface s = random_surface(2, 2, 2, 3);
  MatX M;
  NurbsSurface e = s.elevate_order(0, 1, &M);
  CHECK(e.kv_u().degree() == 3);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((s.evaluate(xi).X - e.evaluate(xi).X).norm() < 1e-12);
  }
}

TEST_CASE("refinement map applies linearly to perturbed control points") {
  NurbsSurface s = random_surface(2, 2, 1, 1);
  MatX Mu;
  NurbsSurface e = s.elevate_order(0, 1, &Mu);
  RefinementMap rm = make_refinement_map(
      s, e, Mu, MatX::Identity(s.n2(), s.n2()));
  MatX P2 = s.control_points();
  for (int k = 0; k < P2.rows(); ++k)
    for (int c = 0; c < 3; ++c) P2(k, c) += 0.1 * (2 * urand() - 1);
  NurbsSurface s_pert(s.kv_u(), s.kv_v(), P2, s.weights());
  const MatX Pf = rm.apply(P2);
  NurbsSurface e_pert(e.kv_u(), e.kv_v(), Pf, e.weights());
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((s_pert.evaluate(xi).X - e_pert.evaluate(xi).X).norm() < 1e-12);
  }
}

TEST_CASE("multilevel chain: elevate then insert, geometry preserved") {
  // order elevation then knot refinement in both directions
  NurbsSurface dm = random_surface(2, 2, 1, 1, 0.4);
  NurbsSurface oe = dm.elevate_order(0, 1).elevate_order(1, 1);
  std::vector<double> ins = {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875};
  NurbsSurface kr = oe.insert_knots(0, ins).insert_knots(1, ins);
  CHECK(kr.n1() == 11);
  CHECK(kr.n2() == 11);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 xi(urand(), urand());
    CHECK((dm.evaluate(xi).X - kr.evaluate(xi).X).norm() < 1e-12);
  }
}

TEST_CASE("identity volume block evaluates to its argument") {
  BsplineVolume v = BsplineVolume::identity_box(
      KnotVector::uniform(3, 1), KnotVector::uniform(3, 1),
      KnotVector::uniform(1, 1), Vec3(0, 0, 0), Vec3(1, 1, 1));
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 eta(urand(), urand(), urand());
    CHECK((v.evaluate(eta) - eta).norm() < 1e-13);
  }
}

TEST_CASE("volume inversion round trip") {
  BsplineVolume v = BsplineVolume::identity_box(
      KnotVector::uniform(3, 2), KnotVector::uniform(3, 2),
      KnotVector::uniform(1, 1), Vec3(-1, 0, 0), Vec3(1, 2, 1));
  MatX Q = v.control_points();
  for (int k = 0; k < Q.rows(); ++k)
    for (int c = 0; c < 3; ++c) Q(k, c) += 0.05 * (2 * urand() - 1);
  v.set_control_points(Q);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 eta0(urand(0.02, 0.98), urand(0.02, 0.98), urand(0.02, 0.98));
    const Vec3 x = v.evaluate(eta0);
    const Vec3 eta = v.invert(x);
    CHECK((v.evaluate(eta) - x).norm() < 1e-10);
    CHECK((eta - eta0).norm() < 1e-8);
  }
}

TEST_CASE("affinely stretched block inverts exactly") {
  BsplineVolume v = BsplineVolume::identity_box(
      KnotVector::uniform(2, 1), KnotVector::uniform(2, 1),
      KnotVector::uniform(1, 1), Vec3(0, 0, 0), Vec3(2, 1, 1));
  const Vec3 eta = v.invert(Vec3(1, 0.5, 0.5));
  CHECK((eta - Vec3(0.5, 0.5, 0.5)).norm() < 1e-10);
}

TEST_CASE("geometry json round trip is bit exact") {
  NurbsSurface s = random_surface(2, 3, 2, 2);
  const std::string text = surface_to_json_text(s);
  NurbsSurface r = surface_from_json_text(text);
  CHECK((r.control_points() - s.control_points()).norm() == 0.0);
  CHECK((r.weights() - s.weights()).norm() == 0.0);
  CHECK(r.kv_u().knots() == s.kv_u().knots());
}
