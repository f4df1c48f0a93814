// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "shellopt/nurbs.hpp"

namespace testgeo {

using namespace shellopt;

// flat horizontal patch: u -> x, v -> y, z = 0
inline NurbsSurface flange(double x0, double x1, double y0, double y1,
                           int spans_u = 4, int spans_v = 4, int p = 3) {
  return NurbsSurface::flat_rectangle(KnotVector::uniform(p, spans_u),
                                      KnotVector::uniform(p, spans_v), x0, x1,
                                      y0, y1);
}

// vertical plane x = xw: u -> axial y, v -> vertical z
inline NurbsSurface web(double xw, double y0, double y1, double zb, double zt,
                        int spans_u = 4, int spans_v = 4, int p = 3) {
  const KnotVector ku = KnotVector::uniform(p, spans_u);
  const KnotVector kv = KnotVector::uniform(p, spans_v);
  const auto gu = ku.greville(), gv = kv.greville();
  MatX P(ku.num_basis() * kv.num_basis(), 3);
  for (int i = 0; i < ku.num_basis(); ++i)
    for (int j = 0; j < kv.num_basis(); ++j)
      P.row(i * kv.num_basis() + j) =
          Vec3(xw, y0 + (y1 - y0) * gu[i], zb + (zt - zb) * gv[j]);
  return NurbsSurface(ku, kv, P, VecX::Ones(P.rows()));
}

// parabolic arch z = h*(1 - x^2), x in [-1, 1], extruded along y:
// u -> x (quadratic), v -> y (linear), then refined
inline NurbsSurface arch(double h, double y0, double y1, int spans_u = 4,
                         int spans_v = 4) {
  KnotVector ku(2, {0, 0, 0, 1, 1, 1});
  KnotVector kv(1, {0, 0, 1, 1});
  MatX P(6, 3);
  P << -1, y0, 0, -1, y1, 0, 0, y0, 2 * h, 0, y1, 2 * h, 1, y0, 0, 1, y1, 0;
  NurbsSurface s(ku, kv, P, VecX::Ones(6));
  NurbsSurface c = s.elevate_order(0, 1).elevate_order(1, 2);
  std::vector<double> ins;
  for (int i = 1; i < spans_u; ++i) ins.push_back(double(i) / spans_u);
  c = c.insert_knots(0, ins);
  ins.clear();
  for (int i = 1; i < spans_v; ++i) ins.push_back(double(i) / spans_v);
  return c.insert_knots(1, ins);
}

inline double arch_height(double h, double x) { return h * (1.0 - x * x); }

} // namespace testgeo
