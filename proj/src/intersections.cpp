// SPDX-License-Identifier: Apache-2.0
#include "shellopt/intersections.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "shellopt/errors.hpp"

namespace shellopt {

VecX IntersectionMesh::stacked() const {
  VecX x(4 * m);
  for (int i = 0; i < m; ++i) {
    x[2 * i] = xiA[i][0];
    x[2 * i + 1] = xiA[i][1];
    x[2 * m + 2 * i] = xiB[i][0];
    x[2 * m + 2 * i + 1] = xiB[i][1];
  }
  return x;
}

void IntersectionMesh::set_stacked(const VecX& x) {
  for (int i = 0; i < m; ++i) {
    xiA[i] = Vec2(x[2 * i], x[2 * i + 1]);
    xiB[i] = Vec2(x[2 * m + 2 * i], x[2 * m + 2 * i + 1]);
  }
}

namespace {

struct Projection {
  Vec2 uv;
  double dist;
};

// closest-point projection of x onto the surface (Gauss-Newton, clamped)
Projection project_point(const NurbsSurface& s, const Vec3& x, Vec2 init,
                         int iters = 60) {
  Vec2 uv = init;
  for (int it = 0; it < iters; ++it) {
    const SurfacePoint sp = s.evaluate(uv, 1);
    const Vec3 r = sp.X - x;
    Eigen::Matrix<double, 3, 2> J;
    J.col(0) = sp.X1;
    J.col(1) = sp.X2;
    const Mat2 JtJ = J.transpose() * J;
    const Vec2 g = J.transpose() * r;
    const Vec2 step = (JtJ + 1e-14 * Mat2::Identity()).ldlt().solve(-g);
    Vec2 next = uv + step;
    next[0] = std::clamp(next[0], 0.0, 1.0);
    next[1] = std::clamp(next[1], 0.0, 1.0);
    if ((next - uv).norm() < 1e-14) {
      uv = next;
      break;
    }
    uv = next;
  }
  return {uv, (s.evaluate(uv, 0).X - x).norm()};
}

Projection project_point_grid(const NurbsSurface& s, const Vec3& x, int grid = 24) {
  double best = 1e300;
  Vec2 best_uv(0.5, 0.5);
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; j <= grid; ++j) {
      const Vec2 uv(double(i) / grid, double(j) / grid);
      const double d = (s.evaluate(uv, 0).X - x).norm();
      if (d < best) {
        best = d;
        best_uv = uv;
      }
    }
  return project_point(s, x, best_uv);
}

// refine a coincidence pair: min-norm Gauss-Newton on S_A(uvA) - S_B(uvB)
void refine_pair(const NurbsSurface& a, const NurbsSurface& b, Vec2& uvA,
                 Vec2& uvB, double lo, double hi, int iters = 40) {
  for (int it = 0; it < iters; ++it) {
    const SurfacePoint pa = a.evaluate(uvA, 1, true);
    const SurfacePoint pb = b.evaluate(uvB, 1, true);
    const Vec3 F = pa.X - pb.X;
    if (F.norm() < 1e-14) return;
    Eigen::Matrix<double, 3, 4> J;
    J.col(0) = pa.X1;
    J.col(1) = pa.X2;
    J.col(2) = -pb.X1;
    J.col(3) = -pb.X2;
    const Mat3 JJt = J * J.transpose() + 1e-13 * Mat3::Identity();
    const Eigen::Vector4d step = -J.transpose() * JJt.ldlt().solve(F);
    uvA[0] = std::clamp(uvA[0] + step[0], lo, hi);
    uvA[1] = std::clamp(uvA[1] + step[1], lo, hi);
    uvB[0] = std::clamp(uvB[0] + step[2], lo, hi);
    uvB[1] = std::clamp(uvB[1] + step[3], lo, hi);
  }
}

struct EdgeDesc {
  int fixed_comp;  // 0: u fixed, 1: v fixed
  double value;    // 0 or 1
};

constexpr EdgeDesc kEdges[4] = {{0, 0.0}, {0, 1.0}, {1, 0.0}, {1, 1.0}};

Vec2 on_edge(const EdgeDesc& e, double t) {
  return e.fixed_comp == 0 ? Vec2(e.value, t) : Vec2(t, e.value);
}

double surface_scale(const NurbsSurface& s) {
  const Vec3 lo = s.control_points().colwise().minCoeff();
  const Vec3 hi = s.control_points().colwise().maxCoeff();
  return std::max((hi - lo).norm(), 1e-12);
}

// distinct knot cells visited by a parametric polyline
int cells_visited(const NurbsSurface& s, const std::vector<Vec2>& pts) {
  std::set<std::pair<int, int>> cells;
  for (const auto& uv : pts)
    cells.insert({s.kv_u().find_span(std::clamp(uv[0], 0.0, 1.0)),
                  s.kv_v().find_span(std::clamp(uv[1], 0.0, 1.0))});
  return static_cast<int>(cells.size());
}

// equally spaced (by physical arc length on side A) resample of a pair
// polyline; nodes are re-refined after interpolation
IntersectionMesh resample_equal(const NurbsSurface& a, const NurbsSurface& b,
                                const std::vector<Vec2>& pa,
                                const std::vector<Vec2>& pb, int m) {
  const int n = static_cast<int>(pa.size());
  std::vector<double> s(n, 0.0);
  for (int i = 1; i < n; ++i)
    s[i] = s[i - 1] +
           (a.evaluate(pa[i], 0, true).X - a.evaluate(pa[i - 1], 0, true).X).norm();
  IntersectionMesh mesh;
  mesh.m = m;
  mesh.xiA.resize(m);
  mesh.xiB.resize(m);
  for (int k = 0; k < m; ++k) {
    const double target = s.back() * k / (m - 1);
    int seg = 0;
    while (seg + 2 < n && s[seg + 1] < target) ++seg;
    const double w =
        (s[seg + 1] > s[seg]) ? (target - s[seg]) / (s[seg + 1] - s[seg]) : 0.0;
    Vec2 uvA = (1 - w) * pa[seg] + w * pa[seg + 1];
    Vec2 uvB = (1 - w) * pb[seg] + w * pb[seg + 1];
    refine_pair(a, b, uvA, uvB, -0.05, 1.05);
    mesh.xiA[k] = uvA;
    mesh.xiB[k] = uvB;
  }
  return mesh;
}

int default_node_count(const NurbsSurface& a, const NurbsSurface& b,
                       const IntersectionMesh& mesh, int min_nodes) {
  const int crossed =
      std::max(cells_visited(a, mesh.xiA), cells_visited(b, mesh.xiB));
  return std::max(2 * crossed + 1, min_nodes);
}

bool near_boundary(double x, double& value, double tol = 1e-6) {
  if (std::abs(x) < tol) {
    value = 0.0;
    return true;
  }
  if (std::abs(x - 1.0) < tol) {
    value = 1.0;
    return true;
  }
  return false;
}

// the two endpoint pins; the host (non T-junction) side is preferred
std::vector<PinnedCoordinate> choose_pins(const IntersectionMesh& mesh,
                                          int t_side) {
  std::vector<PinnedCoordinate> pins;
  for (int node : {0, mesh.m - 1}) {
    bool found = false;
    for (int pref = 0; pref < 2 && !found; ++pref) {
      for (int s = 0; s < 2 && !found; ++s) {
        if (pref == 0 && s == t_side) continue;  // host side first
        if (pref == 1 && s != t_side) continue;
        const Vec2& uv = (s == 0) ? mesh.xiA[node] : mesh.xiB[node];
        for (int c = 0; c < 2 && !found; ++c) {
          if (s == t_side) continue;
          double value = 0.0;
          if (near_boundary(uv[c], value)) {
            pins.push_back({s, node, c, value});
            found = true;
          }
        }
      }
    }
    if (!found)
      throw DegenerateIntersectionError(
          "detect_intersection: curve endpoint not on any patch boundary");
  }
  return pins;
}

void check_transversal(const NurbsSurface& a, const NurbsSurface& b,
                       const IntersectionMesh& mesh, double parallel_tol) {
  double max_cross = 0.0;
  for (int i = 0; i < mesh.m; ++i) {
    const SurfacePoint pa = a.evaluate(mesh.xiA[i], 1, true);
    const SurfacePoint pb = b.evaluate(mesh.xiB[i], 1, true);
    const Vec3 na = pa.X1.cross(pa.X2).normalized();
    const Vec3 nb = pb.X1.cross(pb.X2).normalized();
    max_cross = std::max(max_cross, na.cross(nb).norm());
  }
  if (max_cross < parallel_tol)
    throw DegenerateIntersectionError(
        "detect_intersection: surfaces are tangential along the candidate curve");
}

} // namespace

DetectionResult detect_intersection(const NurbsSurface& a, const NurbsSurface& b,
                                    const DetectionSettings& st) {
  const double scale = 0.5 * (surface_scale(a) + surface_scale(b));
  const double ctol = st.coincide_tol * scale;
  const int ns = st.samples;

  // 1. edge-edge: an edge curve of A coincides with an edge curve of B
  for (const auto& ea : kEdges) {
    double max_dist = 0.0, max_edge_excess = 0.0;
    std::vector<Vec2> pa, pb;
    for (int i = 0; i <= ns; ++i) {
      const double t = double(i) / ns;
      const Vec2 uvA = on_edge(ea, t);
      const Vec3 x = a.evaluate(uvA, 0).X;
      const Projection pr = project_point_grid(b, x);
      max_dist = std::max(max_dist, pr.dist);
      const double eb =
          std::min({pr.uv[0], 1 - pr.uv[0], pr.uv[1], 1 - pr.uv[1]});
      max_edge_excess = std::max(max_edge_excess, eb);
      pa.push_back(uvA);
      pb.push_back(pr.uv);
      if (max_dist > 10 * ctol) break;
    }
    if (pa.size() == size_t(ns + 1) && max_dist < ctol && max_edge_excess < 1e-4) {
      IntersectionMesh coarse;
      coarse.m = static_cast<int>(pa.size());
      coarse.xiA = pa;
      coarse.xiB = pb;
      const int m = default_node_count(a, b, coarse, st.min_nodes);
      DetectionResult out;
      out.mesh = resample_equal(a, b, pa, pb, m);
      out.topology.kind = IntersectionKind::EdgeEdge;
      return out;
    }
  }

  // 2. interior-edge (T-junction): an edge of one patch lies inside the other
  for (int t_side = 1; t_side >= 0; --t_side) {
    const NurbsSurface& host = (t_side == 1) ? a : b;
    const NurbsSurface& tpatch = (t_side == 1) ? b : a;
    for (int e = 0; e < 4; ++e) {
      const EdgeDesc& ed = kEdges[e];
      double max_dist = 0.0;
      std::vector<Vec2> pt, ph;
      for (int i = 0; i <= ns; ++i) {
        const double t = double(i) / ns;
        const Vec2 uvT = on_edge(ed, t);
        const Vec3 x = tpatch.evaluate(uvT, 0).X;
        const Projection pr = project_point_grid(host, x);
        max_dist = std::max(max_dist, pr.dist);
        pt.push_back(uvT);
        ph.push_back(pr.uv);
        if (max_dist > 10 * ctol) break;
      }
      if (pt.size() != size_t(ns + 1) || max_dist >= ctol) continue;
      const std::vector<Vec2>& pa = (t_side == 1) ? ph : pt;
      const std::vector<Vec2>& pb = (t_side == 1) ? pt : ph;
      IntersectionMesh coarse;
      coarse.m = static_cast<int>(pa.size());
      coarse.xiA = pa;
      coarse.xiB = pb;
      const int m = default_node_count(a, b, coarse, st.min_nodes);
      DetectionResult out;
      out.mesh = resample_equal(a, b, pa, pb, m);
      // snap the T-side coordinate exactly onto its edge
      for (int i = 0; i < m; ++i) {
        Vec2& uv = (t_side == 0) ? out.mesh.xiA[i] : out.mesh.xiB[i];
        uv[ed.fixed_comp] = ed.value;
      }
      out.topology.kind = IntersectionKind::InteriorEdge;
      out.topology.tjunction_side = t_side;
      out.topology.tjunction_component = ed.fixed_comp;
      out.topology.tjunction_value = ed.value;
      out.topology.pinned = choose_pins(out.mesh, t_side);
      check_transversal(a, b, out.mesh, st.parallel_tol);
      return out;
    }
  }

  // 3. interior-interior: zero contour of the signed distance from A's
  // sample grid to B, chained into a polyline
  MatX phi(ns + 1, ns + 1);
  std::vector<std::vector<Vec2>> proj(ns + 1, std::vector<Vec2>(ns + 1));
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j <= ns; ++j) {
      const Vec2 uv(double(i) / ns, double(j) / ns);
      const Vec3 x = a.evaluate(uv, 0).X;
      Projection pr = (i == 0 && j == 0)
                          ? project_point_grid(b, x)
                          : project_point(b, x,
                                          j > 0 ? proj[i][j - 1] : proj[i - 1][j]);
      if (pr.dist > 0.2 * scale) pr = project_point_grid(b, x);
      proj[i][j] = pr.uv;
      const SurfacePoint pb = b.evaluate(pr.uv, 1);
      const Vec3 nb = pb.X1.cross(pb.X2).normalized();
      phi(i, j) = (x - pb.X).dot(nb);
    }

  std::vector<Vec2> crossings;
  auto record = [&](int i0, int j0, int i1, int j1) {
    const double f0 = phi(i0, j0), f1 = phi(i1, j1);
    if (f0 * f1 > 0.0) return;
    if (f0 == f1) return;
    const double w = f0 / (f0 - f1);
    crossings.emplace_back((i0 + w * (i1 - i0)) / ns, (j0 + w * (j1 - j0)) / ns);
  };
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j <= ns; ++j) {
      if (i < ns) record(i, j, i + 1, j);
      if (j < ns) record(i, j, i, j + 1);
    }
  if (crossings.empty())
    throw NoIntersectionError(
        "detect_intersection: no sign change in the distance field");

  // order by nearest-neighbour walks: first walk finds one end of the chain,
  // the second walk from there produces the ordered polyline
  const double link = 3.0 / ns;
  auto walk_from = [&](size_t start) {
    std::vector<bool> used(crossings.size(), false);
    std::vector<size_t> order;
    size_t at = start;
    used[at] = true;
    order.push_back(at);
    while (true) {
      double best = 1e300;
      size_t bi = crossings.size();
      for (size_t k = 0; k < crossings.size(); ++k) {
        if (used[k]) continue;
        const double d = (crossings[k] - crossings[at]).norm();
        if (d < best) {
          best = d;
          bi = k;
        }
      }
      if (bi == crossings.size() || best > link) break;
      used[bi] = true;
      order.push_back(bi);
      at = bi;
    }
    return order;
  };
  auto first_walk = walk_from(0);
  auto order = walk_from(first_walk.back());
  if (order.size() < 2)
    throw NoIntersectionError("detect_intersection: contour too short");

  std::vector<Vec2> pa, pb;
  for (size_t idx : order) {
    Vec2 uvA = crossings[idx];
    const int gi = std::min<int>(ns, int(uvA[0] * ns));
    const int gj = std::min<int>(ns, int(uvA[1] * ns));
    Vec2 uvB = proj[gi][gj];
    refine_pair(a, b, uvA, uvB, 0.0, 1.0);
    pa.push_back(uvA);
    pb.push_back(uvB);
  }
  IntersectionMesh coarse;
  coarse.m = static_cast<int>(pa.size());
  coarse.xiA = pa;
  coarse.xiB = pb;
  const int m = default_node_count(a, b, coarse, st.min_nodes);
  DetectionResult out;
  out.mesh = resample_equal(a, b, pa, pb, m);
  out.topology.kind = IntersectionKind::InteriorInterior;
  out.topology.pinned = choose_pins(out.mesh, -1);
  check_transversal(a, b, out.mesh, st.parallel_tol);
  return out;
}

VecX intersection_residual(const NurbsSurface& a, const NurbsSurface& b,
                           const IntersectionMesh& mesh,
                           const IntersectionTopology& topo) {
  const int m = mesh.m;
  VecX R = VecX::Zero(4 * m);
  std::vector<Vec3> XA(m);
  for (int i = 0; i < m; ++i) {
    XA[i] = a.evaluate(mesh.xiA[i], 0, true).X;
    const Vec3 XB = b.evaluate(mesh.xiB[i], 0, true).X;
    R.segment<3>(3 * i) = XA[i] - XB;
  }
  for (int j = 1; j <= m - 2; ++j) {
    const double Lj = (XA[j + 1] - XA[j]).squaredNorm();
    const double Ljm = (XA[j] - XA[j - 1]).squaredNorm();
    R[3 * m + (j - 1)] = Lj - Ljm;
  }
  if (static_cast<int>(topo.pinned.size()) != 2)
    throw std::invalid_argument("intersection_residual: expected two pinned rows");
  const VecX x = mesh.stacked();
  for (size_t k = 0; k < topo.pinned.size(); ++k) {
    const auto& pin = topo.pinned[k];
    const int flat = pin.side * 2 * m + 2 * pin.node + pin.component;
    R[4 * m - 2 + static_cast<int>(k)] = x[flat] - pin.value;
  }
  return R;
}

MatX intersection_jacobian_coords(const NurbsSurface& a, const NurbsSurface& b,
                                  const IntersectionMesh& mesh,
                                  const IntersectionTopology& topo) {
  const int m = mesh.m;
  MatX J = MatX::Zero(4 * m, 4 * m);
  std::vector<SurfacePoint> pa(m);
  for (int i = 0; i < m; ++i) {
    pa[i] = a.evaluate(mesh.xiA[i], 1, true);
    const SurfacePoint pb = b.evaluate(mesh.xiB[i], 1, true);
    for (int c = 0; c < 3; ++c) {
      J(3 * i + c, 2 * i) = pa[i].X1[c];
      J(3 * i + c, 2 * i + 1) = pa[i].X2[c];
      J(3 * i + c, 2 * m + 2 * i) = -pb.X1[c];
      J(3 * i + c, 2 * m + 2 * i + 1) = -pb.X2[c];
    }
  }
  for (int j = 1; j <= m - 2; ++j) {
    const int row = 3 * m + (j - 1);
    const Vec3 dfwd = pa[j + 1].X - pa[j].X;
    const Vec3 dbwd = pa[j].X - pa[j - 1].X;
    for (int c = 0; c < 2; ++c) {
      const Vec3& tjm = (c == 0) ? pa[j - 1].X1 : pa[j - 1].X2;
      const Vec3& tj = (c == 0) ? pa[j].X1 : pa[j].X2;
      const Vec3& tjp = (c == 0) ? pa[j + 1].X1 : pa[j + 1].X2;
      J(row, 2 * (j - 1) + c) = 2.0 * dbwd.dot(tjm);
      J(row, 2 * j + c) = -2.0 * (dfwd + dbwd).dot(tj);
      J(row, 2 * (j + 1) + c) = 2.0 * dfwd.dot(tjp);
    }
  }
  for (size_t k = 0; k < topo.pinned.size(); ++k) {
    const auto& pin = topo.pinned[k];
    J(4 * m - 2 + static_cast<int>(k),
      pin.side * 2 * m + 2 * pin.node + pin.component) = 1.0;
  }
  return J;
}

SpMat intersection_jacobian_points(const NurbsSurface& a, const NurbsSurface& b,
                                   const IntersectionMesh& mesh,
                                   const IntersectionTopology& topo) {
  (void)topo;
  const int m = mesh.m;
  const int nA = 3 * a.num_points();
  std::vector<Triplet> ts;
  std::vector<SurfaceBasis> ba(m);
  std::vector<Vec3> XA(m);
  for (int i = 0; i < m; ++i) {
    ba[i] = a.basis(mesh.xiA[i], 0, true);
    const SurfaceBasis bb = b.basis(mesh.xiB[i], 0, true);
    XA[i] = Vec3::Zero();
    for (int k = 0; k < ba[i].count(); ++k)
      XA[i] += ba[i].N[k] * Vec3(a.control_points().row(ba[i].index(k)));
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < ba[i].count(); ++k)
        ts.emplace_back(3 * i + c, 3 * ba[i].index(k) + c, ba[i].N[k]);
      for (int k = 0; k < bb.count(); ++k)
        ts.emplace_back(3 * i + c, nA + 3 * bb.index(k) + c, -bb.N[k]);
    }
  }
  for (int j = 1; j <= m - 2; ++j) {
    const int row = 3 * m + (j - 1);
    const Vec3 dfwd = XA[j + 1] - XA[j];
    const Vec3 dbwd = XA[j] - XA[j - 1];
    // 2*dfwd^T (R_{j+1} - R_j) - 2*dbwd^T (R_j - R_{j-1})
    auto add = [&](const SurfaceBasis& bas, const Vec3& v, double sgn) {
      for (int k = 0; k < bas.count(); ++k)
        for (int c = 0; c < 3; ++c)
          ts.emplace_back(row, 3 * bas.index(k) + c, sgn * 2.0 * v[c] * bas.N[k]);
    };
    add(ba[j + 1], dfwd, 1.0);
    add(ba[j], dfwd, -1.0);
    add(ba[j], dbwd, -1.0);
    add(ba[j - 1], dbwd, 1.0);
  }
  return from_triplets(4 * m, 3 * (a.num_points() + b.num_points()), ts);
}

CoordinateSolveResult solve_intersection(const NurbsSurface& a,
                                         const NurbsSurface& b,
                                         const IntersectionMesh& initial,
                                         const IntersectionTopology& topo,
                                         const CoordinateSolveSettings& s) {
  if (topo.kind == IntersectionKind::EdgeEdge) {
    CoordinateSolveResult out;
    out.mesh = initial;  // all coordinates frozen
    return out;
  }
  IntersectionMesh mesh = initial;
  const double lo = -s.extension, hi = 1.0 + s.extension;
  auto clamp_mesh = [&](IntersectionMesh& mm) {
    for (int i = 0; i < mm.m; ++i)
      for (int c = 0; c < 2; ++c) {
        mm.xiA[i][c] = std::clamp(mm.xiA[i][c], lo, hi);
        mm.xiB[i][c] = std::clamp(mm.xiB[i][c], lo, hi);
      }
  };
  clamp_mesh(mesh);

  VecX R = intersection_residual(a, b, mesh, topo);
  double rn = R.lpNorm<Eigen::Infinity>();
  for (int it = 0; it <= s.max_iter; ++it) {
    if (rn < s.tol) {
      CoordinateSolveResult out;
      out.mesh = mesh;
      out.iterations = it;
      out.residual_norm = rn;
      const VecX x = mesh.stacked();
      double worst = 1e-9;
      for (int i = 0; i < x.size(); ++i) {
        const double over = std::max(x[i] - 1.0, -x[i]);
        if (over > worst) {
          worst = over;
          out.exited_domain = true;
          out.exit_side = (i < 2 * mesh.m) ? 0 : 1;
          out.exit_component = i % 2;
          out.exit_value = (x[i] > 1.0) ? 1.0 : 0.0;
        }
      }
      return out;
    }
    if (it == s.max_iter) break;
    const MatX J = intersection_jacobian_coords(a, b, mesh, topo);
    Eigen::FullPivLU<MatX> lu(J);
    lu.setThreshold(1e-11);
    if (lu.rank() < J.rows())
      throw DegenerateIntersectionError(
          "solve_intersection: singular coordinate Jacobian (tangential intersection)");
    const VecX step = lu.solve(-R);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < s.max_line_search; ++ls) {
      IntersectionMesh trial = mesh;
      trial.set_stacked(trial.stacked() + alpha * step);
      clamp_mesh(trial);
      const VecX Rt = intersection_residual(a, b, trial, topo);
      const double rt = Rt.lpNorm<Eigen::Infinity>();
      if (rt < rn || rt < s.tol) {
        mesh = trial;
        R = Rt;
        rn = rt;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved)
      throw TrackingLostError("solve_intersection: line search stalled at |R|=" +
                              std::to_string(rn));
  }
  throw TrackingLostError("solve_intersection: no convergence, |R|=" +
                          std::to_string(rn));
}

std::vector<int> select_tjunction_nodes(const KnotVector& edge_kv,
                                        const std::vector<double>& edge_params) {
  const int nb = edge_kv.num_basis();
  const int m = static_cast<int>(edge_params.size());
  if (nb > m)
    throw InfeasibleConstraintError(
        "select_tjunction_nodes: more edge basis functions than quadrature nodes");
  const auto grev = edge_kv.greville();
  const auto& t = edge_kv.knots();
  std::vector<int> selected;
  std::vector<bool> used(m, false);
  for (int k = 0; k < nb; ++k) {
    const double supp_lo = t[k], supp_hi = t[k + edge_kv.degree() + 1];
    int best = -1;
    double best_d = 1e300;
    for (int i = 0; i < m; ++i) {
      if (used[i]) continue;
      if (edge_params[i] < supp_lo - 1e-12 || edge_params[i] > supp_hi + 1e-12)
        continue;
      const double d = std::abs(edge_params[i] - grev[k]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best < 0)
      throw InfeasibleConstraintError(
          "select_tjunction_nodes: a basis support contains no unused node");
    used[best] = true;
    selected.push_back(best);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

} // namespace shellopt
