// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "shellopt/knots.hpp"
#include "shellopt/linalg.hpp"

namespace shellopt {

/// Values of the rational surface basis and its parametric derivatives at
/// one point, restricted to the (pu+1)*(pv+1) supported control points.
/// `index(k)` maps local entry k to the flat control-point index i*n2+j.
struct SurfaceBasis {
  int first_u = 0, first_v = 0;
  int nu = 0, nv = 0;  // pu+1, pv+1
  int n2 = 0;          // control net columns, for flat indexing
  VecX N;              // values
  VecX N1, N2;         // d/du, d/dv
  VecX N11, N12, N22;  // second derivatives (filled when requested)

  int count() const { return nu * nv; }
  int index(int k) const {
    return (first_u + k / nv) * n2 + (first_v + k % nv);
  }
};

/// Position and parametric derivatives of a surface point.
struct SurfacePoint {
  Vec3 X = Vec3::Zero();
  Vec3 X1 = Vec3::Zero(), X2 = Vec3::Zero();
  Vec3 X11 = Vec3::Zero(), X12 = Vec3::Zero(), X22 = Vec3::Zero();
};

/// Tensor-product NURBS patch. Control points are stored row-major with
/// the first parametric index outermost: flat index i*n2+j.
class NurbsSurface {
 public:
  NurbsSurface() = default;
  NurbsSurface(KnotVector kv_u, KnotVector kv_v, MatX control_points,
               VecX weights);

  /// Flat rectangle [x0,x1]x[y0,y1] at z=0 with the given knot vectors.
  static NurbsSurface flat_rectangle(const KnotVector& kv_u,
                                     const KnotVector& kv_v, double x0,
                                     double x1, double y0, double y1);

  const KnotVector& kv_u() const { return kv_u_; }
  const KnotVector& kv_v() const { return kv_v_; }
  int n1() const { return kv_u_.num_basis(); }
  int n2() const { return kv_v_.num_basis(); }
  int num_points() const { return n1() * n2(); }

  /// n x 3 matrix of control point coordinates (row i*n2+j).
  const MatX& control_points() const { return P_; }
  const VecX& weights() const { return w_; }
  void set_control_points(const MatX& P);
  Vec3 point(int i, int j) const { return P_.row(i * n2() + j); }

  /// Rational basis (and derivatives up to max_deriv in {0,1,2}) at xi.
  /// With extend=true the boundary-span polynomials are evaluated outside
  /// the knot range instead of throwing.
  SurfaceBasis basis(const Vec2& xi, int max_deriv, bool extend = false) const;

  SurfacePoint evaluate(const Vec2& xi, int max_deriv = 2,
                        bool extend = false) const;

  /// Knot insertion in one direction (0 = u, 1 = v). Returns the refined
  /// surface; `map` (optional) receives the subdivision matrix acting on
  /// homogeneous control points, P_new = M * P_old.
  NurbsSurface insert_knots(int direction, const std::vector<double>& new_knots,
                            MatX* map = nullptr) const;

  /// Degree elevation in one direction, geometry preserved exactly.
  NurbsSurface elevate_order(int direction, int times, MatX* map = nullptr) const;

 private:
  NurbsSurface rebased(int direction, const KnotVector& fine, MatX* map) const;

  KnotVector kv_u_, kv_v_;
  MatX P_;  // n x 3
  VecX w_;  // n
};

/// Full-surface linear refinement operator between two NURBS descriptions
/// of the same geometry, acting on homogeneous coordinates.
struct RefinementMap {
  SpMat matrix;        // (n_fine) x (n_coarse), homogeneous convention
  VecX coarse_weights; // weights of the source surface
  VecX fine_weights;   // weights of the target surface

  /// Apply to coarse Cartesian control points (n_coarse x 3).
  MatX apply(const MatX& coarse_points) const;
};

/// Compose per-direction subdivision matrices into a full-surface map and
/// refined surface. Used by insert_knots / elevate_order internally and by
/// the multilevel design chain.
RefinementMap make_refinement_map(const NurbsSurface& coarse,
                                  const NurbsSurface& fine, const MatX& Mu,
                                  const MatX& Mv);

/// Trivariate polynomial B-spline volume for free-form deformation. Control
/// points flat-indexed (i*n2 + j)*n3 + k.
class BsplineVolume {
 public:
  BsplineVolume() = default;
  BsplineVolume(KnotVector u, KnotVector v, KnotVector w, MatX control_points);

  /// Identity block on the box [lo, hi]: control points at the Greville
  /// grid so that evaluate(eta) maps the unit cube affinely onto the box.
  static BsplineVolume identity_box(const KnotVector& u, const KnotVector& v,
                                    const KnotVector& w, const Vec3& lo,
                                    const Vec3& hi);

  const KnotVector& kv(int dir) const { return kv_[dir]; }
  int size(int dir) const { return kv_[dir].num_basis(); }
  int num_points() const { return size(0) * size(1) * size(2); }
  const MatX& control_points() const { return Q_; }
  void set_control_points(const MatX& Q);

  Vec3 evaluate(const Vec3& eta) const;
  Mat3 jacobian(const Vec3& eta) const;

  /// Sparse row of basis values at eta over the supported control points.
  void basis_row(const Vec3& eta, std::vector<std::pair<int, double>>& out) const;

  /// Invert the volume map: find eta with ||evaluate(eta) - x|| < tol.
  /// Damped Newton from a coarse multi-start grid; throws EmbeddingError
  /// if no start converges.
  Vec3 invert(const Vec3& x, double tol = 1e-10) const;

 private:
  std::array<KnotVector, 3> kv_;
  MatX Q_;  // n x 3
};

// --- JSON geometry schema ---
// Surfaces: {"degree":[p1,p2], "knots_u":[...], "knots_v":[...],
//            "control_points":[[x,y,z,w],...]} row-major (u index outer).
// Volumes:  {"degree":[p1,p2,p3], "knots_u":..,"knots_v":..,"knots_w":..,
//            "control_points":[[x,y,z],...]}.
NurbsSurface read_surface_json(const std::string& path);
void write_surface_json(const NurbsSurface& s, const std::string& path);
NurbsSurface surface_from_json_text(const std::string& text);
std::string surface_to_json_text(const NurbsSurface& s);
BsplineVolume read_volume_json(const std::string& path);
void write_volume_json(const BsplineVolume& v, const std::string& path);

} // namespace shellopt
