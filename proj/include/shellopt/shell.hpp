// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "shellopt/linalg.hpp"
#include "shellopt/nurbs.hpp"

namespace shellopt {

/// Isotropic St. Venant-Kirchhoff material under plane stress.
struct Material {
  double E = 0.0;   // Young's modulus (Pa)
  double nu = 0.0;  // Poisson ratio

  Material() = default;
  Material(double E_, double nu_);

  double lambda_bar() const { return E * nu / (1.0 - nu * nu); }
  double two_mu() const { return E / (1.0 + nu); }
};

enum class LoadKind { None, DeadPressure, FollowerPressure };

struct LoadSpec {
  LoadKind kind = LoadKind::None;
  double magnitude = 0.0;  // Pa
  Vec3 direction = Vec3::Zero();  // unit vector, dead loads only

  static LoadSpec none() { return {}; }
  static LoadSpec dead_pressure(double magnitude, const Vec3& direction);
  static LoadSpec follower_pressure(double magnitude);
};

enum class Edge { UMin, UMax, VMin, VMax };

struct ShellQuadPoint {
  double weight;  // gauss weight times parametric cell area
  Vec2 xi;
  SurfaceBasis basis;  // rational basis with second derivatives
};

/// One Kirchhoff-Love shell patch: mid-surface geometry, thickness,
/// material, quadrature rule, strong boundary conditions, and load.
/// The basis tables are cached at construction; control point updates
/// during shape optimization do not invalidate them.
class ShellPatch {
 public:
  ShellPatch(NurbsSurface surface, double thickness, Material material,
             LoadSpec load = LoadSpec::none(), int gauss_per_span = 0);

  const NurbsSurface& surface() const { return surface_; }
  NurbsSurface& surface() { return surface_; }
  void set_control_points(const MatX& P) { surface_.set_control_points(P); }

  double thickness() const { return t_; }
  const Material& material() const { return mat_; }
  const LoadSpec& load() const { return load_; }
  void set_load(const LoadSpec& l) { load_ = l; }
  int gauss_per_span() const { return gauss_; }

  int num_points() const { return surface_.num_points(); }
  int num_dofs() const { return 3 * num_points(); }
  const std::vector<ShellQuadPoint>& quadrature() const { return qps_; }

  /// Clamp: fix all components of `rows` control point rows nearest the edge.
  void clamp_edge(Edge e, int rows = 2);
  /// Fix a single displacement component on `rows` rows nearest the edge.
  void fix_edge_component(Edge e, int component, int rows = 1);
  void fix_dof(int local_dof) { fixed_[local_dof] = true; }
  const std::vector<bool>& fixed() const { return fixed_; }

  /// Control point coordinates as a flat vector (dof = 3*point + comp).
  VecX flat_points() const;
  void set_flat_points(const VecX& p);

 private:
  void build_quadrature();
  std::vector<int> edge_rows(Edge e, int rows) const;

  NurbsSurface surface_;
  double t_;
  Material mat_;
  LoadSpec load_;
  int gauss_;
  std::vector<ShellQuadPoint> qps_;
  std::vector<bool> fixed_;
};

/// Mid-surface kinematic quantities at one parametric point.
struct ShellKinematics {
  Vec3 A1, A2, a1, a2;    // covariant bases
  Vec3 A3, a3;            // unit normals
  Mat2 Aab, aab;          // metric coefficients
  Mat2 Bab, bab;          // curvature coefficients
  Mat2 eps, kap;          // membrane strain and curvature change
};

ShellKinematics kinematics_at(const ShellPatch& patch, const Vec2& xi,
                              const VecX& d);

struct PatchRequest {
  bool residual = false;
  bool stiffness = false;
  bool dR_dP = false;
  bool objective = false;  // partials of the internal energy
};

struct PatchResult {
  double internal_energy = 0.0;
  double potential_energy = 0.0;   // internal + dead-load potential
  VecX residual;                   // d(potential)/dd minus follower forces
  std::vector<Triplet> stiffness;  // local (3n x 3n) triplets
  std::vector<Triplet> dR_dP;
  VecX obj_grad_d, obj_grad_P;
};

/// Assemble energy, residual, tangent, and design partials of one patch.
/// Nothing is eliminated here; boundary conditions are applied by the
/// caller (see coupling).
PatchResult assemble_patch(const ShellPatch& patch, const VecX& d,
                           const PatchRequest& req);

double patch_internal_energy(const ShellPatch& patch, const VecX& d);

/// Single-patch residual and tangent with the patch's fixed dofs
/// eliminated (zeroed rows/columns, unit diagonal).
VecX patch_residual(const ShellPatch& patch, const VecX& d);
SpMat patch_stiffness(const ShellPatch& patch, const VecX& d);

/// Newton solve of one uncoupled patch from d = 0.
VecX patch_newton_solve(const ShellPatch& patch, double rtol = 1e-9,
                        double atol = 1e-12, int max_iter = 30);

/// Mid-surface area (by the patch quadrature rule) and its gradient with
/// respect to the flat control point vector.
double patch_area(const ShellPatch& patch, VecX* grad = nullptr);

} // namespace shellopt
