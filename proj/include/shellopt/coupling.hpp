// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "shellopt/intersections.hpp"
#include "shellopt/shell.hpp"

namespace shellopt {

/// Displacement and rotation penalties derived from the shared material
/// data and the averaged element size h of the coupled pair.
struct PenaltyParams {
  double alpha = 1000.0;
  double alpha_d = 0.0;
  double alpha_r = 0.0;

  /// alpha_d = a E t / (h (1-nu^2)); alpha_r = a E t^3 / (12 h (1-nu^3)).
  /// The cubic denominator follows the published formula; set
  /// nu_squared_variant to use (1-nu^2) in the rotational term instead.
  static PenaltyParams from_properties(double alpha, double E, double nu,
                                       double t, double h,
                                       bool nu_squared_variant = false);
};

struct CouplingConfig {
  double alpha = 1000.0;
  int gauss_per_segment = 2;
  bool rotational_nu_squared = false;  // use (1-nu^2) in alpha_r
  CoordinateSolveSettings coord_solve;
  // out-of-domain migration that freezes an intersection; kept just under
  // the solve extension so moderate overshoots stay tracked and reversible
  double freeze_excursion = 0.045;
  double newton_rtol = 1e-9;
  double newton_atol = 1e-12;
  int newton_max_iter = 30;
  int load_steps = 1;
};

/// One coupled intersection between two patches of the assembly.
struct Intersection {
  int patch_a = -1, patch_b = -1;
  IntersectionMesh mesh;
  IntersectionTopology topology;
  PenaltyParams params;
  bool frozen = false;  // edge-edge from the start, or migrated to an edge
  double last_residual_norm = 0.0;
};

/// Interpolation operators of one patch at a list of parametric nodes:
/// values (3m x 3n) and stacked first derivatives (6m x 3n, direction-major).
struct InterpolationOperators {
  SpMat values;
  SpMat derivatives;
};

InterpolationOperators build_interpolation(const NurbsSurface& s,
                                           const std::vector<Vec2>& nodes,
                                           bool extend = false);

/// Frames of one intersection side at a point of the quadrature mesh.
struct IntersectionFrames {
  Vec3 a1, a2, a3, at, an;  // deformed
  Vec3 A1, A2, A3, At, An;  // reference
};

/// Collection of shell patches coupled through penalty terms on shared
/// intersections, with the global dof map and block assembly.
class NonMatchingAssembly {
 public:
  explicit NonMatchingAssembly(CouplingConfig cfg = {});

  int add_patch(ShellPatch patch);
  int add_intersection(int patch_a, int patch_b);  // runs detection
  int add_intersection(int patch_a, int patch_b, DetectionResult det);

  int num_patches() const { return static_cast<int>(patches_.size()); }
  int num_intersections() const { return static_cast<int>(intersections_.size()); }
  ShellPatch& patch(int i) { return patches_[i]; }
  const ShellPatch& patch(int i) const { return patches_[i]; }
  Intersection& intersection(int k) { return intersections_[k]; }
  const Intersection& intersection(int k) const { return intersections_[k]; }
  const CouplingConfig& config() const { return cfg_; }

  int patch_offset(int i) const { return offsets_[i]; }
  int num_dofs() const { return total_dofs_; }
  bool is_fixed(int global_dof) const;

  /// Concatenated control point coordinates of all patches.
  VecX flat_points() const;
  void set_flat_points(const VecX& P);

  /// Re-solve the coordinates of every active intersection (warm start from
  /// the stored meshes). Intersections whose coordinates migrate past a
  /// patch edge are snapped and frozen. Throws TrackingLostError upward.
  void solve_all_coordinates();

  /// Residual norm of the implicit system at the stored coordinates,
  /// maximised over active intersections.
  double max_coordinate_residual() const;

  /// Rebuild the cached basis tables of one intersection after its mesh
  /// was assigned directly (solve_all_coordinates refreshes them itself).
  void refresh_intersection(int k) { rebuild_node_tables(k); }

  /// Reclassify converged interior intersections whose non-pinned
  /// coordinates all sit within `tol` of a patch boundary: they have
  /// migrated onto an edge and are snapped and frozen. Returns the number
  /// of intersections reclassified.
  int reclassify_edge_intersections(double tol = 1e-3);

  struct Request {
    bool residual = false;
    bool stiffness = false;
    bool dR_dP = false;
    bool objective = false;
    bool dR_dxi = false;
  };
  struct Result {
    double internal_energy = 0.0;
    double penalty_energy = 0.0;
    double potential_energy = 0.0;  // shells + dead loads + penalty
    VecX residual;
    SpMat stiffness;
    SpMat dR_dP;
    VecX obj_grad_d, obj_grad_P;
    std::vector<MatX> dR_dxi;  // per intersection: num_dofs x 4m
  };
  Result assemble(const VecX& d, const Request& req) const;

  double internal_energy(const VecX& d) const;
  double penalty_energy(const VecX& d) const;

  /// Newton solve of the coupled equilibrium from d0 (usually zero).
  VecX newton_solve(const VecX& d0) const;

  IntersectionFrames frames_at(int intersection, int segment, double zeta,
                               const VecX& d, int side) const;

 private:
  struct NodeTable {
    SurfaceBasis basis;  // with second derivatives, extended evaluation
    Vec3 d, d1, d2, d11, d12, d22;
    Vec3 p, p1, p2, p11, p12, p22;
  };
  void rebuild_node_tables(int k) const;
  void fill_node_values(int k, const VecX& dvec) const;
  double average_span_diagonal(int ia, int ib) const;

  CouplingConfig cfg_;
  std::vector<ShellPatch> patches_;
  std::vector<Intersection> intersections_;
  std::vector<int> offsets_;
  int total_dofs_ = 0;
  // per intersection: 2*m tables (node-major, side A then side B)
  mutable std::vector<std::vector<NodeTable>> tables_;
};

} // namespace shellopt
