// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "shellopt/linalg.hpp"
#include "shellopt/nurbs.hpp"

namespace shellopt {

enum class IntersectionKind { InteriorInterior, InteriorEdge, EdgeEdge };

/// One pinned scalar condition on the stacked coordinate vector: the
/// coordinates are laid out [side A node-major (xi1, xi2); side B ...],
/// so flat_index = side*2m + 2*node + component.
struct PinnedCoordinate {
  int side;       // 0 = A, 1 = B
  int node;
  int component;  // 0 or 1
  double value;   // 0 or 1
};

struct IntersectionTopology {
  IntersectionKind kind = IntersectionKind::InteriorInterior;
  std::vector<PinnedCoordinate> pinned;  // exactly two unless edge-edge
  // T-junction data (interior-edge only): which side rides on its edge
  int tjunction_side = -1;       // 0/1, -1 when not a T-junction
  int tjunction_component = -1;  // parametric component pinned on the edge
  double tjunction_value = 0.0;  // 0 or 1
};

/// Nodes of the topologically 1D quadrature mesh along one intersection:
/// per-node parametric coordinates on both patches.
struct IntersectionMesh {
  int m = 0;
  std::vector<Vec2> xiA, xiB;

  VecX stacked() const;  // [A coords; B coords], length 4m
  void set_stacked(const VecX& x);
};

struct DetectionResult {
  IntersectionMesh mesh;
  IntersectionTopology topology;
};

struct DetectionSettings {
  int samples = 40;       // sampling grid per direction
  double coincide_tol = 1e-7;   // edge-on-surface / edge-on-edge tolerance (x diagonal)
  double parallel_tol = 1e-3;   // grazing detection: |nA x nB| below this
  int min_nodes = 5;
};

/// Locate the intersection curve of two patches by dense sampling, closest
/// point projection, and marching, then classify its topology. Throws
/// NoIntersectionError / DegenerateIntersectionError.
DetectionResult detect_intersection(const NurbsSurface& a, const NurbsSurface& b,
                                    const DetectionSettings& settings = {});

/// Implicit residual of the intersection coordinates: per-node coincidence,
/// equal spacing of the physical segment lengths (side A), and the pinned
/// rows. Length 4m.
VecX intersection_residual(const NurbsSurface& a, const NurbsSurface& b,
                           const IntersectionMesh& mesh,
                           const IntersectionTopology& topo);

/// Jacobian of the residual with respect to the stacked coordinates (4m x 4m).
MatX intersection_jacobian_coords(const NurbsSurface& a, const NurbsSurface& b,
                                  const IntersectionMesh& mesh,
                                  const IntersectionTopology& topo);

/// Jacobian with respect to the stacked control point coordinates of both
/// patches (4m x 3*(nA+nB)); the pin rows are zero.
SpMat intersection_jacobian_points(const NurbsSurface& a, const NurbsSurface& b,
                                   const IntersectionMesh& mesh,
                                   const IntersectionTopology& topo);

struct CoordinateSolveSettings {
  double tol = 1e-10;
  int max_iter = 50;
  double extension = 0.05;  // allowed excursion outside [0,1] (boundary-span
                            // polynomials are extended there)
  int max_line_search = 25;
};

struct CoordinateSolveResult {
  IntersectionMesh mesh;
  int iterations = 0;
  double residual_norm = 0.0;
  // true if any node coordinate converged outside [0,1]: the intersection
  // has migrated past a patch edge and should be reclassified
  bool exited_domain = false;
  int exit_side = -1, exit_component = -1;
  double exit_value = 0.0;  // boundary it crossed (0 or 1)
};

/// Newton with line search on the implicit residual. Throws
/// TrackingLostError on divergence and DegenerateIntersectionError when the
/// coordinate Jacobian is singular (tangential intersection).
CoordinateSolveResult solve_intersection(const NurbsSurface& a,
                                         const NurbsSurface& b,
                                         const IntersectionMesh& initial,
                                         const IntersectionTopology& topo,
                                         const CoordinateSolveSettings& s = {});

/// Nodes selected to carry the T-junction constraint: every basis function
/// of `edge_kv` (the intersecting edge's knot vector in the design space)
/// must support at least one selected node. `edge_params` holds the
/// running-edge parameter of each quadrature node. Throws
/// InfeasibleConstraintError if the edge has more basis functions than
/// nodes.
std::vector<int> select_tjunction_nodes(const KnotVector& edge_kv,
                                        const std::vector<double>& edge_params);

} // namespace shellopt
