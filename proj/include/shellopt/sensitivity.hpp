// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "shellopt/coupling.hpp"

namespace shellopt {

/// Factorized coordinate Jacobian of one intersection together with the
/// control point Jacobian, providing the directional and adjoint products
/// of the implicit coordinate sensitivity without forming the inverse.
class CoordsSensitivityOp {
 public:
  CoordsSensitivityOp(const NonMatchingAssembly& asmb, int k);

  /// Directional sensitivity: d(xi) for a control point direction dP
  /// (global layout), i.e. -J^-1 (dRL/dP) dP.
  VecX apply(const VecX& dP) const;

  /// Adjoint product: -(dRL/dP)^T J^-T w for a coordinate covector w.
  VecX apply_transpose(const VecX& w) const;

  const MatX& coords_jacobian() const { return J_; }
  const SpMat& points_jacobian() const { return dRL_dP_; }  // global columns

 private:
  MatX J_;
  Eigen::PartialPivLU<MatX> lu_;
  SpMat dRL_dP_;
};

struct SensitivityWorkspace {
  NonMatchingAssembly::Result res;  // residual/stiffness/dR_dP/dR_dxi/objective
  std::vector<std::unique_ptr<CoordsSensitivityOp>> coords;  // null when frozen
  VecX adjoint;  // lambda solving K^T lambda = -df/dd
  VecX total;    // d f / dP, global control point layout
};

/// Jacobian of one intersection's implicit residual with respect to the
/// global control point vector (columns mapped through the patch offsets).
SpMat coordinate_points_jacobian_global(const NonMatchingAssembly& asmb, int k);

/// Assemble everything and run the adjoint chain: one transposed solve of
/// the coupled tangent plus one small transposed solve per intersection.
/// `d` must solve the coupled equilibrium at the current geometry and
/// intersection coordinates.
SensitivityWorkspace total_design_derivative(const NonMatchingAssembly& asmb,
                                             const VecX& d);

/// Direct-mode derivative along explicit control point directions (one
/// coupled solve per direction). Retained to cross-check the adjoint.
VecX direct_design_derivative(const NonMatchingAssembly& asmb, const VecX& d,
                              const std::vector<VecX>& directions);

/// Gradient of one intersection coordinate (flat index into the stacked
/// coordinate vector) with respect to the global control points. Zero for
/// frozen intersections.
VecX coordinate_gradient(const NonMatchingAssembly& asmb, int k, int flat_coord);

} // namespace shellopt
