// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "shellopt/coupling.hpp"
#include "shellopt/nurbs.hpp"
#include "shellopt/sensitivity.hpp"

namespace shellopt {

/// Map from a slice of the design vector to the control point coordinates
/// of one patch (analysis model). Jacobians are exact; most maps are linear.
class PatchDesignMap {
 public:
  virtual ~PatchDesignMap() = default;
  virtual int num_vars() const = 0;
  /// n x 3 control point coordinates for the local design variables z.
  virtual MatX apply(const VecX& z) const = 0;
  /// Triplets of d(flat coords)/dz with patch-local rows, local columns.
  virtual void jacobian(const VecX& z, std::vector<Triplet>& out) const = 0;
};

/// Patch that does not change during optimization.
class FixedMap : public PatchDesignMap {
 public:
  explicit FixedMap(MatX base) : base_(std::move(base)) {}
  int num_vars() const override { return 0; }
  MatX apply(const VecX&) const override { return base_; }
  void jacobian(const VecX&, std::vector<Triplet>&) const override {}

 private:
  MatX base_;
};

/// Rigid translation along fixed axes: P = P0 + sum_i z_i * axis_i.
class RigidTranslationMap : public PatchDesignMap {
 public:
  RigidTranslationMap(MatX base, std::vector<Vec3> axes)
      : base_(std::move(base)), axes_(std::move(axes)) {}
  int num_vars() const override { return static_cast<int>(axes_.size()); }
  MatX apply(const VecX& z) const override;
  void jacobian(const VecX& z, std::vector<Triplet>& out) const override;

 private:
  MatX base_;
  std::vector<Vec3> axes_;
};

/// Planar motion: translation in a coordinate plane plus rotation about the
/// plane normal through a reference point. Variables: (t1, t2, theta).
class PlanarMap : public PatchDesignMap {
 public:
  /// plane_axes: the two in-plane coordinate indices (e.g. {0, 1} for x-y).
  PlanarMap(MatX base, std::array<int, 2> plane_axes, Vec3 pivot)
      : base_(std::move(base)), ax_(plane_axes), pivot_(pivot) {}
  int num_vars() const override { return 3; }
  MatX apply(const VecX& z) const override;
  void jacobian(const VecX& z, std::vector<Triplet>& out) const override;

 private:
  MatX base_;
  std::array<int, 2> ax_;
  Vec3 pivot_;
};

/// Straight-extruded web controlled by a profile curve: the profile's
/// horizontal position is a B-spline in the profile parameter (one design
/// variable per profile control point), its vertical extent is linear
/// between two end variables. Variables: [x_1..x_np, z_top, z_bottom].
/// The design-model grid is mapped to the analysis model by a fixed
/// subdivision chain.
class WebProfileMap : public PatchDesignMap {
 public:
  WebProfileMap(KnotVector axial_kv, KnotVector profile_kv, double y0, double y1,
                const NurbsSurface& analysis_target);
  int num_vars() const override { return profile_n_ + 2; }
  MatX apply(const VecX& z) const override;
  void jacobian(const VecX& z, std::vector<Triplet>& out) const override;
  /// Geometry of the design model itself (for preservation tests).
  NurbsSurface design_model(const VecX& z) const;

 private:
  MatX design_grid(const VecX& z) const;
  KnotVector axial_kv_, profile_kv_;
  double y0_, y1_;
  int profile_n_ = 0;
  SpMat chain_;  // analysis points = chain * design points (weights all 1)
  KnotVector target_u_, target_v_;
};

/// Free-form deformation block with the embedded parametric coordinates of
/// every driven patch and the sparse extraction operators.
struct FfdBlock {
  BsplineVolume volume;
  std::vector<int> patch_ids;     // assembly patch indices driven by the block
  std::vector<MatX> embedded;     // per driven patch: n x 3 parametric coords
  std::vector<SpMat> extraction;  // per driven patch: n x n_block
};

/// Embed patches into the block (point inversion per control point) and
/// verify the extraction reproduces the original points to tolerance.
FfdBlock ffd_build(const std::vector<std::pair<int, const NurbsSurface*>>& patches,
                   const BsplineVolume& block, double tol = 1e-10);

/// Patch control points from block control points.
MatX ffd_apply(const FfdBlock& block, int driven_index, const MatX& Q);

/// FFD-driven patch: design variables move block control points along one
/// coordinate (grouped so the axial layers stay aligned).
class FfdMap : public PatchDesignMap {
 public:
  /// groups[i]: block control point indices moved together by variable i.
  FfdMap(std::shared_ptr<const FfdBlock> block, int driven_index, int coordinate,
         std::vector<std::vector<int>> groups);
  int num_vars() const override { return static_cast<int>(groups_.size()); }
  MatX apply(const VecX& z) const override;
  void jacobian(const VecX& z, std::vector<Triplet>& out) const override;

 private:
  std::shared_ptr<const FfdBlock> block_;
  int driven_;
  int coord_;
  std::vector<std::vector<int>> groups_;
};

/// The full design space: one map per assembly patch, sharing a global
/// design vector z laid out map after map.
class DesignSpace {
 public:
  explicit DesignSpace(NonMatchingAssembly* asmb) : asmb_(asmb) {}
  /// Returns the offset of the map's variables in the global vector. With
  /// shared_offset >= 0 the map reuses the variables registered there (the
  /// two patches of an FFD pair are driven by one block).
  int add_map(int patch, std::unique_ptr<PatchDesignMap> map,
              int shared_offset = -1);
  int num_vars() const { return total_vars_; }
  NonMatchingAssembly& assembly() { return *asmb_; }
  const NonMatchingAssembly& assembly() const { return *asmb_; }

  /// Write the control points of every patch for the design vector z.
  void apply(const VecX& z);
  /// Global Jacobian d(P)/dz (control point dof rows).
  SpMat jacobian(const VecX& z) const;
  int var_offset(int map_index) const { return var_offsets_[map_index]; }

 private:
  NonMatchingAssembly* asmb_;
  std::vector<int> patch_ids_;
  std::vector<std::unique_ptr<PatchDesignMap>> maps_;
  std::vector<int> var_offsets_;
  int total_vars_ = 0;
};

/// Mid-surface volume of a patch (area times thickness) and its gradient
/// with respect to the design vector.
double patch_volume(const NonMatchingAssembly& asmb, int patch, const SpMat& dPdz,
                    VecX* grad_z = nullptr);

// --- constraints ---

struct ConstraintState {
  const NonMatchingAssembly* asmb = nullptr;
  const VecX* z = nullptr;
  const SpMat* dPdz = nullptr;
};

class Constraint {
 public:
  virtual ~Constraint() = default;
  virtual int count() const = 0;
  virtual bool equality() const = 0;
  /// values and gradient rows (count x num_vars)
  virtual void eval(const ConstraintState& s, VecX& values, MatX& grads) const = 0;
};

/// volume(patch) = target (equality)
class VolumeConstraint : public Constraint {
 public:
  VolumeConstraint(int patch, double target) : patch_(patch), target_(target) {}
  int count() const override { return 1; }
  bool equality() const override { return true; }
  void eval(const ConstraintState& s, VecX& v, MatX& g) const override;

 private:
  int patch_;
  double target_;
};

/// z_i - z_j >= dmin between two translation variables (inequality)
class MinDistanceConstraint : public Constraint {
 public:
  MinDistanceConstraint(int i, int j, double dmin) : i_(i), j_(j), dmin_(dmin) {}
  int count() const override { return 1; }
  bool equality() const override { return false; }
  void eval(const ConstraintState& s, VecX& v, MatX& g) const override;

 private:
  int i_, j_;
  double dmin_;
};

/// T-junction retention: the edge-side coordinate of selected quadrature
/// nodes equals its edge value (equality, one row per selected node).
class TJunctionConstraint : public Constraint {
 public:
  TJunctionConstraint(int intersection, std::vector<int> nodes)
      : k_(intersection), nodes_(std::move(nodes)) {}
  int count() const override { return static_cast<int>(nodes_.size()); }
  bool equality() const override { return true; }
  void eval(const ConstraintState& s, VecX& v, MatX& g) const override;
  const std::vector<int>& nodes() const { return nodes_; }

 private:
  int k_;
  std::vector<int> nodes_;
};

} // namespace shellopt
