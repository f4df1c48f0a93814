// SPDX-License-Identifier: Apache-2.0
#include "shellopt/design.hpp"

#include <cmath>

#include "shellopt/errors.hpp"

namespace shellopt {

MatX RigidTranslationMap::apply(const VecX& z) const {
  MatX P = base_;
  for (int i = 0; i < num_vars(); ++i)
    for (int k = 0; k < P.rows(); ++k) P.row(k) += z[i] * axes_[i].transpose();
  return P;
}

void RigidTranslationMap::jacobian(const VecX&, std::vector<Triplet>& out) const {
  for (int i = 0; i < num_vars(); ++i)
    for (int k = 0; k < base_.rows(); ++k)
      for (int c = 0; c < 3; ++c)
        if (axes_[i][c] != 0.0) out.emplace_back(3 * k + c, i, axes_[i][c]);
}

MatX PlanarMap::apply(const VecX& z) const {
  const double ct = std::cos(z[2]), st = std::sin(z[2]);
  MatX P = base_;
  for (int k = 0; k < P.rows(); ++k) {
    const double u = base_(k, ax_[0]) - pivot_[ax_[0]];
    const double v = base_(k, ax_[1]) - pivot_[ax_[1]];
    P(k, ax_[0]) = pivot_[ax_[0]] + ct * u - st * v + z[0];
    P(k, ax_[1]) = pivot_[ax_[1]] + st * u + ct * v + z[1];
  }
  return P;
}

void PlanarMap::jacobian(const VecX& z, std::vector<Triplet>& out) const {
  const double ct = std::cos(z[2]), st = std::sin(z[2]);
  for (int k = 0; k < base_.rows(); ++k) {
    const double u = base_(k, ax_[0]) - pivot_[ax_[0]];
    const double v = base_(k, ax_[1]) - pivot_[ax_[1]];
    out.emplace_back(3 * k + ax_[0], 0, 1.0);
    out.emplace_back(3 * k + ax_[1], 1, 1.0);
    out.emplace_back(3 * k + ax_[0], 2, -st * u - ct * v);
    out.emplace_back(3 * k + ax_[1], 2, ct * u - st * v);
  }
}

WebProfileMap::WebProfileMap(KnotVector axial_kv, KnotVector profile_kv,
                             double y0, double y1,
                             const NurbsSurface& analysis_target)
    : axial_kv_(std::move(axial_kv)), profile_kv_(std::move(profile_kv)),
      y0_(y0), y1_(y1), target_u_(analysis_target.kv_u()),
      target_v_(analysis_target.kv_v()) {
  profile_n_ = profile_kv_.num_basis();
  const MatX Mu = subdivision_matrix(axial_kv_, target_u_);
  const MatX Mv = subdivision_matrix(profile_kv_, target_v_);
  std::vector<Triplet> ts;
  const int m2 = static_cast<int>(Mv.rows());
  for (int i = 0; i < Mu.rows(); ++i)
    for (int a = 0; a < Mu.cols(); ++a) {
      if (Mu(i, a) == 0.0) continue;
      for (int j = 0; j < m2; ++j)
        for (int c = 0; c < Mv.cols(); ++c) {
          const double w = Mu(i, a) * Mv(j, c);
          if (w != 0.0)
            ts.emplace_back(i * m2 + j, a * static_cast<int>(Mv.cols()) + c, w);
        }
    }
  chain_ = from_triplets(static_cast<int>(Mu.rows()) * m2,
                         static_cast<int>(Mu.cols() * Mv.cols()), ts);
}

MatX WebProfileMap::design_grid(const VecX& z) const {
  const auto ga = axial_kv_.greville();
  const auto gp = profile_kv_.greville();
  const double zt = z[profile_n_], zb = z[profile_n_ + 1];
  MatX P(axial_kv_.num_basis() * profile_n_, 3);
  for (int i = 0; i < axial_kv_.num_basis(); ++i)
    for (int j = 0; j < profile_n_; ++j)
      P.row(i * profile_n_ + j) = Vec3(z[j], y0_ + (y1_ - y0_) * ga[i],
                                       zb + (zt - zb) * gp[j]);
  return P;
}

MatX WebProfileMap::apply(const VecX& z) const { return chain_ * design_grid(z); }

NurbsSurface WebProfileMap::design_model(const VecX& z) const {
  const MatX P = design_grid(z);
  return NurbsSurface(axial_kv_, profile_kv_, P,
                      VecX::Ones(P.rows()));
}

void WebProfileMap::jacobian(const VecX&, std::vector<Triplet>& out) const {
  const auto gp = profile_kv_.greville();
  const int na = axial_kv_.num_basis();
  // design-grid Jacobian columns, then push through the chain
  for (int col = 0; col < num_vars(); ++col) {
    VecX dgrid = VecX::Zero(na * profile_n_);
    MatX dg = MatX::Zero(na * profile_n_, 3);
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < profile_n_; ++j) {
        if (col < profile_n_) {
          if (j == col) dg(i * profile_n_ + j, 0) = 1.0;
        } else if (col == profile_n_) {
          dg(i * profile_n_ + j, 2) = gp[j];  // z_top weight
        } else {
          dg(i * profile_n_ + j, 2) = 1.0 - gp[j];  // z_bottom weight
        }
      }
    const MatX fine = chain_ * dg;
    for (int k = 0; k < fine.rows(); ++k)
      for (int c = 0; c < 3; ++c)
        if (fine(k, c) != 0.0) out.emplace_back(3 * k + c, col, fine(k, c));
  }
}

FfdBlock ffd_build(const std::vector<std::pair<int, const NurbsSurface*>>& patches,
                   const BsplineVolume& block, double tol) {
  FfdBlock out;
  out.volume = block;
  for (const auto& [pid, surf] : patches) {
    const int n = surf->num_points();
    MatX eta(n, 3);
    std::vector<Triplet> ts;
    std::vector<std::pair<int, double>> row;
    for (int k = 0; k < n; ++k) {
      const Vec3 x = surf->control_points().row(k);
      const Vec3 e = block.invert(x, tol);
      eta.row(k) = e;
      block.basis_row(e, row);
      for (auto& [idx, val] : row)
        if (val != 0.0) ts.emplace_back(k, idx, val);
    }
    SpMat E = from_triplets(n, block.num_points(), ts);
    // construction check: the extraction must reproduce the embedded points
    const MatX back = E * block.control_points();
    if ((back - surf->control_points()).lpNorm<Eigen::Infinity>() > 10 * tol)
      throw EmbeddingError("ffd_build: extraction does not reproduce the patch");
    out.patch_ids.push_back(pid);
    out.embedded.push_back(std::move(eta));
    out.extraction.push_back(std::move(E));
  }
  return out;
}

MatX ffd_apply(const FfdBlock& block, int driven_index, const MatX& Q) {
  return block.extraction[driven_index] * Q;
}

FfdMap::FfdMap(std::shared_ptr<const FfdBlock> block, int driven_index,
               int coordinate, std::vector<std::vector<int>> groups)
    : block_(std::move(block)), driven_(driven_index), coord_(coordinate),
      groups_(std::move(groups)) {}

MatX FfdMap::apply(const VecX& z) const {
  MatX Q = block_->volume.control_points();
  for (size_t i = 0; i < groups_.size(); ++i)
    for (int idx : groups_[i]) Q(idx, coord_) += z[static_cast<int>(i)];
  return ffd_apply(*block_, driven_, Q);
}

void FfdMap::jacobian(const VecX&, std::vector<Triplet>& out) const {
  const SpMat& E = block_->extraction[driven_];
  for (size_t i = 0; i < groups_.size(); ++i)
    for (int idx : groups_[i])
      for (SpMat::InnerIterator it(E, idx); it; ++it)
        out.emplace_back(3 * static_cast<int>(it.row()) + coord_,
                         static_cast<int>(i), it.value());
}

int DesignSpace::add_map(int patch, std::unique_ptr<PatchDesignMap> map,
                         int shared_offset) {
  patch_ids_.push_back(patch);
  if (shared_offset >= 0) {
    var_offsets_.push_back(shared_offset);
  } else {
    var_offsets_.push_back(total_vars_);
    total_vars_ += map->num_vars();
  }
  maps_.push_back(std::move(map));
  return var_offsets_.back();
}

void DesignSpace::apply(const VecX& z) {
  if (z.size() != total_vars_)
    throw std::invalid_argument("DesignSpace::apply: dimension mismatch");
  for (size_t i = 0; i < maps_.size(); ++i) {
    const VecX zi = z.segment(var_offsets_[i], maps_[i]->num_vars());
    asmb_->patch(patch_ids_[i]).set_control_points(maps_[i]->apply(zi));
  }
}

SpMat DesignSpace::jacobian(const VecX& z) const {
  std::vector<Triplet> ts;
  for (size_t i = 0; i < maps_.size(); ++i) {
    const VecX zi = z.segment(var_offsets_[i], maps_[i]->num_vars());
    std::vector<Triplet> local;
    maps_[i]->jacobian(zi, local);
    const int row_off = asmb_->patch_offset(patch_ids_[i]);
    const int col_off = var_offsets_[i];
    for (const auto& t : local)
      ts.emplace_back(row_off + t.row(), col_off + t.col(), t.value());
  }
  return from_triplets(asmb_->num_dofs(), total_vars_, ts);
}

double patch_volume(const NonMatchingAssembly& asmb, int patch, const SpMat& dPdz,
                    VecX* grad_z) {
  VecX grad_P;
  const double area = patch_area(asmb.patch(patch), grad_z ? &grad_P : nullptr);
  const double t = asmb.patch(patch).thickness();
  if (grad_z) {
    VecX g = VecX::Zero(asmb.num_dofs());
    g.segment(asmb.patch_offset(patch), asmb.patch(patch).num_dofs()) = grad_P;
    *grad_z = t * (dPdz.transpose() * g);
  }
  return area * t;
}

void VolumeConstraint::eval(const ConstraintState& s, VecX& v, MatX& g) const {
  VecX grad;
  const double vol = patch_volume(*s.asmb, patch_, *s.dPdz, &grad);
  v.resize(1);
  v[0] = vol - target_;
  g.resize(1, grad.size());
  g.row(0) = grad;
}

void MinDistanceConstraint::eval(const ConstraintState& s, VecX& v, MatX& g) const {
  v.resize(1);
  v[0] = (*s.z)[i_] - (*s.z)[j_] - dmin_;
  g = MatX::Zero(1, s.z->size());
  g(0, i_) = 1.0;
  g(0, j_) = -1.0;
}

void TJunctionConstraint::eval(const ConstraintState& s, VecX& v, MatX& g) const {
  const Intersection& ix = s.asmb->intersection(k_);
  const int m = ix.mesh.m;
  const int side = ix.topology.tjunction_side;
  const int comp = ix.topology.tjunction_component;
  const double value = ix.topology.tjunction_value;
  const VecX x = ix.mesh.stacked();
  v.resize(count());
  g.resize(count(), s.z->cols() == 1 ? s.z->size() : s.z->size());
  for (int r = 0; r < count(); ++r) {
    const int flat = side * 2 * m + 2 * nodes_[r] + comp;
    v[r] = x[flat] - value;
    const VecX gP = coordinate_gradient(*s.asmb, k_, flat);
    g.row(r) = s.dPdz->transpose() * gP;
  }
}

} // namespace shellopt
