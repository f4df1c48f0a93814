// SPDX-License-Identifier: Apache-2.0
#include "shellopt/sensitivity.hpp"

#include "shellopt/errors.hpp"

namespace shellopt {

SpMat coordinate_points_jacobian_global(const NonMatchingAssembly& asmb, int k) {
  const Intersection& ix = asmb.intersection(k);
  const NurbsSurface& a = asmb.patch(ix.patch_a).surface();
  const NurbsSurface& b = asmb.patch(ix.patch_b).surface();
  const SpMat local =
      intersection_jacobian_points(a, b, ix.mesh, ix.topology);
  const int nA = 3 * a.num_points();
  std::vector<Triplet> ts;
  for (int col = 0; col < local.outerSize(); ++col)
    for (SpMat::InnerIterator it(local, col); it; ++it) {
      const int gcol = (col < nA)
                           ? asmb.patch_offset(ix.patch_a) + col
                           : asmb.patch_offset(ix.patch_b) + (col - nA);
      ts.emplace_back(it.row(), gcol, it.value());
    }
  return from_triplets(static_cast<int>(local.rows()), asmb.num_dofs(), ts);
}

CoordsSensitivityOp::CoordsSensitivityOp(const NonMatchingAssembly& asmb, int k) {
  const Intersection& ix = asmb.intersection(k);
  const NurbsSurface& a = asmb.patch(ix.patch_a).surface();
  const NurbsSurface& b = asmb.patch(ix.patch_b).surface();
  J_ = intersection_jacobian_coords(a, b, ix.mesh, ix.topology);
  lu_.compute(J_);
  dRL_dP_ = coordinate_points_jacobian_global(asmb, k);
}

VecX CoordsSensitivityOp::apply(const VecX& dP) const {
  return lu_.solve(VecX(-(dRL_dP_ * dP)));
}

VecX CoordsSensitivityOp::apply_transpose(const VecX& w) const {
  const VecX y = lu_.transpose().solve(w);
  return -(dRL_dP_.transpose() * y);
}

SensitivityWorkspace total_design_derivative(const NonMatchingAssembly& asmb,
                                             const VecX& d) {
  SensitivityWorkspace ws;
  NonMatchingAssembly::Request req;
  req.stiffness = true;
  req.dR_dP = true;
  req.objective = true;
  req.dR_dxi = true;
  ws.res = asmb.assemble(d, req);

  // adjoint solve K^T lambda = -df/dd
  Eigen::SparseLU<SpMat> lu(SpMat(ws.res.stiffness.transpose()));
  if (lu.info() != Eigen::Success)
    throw SolverError("total_design_derivative: singular transposed tangent");
  ws.adjoint = lu.solve(VecX(-ws.res.obj_grad_d));

  ws.total = ws.res.obj_grad_P + ws.res.dR_dP.transpose() * ws.adjoint;

  ws.coords.resize(asmb.num_intersections());
  for (int k = 0; k < asmb.num_intersections(); ++k) {
    const Intersection& ix = asmb.intersection(k);
    if (ix.frozen) continue;  // coordinates are constants of the design
    ws.coords[k] = std::make_unique<CoordsSensitivityOp>(asmb, k);
    const VecX mu = ws.res.dR_dxi[k].transpose() * ws.adjoint;
    ws.total += ws.coords[k]->apply_transpose(mu);
  }
  return ws;
}

VecX direct_design_derivative(const NonMatchingAssembly& asmb, const VecX& d,
                              const std::vector<VecX>& directions) {
  NonMatchingAssembly::Request req;
  req.stiffness = true;
  req.dR_dP = true;
  req.objective = true;
  req.dR_dxi = true;
  const auto res = asmb.assemble(d, req);
  Eigen::SparseLU<SpMat> lu(res.stiffness);
  if (lu.info() != Eigen::Success)
    throw SolverError("direct_design_derivative: singular tangent");

  std::vector<std::unique_ptr<CoordsSensitivityOp>> coords(
      asmb.num_intersections());
  for (int k = 0; k < asmb.num_intersections(); ++k)
    if (!asmb.intersection(k).frozen)
      coords[k] = std::make_unique<CoordsSensitivityOp>(asmb, k);

  VecX out(directions.size());
  for (size_t i = 0; i < directions.size(); ++i) {
    const VecX& dP = directions[i];
    VecX rhs = res.dR_dP * dP;
    for (int k = 0; k < asmb.num_intersections(); ++k)
      if (coords[k]) rhs += res.dR_dxi[k] * coords[k]->apply(dP);
    const VecX dd = lu.solve(VecX(-rhs));
    out[i] = res.obj_grad_P.dot(dP) + res.obj_grad_d.dot(dd);
  }
  return out;
}

VecX coordinate_gradient(const NonMatchingAssembly& asmb, int k, int flat_coord) {
  const Intersection& ix = asmb.intersection(k);
  if (ix.frozen) return VecX::Zero(asmb.num_dofs());
  CoordsSensitivityOp op(asmb, k);
  VecX e = VecX::Zero(4 * ix.mesh.m);
  e[flat_coord] = 1.0;
  return op.apply_transpose(e);
}

} // namespace shellopt
