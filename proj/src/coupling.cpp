// SPDX-License-Identifier: Apache-2.0
#include "shellopt/coupling.hpp"

#include <cmath>
#include <stdexcept>

#include "shellopt/errors.hpp"
#include "shellopt/jet.hpp"
#include "shellopt/quadrature.hpp"

namespace shellopt {

PenaltyParams PenaltyParams::from_properties(double alpha, double E, double nu,
                                             double t, double h,
                                             bool nu_squared_variant) {
  PenaltyParams p;
  p.alpha = alpha;
  p.alpha_d = alpha * E * t / (h * (1.0 - nu * nu));
  const double denom = nu_squared_variant ? (1.0 - nu * nu) : (1.0 - nu * nu * nu);
  p.alpha_r = alpha * E * t * t * t / (12.0 * h * denom);
  return p;
}

InterpolationOperators build_interpolation(const NurbsSurface& s,
                                           const std::vector<Vec2>& nodes,
                                           bool extend) {
  const int m = static_cast<int>(nodes.size());
  const int n3 = 3 * s.num_points();
  std::vector<Triplet> tv, td;
  for (int i = 0; i < m; ++i) {
    const SurfaceBasis b = s.basis(nodes[i], 1, extend);
    for (int k = 0; k < b.count(); ++k)
      for (int c = 0; c < 3; ++c) {
        tv.emplace_back(3 * i + c, 3 * b.index(k) + c, b.N[k]);
        td.emplace_back(3 * i + c, 3 * b.index(k) + c, b.N1[k]);
        td.emplace_back(3 * m + 3 * i + c, 3 * b.index(k) + c, b.N2[k]);
      }
  }
  InterpolationOperators ops;
  ops.values = from_triplets(3 * m, n3, tv);
  ops.derivatives = from_triplets(6 * m, n3, td);
  return ops;
}

namespace {

// 36 penalty field variables: 12 vector slots evaluated at a gauss point of
// the quadrature mesh. Displacements and reference tangents interpolate
// linearly between the segment's two nodes; the arc measure comes from the
// side-A reference tangent.
enum FieldSlot {
  kUA = 0, kUB, kA1A, kA2A, kA1B, kA2B, kDu1A, kDu2A, kDu1B, kDu2B, kTA, kTauA,
  kNumFieldSlots
};
constexpr int kFieldVars = 3 * kNumFieldSlots;

// nodal slots per (side, local node): d, d1, d2, p, p1, p2
constexpr int kNodalSlots = 6;
constexpr int kNodalVars = 2 * 2 * kNodalSlots * 3;  // 72

struct MapEntry {
  int field_slot;
  int side;        // 0 = A, 1 = B
  int nodal_slot;  // 0..5
  bool tangent;    // true: coefficients (-1, +1); false: (N1, N2)
};

constexpr MapEntry kFieldMap[kNumFieldSlots] = {
    {kUA, 0, 0, false},   {kUB, 1, 0, false},   {kA1A, 0, 4, false},
    {kA2A, 0, 5, false},  {kA1B, 1, 4, false},  {kA2B, 1, 5, false},
    {kDu1A, 0, 1, false}, {kDu2A, 0, 2, false}, {kDu1B, 1, 1, false},
    {kDu2B, 1, 2, false}, {kTA, 0, 3, true},    {kTauA, 0, 0, true},
};

inline int nodal_index(int side, int local, int slot, int comp) {
  return ((side * 2 + local) * kNodalSlots + slot) * 3 + comp;
}

template <class T>
T penalty_density(const V3<T>* f, double ad, double ar) {
  const V3<T> du = v3_sub(f[kUA], f[kUB]);
  const V3<T> a1A = v3_add(f[kA1A], f[kDu1A]), a2A = v3_add(f[kA2A], f[kDu2A]);
  const V3<T> a1B = v3_add(f[kA1B], f[kDu1B]), a2B = v3_add(f[kA2B], f[kDu2B]);
  const V3<T> A3A = v3_normalized(v3_cross(f[kA1A], f[kA2A]));
  const V3<T> A3B = v3_normalized(v3_cross(f[kA1B], f[kA2B]));
  const V3<T> a3A = v3_normalized(v3_cross(a1A, a2A));
  const V3<T> a3B = v3_normalized(v3_cross(a1B, a2B));
  const V3<T>& AtA = f[kTA];
  const V3<T> atA = v3_add(f[kTA], f[kTauA]);
  const V3<T> AnA = v3_normalized(v3_cross(AtA, A3A));
  const V3<T> anA = v3_normalized(v3_cross(atA, a3A));
  const T rot1 = v3_dot(a3A, a3B) - v3_dot(A3A, A3B);
  const T rot2 = v3_dot(anA, a3B) - v3_dot(AnA, A3B);
  const T measure = v3_norm(f[kTA]);
  return (0.5 * ad * v3_dot(du, du) + 0.5 * ar * (rot1 * rot1 + rot2 * rot2)) *
         measure;
}

using J36 = Jet2<kFieldVars>;

} // namespace

NonMatchingAssembly::NonMatchingAssembly(CouplingConfig cfg) : cfg_(cfg) {}

int NonMatchingAssembly::add_patch(ShellPatch patch) {
  offsets_.push_back(total_dofs_);
  total_dofs_ += patch.num_dofs();
  patches_.push_back(std::move(patch));
  return num_patches() - 1;
}

double NonMatchingAssembly::average_span_diagonal(int ia, int ib) const {
  double sum = 0.0;
  int count = 0;
  for (int pi : {ia, ib}) {
    const NurbsSurface& s = patches_[pi].surface();
    const auto& tu = s.kv_u().knots();
    const auto& tv = s.kv_v().knots();
    for (size_t i = s.kv_u().degree(); i + s.kv_u().degree() + 1 < tu.size(); ++i) {
      if (tu[i + 1] <= tu[i]) continue;
      for (size_t j = s.kv_v().degree(); j + s.kv_v().degree() + 1 < tv.size();
           ++j) {
        if (tv[j + 1] <= tv[j]) continue;
        const Vec3 c0 = s.evaluate(Vec2(tu[i], tv[j]), 0).X;
        const Vec3 c1 = s.evaluate(Vec2(tu[i + 1], tv[j + 1]), 0).X;
        sum += (c1 - c0).norm();
        ++count;
      }
    }
  }
  return sum / std::max(count, 1);
}

int NonMatchingAssembly::add_intersection(int patch_a, int patch_b) {
  return add_intersection(patch_a, patch_b,
                          detect_intersection(patches_[patch_a].surface(),
                                              patches_[patch_b].surface()));
}

int NonMatchingAssembly::add_intersection(int patch_a, int patch_b,
                                          DetectionResult det) {
  if (patch_a == patch_b)
    throw std::invalid_argument("add_intersection: need two distinct patches");
  Intersection ix;
  ix.patch_a = patch_a;
  ix.patch_b = patch_b;
  ix.mesh = std::move(det.mesh);
  ix.topology = std::move(det.topology);
  ix.frozen = (ix.topology.kind == IntersectionKind::EdgeEdge);
  const ShellPatch& a = patches_[patch_a];
  const ShellPatch& b = patches_[patch_b];
  const double E = 0.5 * (a.material().E + b.material().E);
  const double nu = 0.5 * (a.material().nu + b.material().nu);
  const double t = 0.5 * (a.thickness() + b.thickness());
  const double h = average_span_diagonal(patch_a, patch_b);
  ix.params = PenaltyParams::from_properties(cfg_.alpha, E, nu, t, h,
                                             cfg_.rotational_nu_squared);
  intersections_.push_back(std::move(ix));
  tables_.emplace_back();
  rebuild_node_tables(num_intersections() - 1);
  return num_intersections() - 1;
}

bool NonMatchingAssembly::is_fixed(int g) const {
  for (int i = num_patches() - 1; i >= 0; --i)
    if (g >= offsets_[i]) return patches_[i].fixed()[g - offsets_[i]];
  return false;
}

VecX NonMatchingAssembly::flat_points() const {
  VecX P(total_dofs_);
  for (int i = 0; i < num_patches(); ++i)
    P.segment(offsets_[i], patches_[i].num_dofs()) = patches_[i].flat_points();
  return P;
}

void NonMatchingAssembly::set_flat_points(const VecX& P) {
  if (P.size() != total_dofs_)
    throw std::invalid_argument("set_flat_points: size mismatch");
  for (int i = 0; i < num_patches(); ++i)
    patches_[i].set_flat_points(P.segment(offsets_[i], patches_[i].num_dofs()));
}

void NonMatchingAssembly::rebuild_node_tables(int k) const {
  const Intersection& ix = intersections_[k];
  const int m = ix.mesh.m;
  auto& tabs = tables_[k];
  tabs.assign(2 * m, NodeTable{});
  for (int side = 0; side < 2; ++side) {
    const NurbsSurface& s = patches_[side == 0 ? ix.patch_a : ix.patch_b].surface();
    for (int i = 0; i < m; ++i) {
      const Vec2 xi = (side == 0) ? ix.mesh.xiA[i] : ix.mesh.xiB[i];
      tabs[side * m + i].basis = s.basis(xi, 2, /*extend=*/true);
    }
  }
}

void NonMatchingAssembly::fill_node_values(int k, const VecX& dvec) const {
  const Intersection& ix = intersections_[k];
  const int m = ix.mesh.m;
  auto& tabs = tables_[k];
  for (int side = 0; side < 2; ++side) {
    const int pi = (side == 0) ? ix.patch_a : ix.patch_b;
    const MatX& P = patches_[pi].surface().control_points();
    const int off = offsets_[pi];
    for (int i = 0; i < m; ++i) {
      NodeTable& nt = tabs[side * m + i];
      nt.d.setZero(); nt.d1.setZero(); nt.d2.setZero();
      nt.d11.setZero(); nt.d12.setZero(); nt.d22.setZero();
      nt.p.setZero(); nt.p1.setZero(); nt.p2.setZero();
      nt.p11.setZero(); nt.p12.setZero(); nt.p22.setZero();
      const SurfaceBasis& b = nt.basis;
      for (int kk = 0; kk < b.count(); ++kk) {
        const int idx = b.index(kk);
        const Vec3 pc = P.row(idx);
        const Vec3 dc(dvec[off + 3 * idx], dvec[off + 3 * idx + 1],
                      dvec[off + 3 * idx + 2]);
        nt.p += b.N[kk] * pc;   nt.d += b.N[kk] * dc;
        nt.p1 += b.N1[kk] * pc; nt.d1 += b.N1[kk] * dc;
        nt.p2 += b.N2[kk] * pc; nt.d2 += b.N2[kk] * dc;
        nt.p11 += b.N11[kk] * pc; nt.d11 += b.N11[kk] * dc;
        nt.p12 += b.N12[kk] * pc; nt.d12 += b.N12[kk] * dc;
        nt.p22 += b.N22[kk] * pc; nt.d22 += b.N22[kk] * dc;
      }
    }
  }
}

void NonMatchingAssembly::solve_all_coordinates() {
  for (int k = 0; k < num_intersections(); ++k) {
    Intersection& ix = intersections_[k];
    if (ix.frozen) continue;
    const NurbsSurface& a = patches_[ix.patch_a].surface();
    const NurbsSurface& b = patches_[ix.patch_b].surface();
    const CoordinateSolveResult res =
        solve_intersection(a, b, ix.mesh, ix.topology, cfg_.coord_solve);
    ix.mesh = res.mesh;
    ix.last_residual_norm = res.residual_norm;

    // migration past a patch edge (the T-junction component may legally sit
    // outside while the optimizer restores feasibility, so it is exempt)
    double excursion = 0.0;
    const VecX x = ix.mesh.stacked();
    for (int i = 0; i < x.size(); ++i) {
      const int side = (i < 2 * ix.mesh.m) ? 0 : 1;
      const int comp = i % 2;
      if (ix.topology.kind == IntersectionKind::InteriorEdge &&
          side == ix.topology.tjunction_side &&
          comp == ix.topology.tjunction_component)
        continue;
      excursion = std::max(excursion, std::max(x[i] - 1.0, -x[i]));
    }
    if (excursion > cfg_.freeze_excursion) {
      for (int i = 0; i < ix.mesh.m; ++i)
        for (int c = 0; c < 2; ++c) {
          ix.mesh.xiA[i][c] = std::clamp(ix.mesh.xiA[i][c], 0.0, 1.0);
          ix.mesh.xiB[i][c] = std::clamp(ix.mesh.xiB[i][c], 0.0, 1.0);
        }
      ix.frozen = true;
    }
    rebuild_node_tables(k);
  }
}

int NonMatchingAssembly::reclassify_edge_intersections(double tol) {
  int count = 0;
  for (int k = 0; k < num_intersections(); ++k) {
    Intersection& ix = intersections_[k];
    if (ix.frozen || ix.topology.kind != IntersectionKind::InteriorInterior)
      continue;
    // the migrating components are the ones not pinned by the endpoint
    // conditions; a component counts as migrated when every node has it
    // within tol of the same boundary
    bool migrated = false;
    for (int side = 0; side < 2 && !migrated; ++side)
      for (int comp = 0; comp < 2 && !migrated; ++comp) {
        bool pinned = false;
        for (const auto& pin : ix.topology.pinned)
          if (pin.side == side && pin.component == comp) pinned = true;
        if (pinned) continue;
        for (double boundary : {0.0, 1.0}) {
          bool all = true;
          for (int i = 0; i < ix.mesh.m; ++i) {
            const Vec2& uv = (side == 0) ? ix.mesh.xiA[i] : ix.mesh.xiB[i];
            if (std::abs(uv[comp] - boundary) > tol) all = false;
          }
          if (all) migrated = true;
        }
      }
    if (migrated) {
      for (int i = 0; i < ix.mesh.m; ++i)
        for (int c = 0; c < 2; ++c) {
          auto snap = [&](double x) {
            if (std::abs(x) < tol) return 0.0;
            if (std::abs(x - 1.0) < tol) return 1.0;
            return std::clamp(x, 0.0, 1.0);
          };
          ix.mesh.xiA[i][c] = snap(ix.mesh.xiA[i][c]);
          ix.mesh.xiB[i][c] = snap(ix.mesh.xiB[i][c]);
        }
      ix.frozen = true;
      rebuild_node_tables(k);
      ++count;
    }
  }
  return count;
}

double NonMatchingAssembly::max_coordinate_residual() const {
  double r = 0.0;
  for (const auto& ix : intersections_)
    if (!ix.frozen) r = std::max(r, ix.last_residual_norm);
  return r;
}

NonMatchingAssembly::Result NonMatchingAssembly::assemble(
    const VecX& d, const Request& req) const {
  if (d.size() != total_dofs_)
    throw std::invalid_argument("assemble: displacement size mismatch");
  Result out;
  MatX Kd, dRdPd;
  if (req.residual) out.residual = VecX::Zero(total_dofs_);
  if (req.stiffness) Kd = MatX::Zero(total_dofs_, total_dofs_);
  if (req.dR_dP) dRdPd = MatX::Zero(total_dofs_, total_dofs_);
  if (req.objective) {
    out.obj_grad_d = VecX::Zero(total_dofs_);
    out.obj_grad_P = VecX::Zero(total_dofs_);
  }
  if (req.dR_dxi) out.dR_dxi.resize(num_intersections());

  // shell contributions
  for (int i = 0; i < num_patches(); ++i) {
    PatchRequest preq;
    preq.residual = req.residual;
    preq.stiffness = req.stiffness;
    preq.dR_dP = req.dR_dP;
    preq.objective = req.objective;
    const VecX dloc = d.segment(offsets_[i], patches_[i].num_dofs());
    const PatchResult pr = assemble_patch(patches_[i], dloc, preq);
    out.internal_energy += pr.internal_energy;
    out.potential_energy += pr.potential_energy;
    const int off = offsets_[i];
    if (req.residual)
      out.residual.segment(off, patches_[i].num_dofs()) = pr.residual;
    if (req.objective) {
      out.obj_grad_d.segment(off, patches_[i].num_dofs()) = pr.obj_grad_d;
      out.obj_grad_P.segment(off, patches_[i].num_dofs()) = pr.obj_grad_P;
    }
    if (req.stiffness)
      for (const auto& t : pr.stiffness)
        Kd(off + t.row(), off + t.col()) += t.value();
    if (req.dR_dP)
      for (const auto& t : pr.dR_dP)
        dRdPd(off + t.row(), off + t.col()) += t.value();
  }

  // penalty contributions
  const bool need_jet = req.residual || req.stiffness || req.dR_dP || req.dR_dxi;
  const auto gauss = gauss_legendre_01(cfg_.gauss_per_segment);
  for (int k = 0; k < num_intersections(); ++k) {
    const Intersection& ix = intersections_[k];
    fill_node_values(k, d);
    const auto& tabs = tables_[k];
    const int m = ix.mesh.m;
    if (req.dR_dxi) out.dR_dxi[k] = MatX::Zero(total_dofs_, 4 * m);

    // per node-side scatter matrices S (3*cnt x 9): S(3kk+c, 3sl+c) = B_sl[kk]
    std::vector<MatX> scat(2 * m);
    std::vector<std::vector<int>> gdofs(2 * m);
    for (int side = 0; side < 2; ++side) {
      const int pi = (side == 0) ? ix.patch_a : ix.patch_b;
      for (int i = 0; i < m; ++i) {
        const NodeTable& nt = tabs[side * m + i];
        const int cnt = nt.basis.count();
        MatX S = MatX::Zero(3 * cnt, 9);
        auto& gd = gdofs[side * m + i];
        gd.resize(3 * cnt);
        for (int kk = 0; kk < cnt; ++kk)
          for (int c = 0; c < 3; ++c) {
            S(3 * kk + c, 0 + c) = nt.basis.N[kk];
            S(3 * kk + c, 3 + c) = nt.basis.N1[kk];
            S(3 * kk + c, 6 + c) = nt.basis.N2[kk];
            gd[3 * kk + c] = offsets_[pi] + 3 * nt.basis.index(kk) + c;
          }
        scat[side * m + i] = std::move(S);
      }
    }

    const double ad = ix.params.alpha_d, ar = ix.params.alpha_r;
    for (int j = 0; j + 1 < m; ++j) {
      for (const auto& [zg, wg] : gauss) {
        const double N[2] = {1.0 - zg, zg};
        const double D[2] = {-1.0, 1.0};

        Vec3 fval[kNumFieldSlots];
        for (auto& v : fval) v.setZero();
        auto nodal_vec = [&](int side, int local, int slot) -> const Vec3& {
          const NodeTable& nt = tabs[side * m + (j + local)];
          switch (slot) {
            case 0: return nt.d;
            case 1: return nt.d1;
            case 2: return nt.d2;
            case 3: return nt.p;
            case 4: return nt.p1;
            default: return nt.p2;
          }
        };
        for (const auto& e : kFieldMap)
          for (int l = 0; l < 2; ++l)
            fval[e.field_slot] +=
                (e.tangent ? D[l] : N[l]) * nodal_vec(e.side, l, e.nodal_slot);

        // regularity checks on the plain values
        const Vec3 A3A = fval[kA1A].cross(fval[kA2A]);
        const Vec3 A3B = fval[kA1B].cross(fval[kA2B]);
        if (A3A.norm() < 1e-14 || A3B.norm() < 1e-14)
          throw SingularGeometryError(
              "penalty: degenerate surface metric on the quadrature mesh");
        if (fval[kTA].cross(Vec3(A3A.normalized())).norm() < 1e-14)
          throw DegenerateIntersectionError(
              "penalty: intersection tangent parallel to the surface normal");

        if (!need_jet) {
          V3<double> f[kNumFieldSlots];
          for (int s = 0; s < kNumFieldSlots; ++s)
            for (int c = 0; c < 3; ++c) f[s][c] = fval[s][c];
          const double phi = penalty_density(f, ad, ar);
          out.penalty_energy += wg * phi;
          out.potential_energy += wg * phi;
          continue;
        }

        V3<J36> f[kNumFieldSlots];
        for (int s = 0; s < kNumFieldSlots; ++s)
          for (int c = 0; c < 3; ++c)
            f[s][c] = J36::variable(fval[s][c], 3 * s + c);
        const J36 phi = penalty_density(f, ad, ar);
        out.penalty_energy += wg * phi.v;
        out.potential_energy += wg * phi.v;

        // chain to nodal variables
        MatX M = MatX::Zero(kFieldVars, kNodalVars);
        for (const auto& e : kFieldMap)
          for (int l = 0; l < 2; ++l)
            for (int c = 0; c < 3; ++c)
              M(3 * e.field_slot + c, nodal_index(e.side, l, e.nodal_slot, c)) +=
                  e.tangent ? D[l] : N[l];
        const VecX gn = M.transpose() * phi.g;
        MatX Hn;
        if (req.stiffness || req.dR_dP || req.dR_dxi)
          Hn = M.transpose() * phi.h * M;

        auto base = [&](int side, int local) {
          return (side * 2 + local) * kNodalSlots * 3;
        };

        if (req.residual) {
          for (int side = 0; side < 2; ++side)
            for (int l = 0; l < 2; ++l) {
              const auto& S = scat[side * m + (j + l)];
              const auto& gd = gdofs[side * m + (j + l)];
              const VecX r = S * gn.segment<9>(base(side, l));
              for (int q = 0; q < r.size(); ++q) out.residual[gd[q]] += wg * r[q];
            }
        }
        if (req.stiffness || req.dR_dP) {
          for (int s1 = 0; s1 < 2; ++s1)
            for (int l1 = 0; l1 < 2; ++l1) {
              const auto& S1 = scat[s1 * m + (j + l1)];
              const auto& g1 = gdofs[s1 * m + (j + l1)];
              for (int s2 = 0; s2 < 2; ++s2)
                for (int l2 = 0; l2 < 2; ++l2) {
                  const auto& S2 = scat[s2 * m + (j + l2)];
                  const auto& g2 = gdofs[s2 * m + (j + l2)];
                  if (req.stiffness) {
                    const MatX B = S1 *
                                   Hn.block(base(s1, l1), base(s2, l2), 9, 9) *
                                   S2.transpose();
                    for (int qa = 0; qa < B.rows(); ++qa)
                      for (int qb = 0; qb < B.cols(); ++qb)
                        Kd(g1[qa], g2[qb]) += wg * B(qa, qb);
                  }
                  if (req.dR_dP) {
                    const MatX B =
                        S1 * Hn.block(base(s1, l1), base(s2, l2) + 9, 9, 9) *
                        S2.transpose();
                    for (int qa = 0; qa < B.rows(); ++qa)
                      for (int qb = 0; qb < B.cols(); ++qb)
                        dRdPd(g1[qa], g2[qb]) += wg * B(qa, qb);
                  }
                }
            }
        }
        if (req.dR_dxi) {
          MatX& DX = out.dR_dxi[k];
          for (int sy = 0; sy < 2; ++sy)
            for (int l2 = 0; l2 < 2; ++l2) {
              const int node = j + l2;
              const NodeTable& nt = tabs[sy * m + node];
              for (int beta = 0; beta < 2; ++beta) {
                const int col = sy * 2 * m + 2 * node + beta;
                // (a) derivative of the scatter operators at this node
                {
                  const SurfaceBasis& b = nt.basis;
                  const VecX& dNb = (beta == 0) ? b.N1 : b.N2;
                  const VecX& dd1 = (beta == 0) ? b.N11 : b.N12;
                  const VecX& dd2 = (beta == 0) ? b.N12 : b.N22;
                  const auto& gd = gdofs[sy * m + node];
                  const int bb = base(sy, l2);
                  for (int kk = 0; kk < b.count(); ++kk)
                    for (int c = 0; c < 3; ++c)
                      DX(gd[3 * kk + c], col) +=
                          wg * (dNb[kk] * gn[bb + c] + dd1[kk] * gn[bb + 3 + c] +
                                dd2[kk] * gn[bb + 6 + c]);
                }
                // (b) variation of the nodal values with the coordinate
                VecX dq = VecX::Zero(kNodalVars);
                const Vec3 dd = (beta == 0) ? nt.d1 : nt.d2;
                const Vec3 dd1v = (beta == 0) ? nt.d11 : nt.d12;
                const Vec3 dd2v = (beta == 0) ? nt.d12 : nt.d22;
                const Vec3 dp = (beta == 0) ? nt.p1 : nt.p2;
                const Vec3 dp1v = (beta == 0) ? nt.p11 : nt.p12;
                const Vec3 dp2v = (beta == 0) ? nt.p12 : nt.p22;
                for (int c = 0; c < 3; ++c) {
                  dq[nodal_index(sy, l2, 0, c)] = dd[c];
                  dq[nodal_index(sy, l2, 1, c)] = dd1v[c];
                  dq[nodal_index(sy, l2, 2, c)] = dd2v[c];
                  dq[nodal_index(sy, l2, 3, c)] = dp[c];
                  dq[nodal_index(sy, l2, 4, c)] = dp1v[c];
                  dq[nodal_index(sy, l2, 5, c)] = dp2v[c];
                }
                const VecX dg = Hn * dq;
                for (int sx = 0; sx < 2; ++sx)
                  for (int lx = 0; lx < 2; ++lx) {
                    const auto& S = scat[sx * m + (j + lx)];
                    const auto& gd = gdofs[sx * m + (j + lx)];
                    const VecX r = S * dg.segment<9>(base(sx, lx));
                    for (int q = 0; q < r.size(); ++q) DX(gd[q], col) += wg * r[q];
                  }
              }
            }
        }
      }
    }
  }

  // boundary conditions: zero rows/columns, unit diagonal on the tangent
  if (req.residual)
    for (int i = 0; i < total_dofs_; ++i)
      if (is_fixed(i)) out.residual[i] = 0.0;
  if (req.objective)
    for (int i = 0; i < total_dofs_; ++i)
      if (is_fixed(i)) out.obj_grad_d[i] = 0.0;
  if (req.stiffness) {
    for (int i = 0; i < total_dofs_; ++i)
      if (is_fixed(i)) {
        Kd.row(i).setZero();
        Kd.col(i).setZero();
        Kd(i, i) = 1.0;
      }
    std::vector<Triplet> ts;
    for (int j = 0; j < total_dofs_; ++j)
      for (int i = 0; i < total_dofs_; ++i)
        if (Kd(i, j) != 0.0) ts.emplace_back(i, j, Kd(i, j));
    out.stiffness = from_triplets(total_dofs_, total_dofs_, ts);
  }
  if (req.dR_dP) {
    for (int i = 0; i < total_dofs_; ++i)
      if (is_fixed(i)) dRdPd.row(i).setZero();
    std::vector<Triplet> ts;
    for (int j = 0; j < total_dofs_; ++j)
      for (int i = 0; i < total_dofs_; ++i)
        if (dRdPd(i, j) != 0.0) ts.emplace_back(i, j, dRdPd(i, j));
    out.dR_dP = from_triplets(total_dofs_, total_dofs_, ts);
  }
  if (req.dR_dxi)
    for (auto& DX : out.dR_dxi)
      for (int i = 0; i < total_dofs_; ++i)
        if (is_fixed(i)) DX.row(i).setZero();
  return out;
}

double NonMatchingAssembly::internal_energy(const VecX& d) const {
  return assemble(d, {}).internal_energy;
}

double NonMatchingAssembly::penalty_energy(const VecX& d) const {
  return assemble(d, {}).penalty_energy;
}

VecX NonMatchingAssembly::newton_solve(const VecX& d0) const {
  VecX d = d0.size() ? d0 : VecX::Zero(total_dofs_);
  double r0 = -1.0;
  for (int it = 0; it < cfg_.newton_max_iter; ++it) {
    Request rk;
    rk.residual = true;
    rk.stiffness = true;
    const Result res = assemble(d, rk);
    const double rn = res.residual.lpNorm<Eigen::Infinity>();
    if (it == 0) r0 = std::max(rn, 1e-300);
    if (rn < std::max(cfg_.newton_atol, cfg_.newton_rtol * r0)) return d;
    Eigen::SparseLU<SpMat> lu(res.stiffness);
    if (lu.info() != Eigen::Success)
      throw SolverError("newton_solve: singular coupled tangent");
    const VecX step = lu.solve(res.residual);
    d -= step;
    // roundoff floor: the update no longer moves the iterate
    if (step.lpNorm<Eigen::Infinity>() <
        1e-11 * (1.0 + d.lpNorm<Eigen::Infinity>()))
      return d;
  }
  throw SolverError("newton_solve: no convergence within iteration cap");
}

IntersectionFrames NonMatchingAssembly::frames_at(int k, int segment,
                                                  double zeta, const VecX& d,
                                                  int side) const {
  const Intersection& ix = intersections_[k];
  fill_node_values(k, d);
  const auto& tabs = tables_[k];
  const int m = ix.mesh.m;
  const double N[2] = {1.0 - zeta, zeta};
  auto interp = [&](int s, auto proj) {
    Vec3 v = Vec3::Zero();
    for (int l = 0; l < 2; ++l) v += N[l] * proj(tabs[s * m + segment + l]);
    return v;
  };
  auto tangent = [&](int s, auto proj) {
    return Vec3(proj(tabs[s * m + segment + 1]) - proj(tabs[s * m + segment]));
  };
  IntersectionFrames fr;
  const Vec3 A1 = interp(side, [](const NodeTable& n) { return n.p1; });
  const Vec3 A2 = interp(side, [](const NodeTable& n) { return n.p2; });
  const Vec3 a1 = A1 + interp(side, [](const NodeTable& n) { return n.d1; });
  const Vec3 a2 = A2 + interp(side, [](const NodeTable& n) { return n.d2; });
  fr.A1 = A1;
  fr.A2 = A2;
  fr.a1 = a1;
  fr.a2 = a2;
  fr.A3 = A1.cross(A2).normalized();
  fr.a3 = a1.cross(a2).normalized();
  fr.At = tangent(side, [](const NodeTable& n) { return n.p; });
  fr.at = fr.At + tangent(side, [](const NodeTable& n) { return n.d; });
  if (fr.At.cross(fr.A3).norm() < 1e-14 || fr.at.cross(fr.a3).norm() < 1e-14)
    throw DegenerateIntersectionError("frames_at: tangent parallel to normal");
  fr.An = fr.At.cross(fr.A3).normalized();
  fr.an = fr.at.cross(fr.a3).normalized();
  return fr;
}

} // namespace shellopt
