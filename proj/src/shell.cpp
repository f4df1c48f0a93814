// SPDX-License-Identifier: Apache-2.0
#include "shellopt/shell.hpp"

#include <cmath>
#include <stdexcept>

#include "shellopt/errors.hpp"
#include "shellopt/jet.hpp"
#include "shellopt/quadrature.hpp"

namespace shellopt {

Material::Material(double E_, double nu_) : E(E_), nu(nu_) {
  if (!(E > 0.0)) throw std::invalid_argument("Material: E must be positive");
  if (nu < 0.0 || nu >= 0.5)
    throw std::invalid_argument("Material: nu must be in [0, 0.5)");
}

LoadSpec LoadSpec::dead_pressure(double magnitude, const Vec3& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("dead_pressure: direction must be a unit vector");
  LoadSpec l;
  l.kind = LoadKind::DeadPressure;
  l.magnitude = magnitude;
  l.direction = direction;
  return l;
}

LoadSpec LoadSpec::follower_pressure(double magnitude) {
  LoadSpec l;
  l.kind = LoadKind::FollowerPressure;
  l.magnitude = magnitude;
  return l;
}

ShellPatch::ShellPatch(NurbsSurface surface, double thickness, Material material,
                       LoadSpec load, int gauss_per_span)
    : surface_(std::move(surface)), t_(thickness), mat_(material), load_(load),
      gauss_(gauss_per_span) {
  if (!(t_ > 0.0)) throw std::invalid_argument("ShellPatch: thickness must be positive");
  const int pmax = std::max(surface_.kv_u().degree(), surface_.kv_v().degree());
  if (gauss_ <= 0) gauss_ = pmax + 1;
  if (gauss_ < pmax + 1)
    throw std::invalid_argument("ShellPatch: quadrature order must be >= degree+1");
  fixed_.assign(num_dofs(), false);
  build_quadrature();
}

void ShellPatch::build_quadrature() {
  qps_.clear();
  const auto gp = gauss_legendre_01(gauss_);
  const auto& tu = surface_.kv_u().knots();
  const auto& tv = surface_.kv_v().knots();
  for (size_t su = surface_.kv_u().degree();
       su + surface_.kv_u().degree() + 1 < tu.size(); ++su) {
    if (tu[su + 1] <= tu[su]) continue;
    for (size_t sv = surface_.kv_v().degree();
         sv + surface_.kv_v().degree() + 1 < tv.size(); ++sv) {
      if (tv[sv + 1] <= tv[sv]) continue;
      const double du = tu[su + 1] - tu[su], dv = tv[sv + 1] - tv[sv];
      for (auto& [xu, wu] : gp)
        for (auto& [xv, wv] : gp) {
          ShellQuadPoint q;
          q.xi = Vec2(tu[su] + du * xu, tv[sv] + dv * xv);
          q.weight = wu * wv * du * dv;
          q.basis = surface_.basis(q.xi, 2);
          qps_.push_back(std::move(q));
        }
    }
  }
}

void ShellPatch::clamp_edge(Edge e, int rows) {
  const int nu = surface_.n1(), nv = surface_.n2();
  for (int r = 0; r < rows; ++r) {
    if (e == Edge::UMin || e == Edge::UMax) {
      const int i = (e == Edge::UMin) ? r : nu - 1 - r;
      for (int j = 0; j < nv; ++j)
        for (int c = 0; c < 3; ++c) fixed_[3 * (i * nv + j) + c] = true;
    } else {
      const int j = (e == Edge::VMin) ? r : nv - 1 - r;
      for (int i = 0; i < nu; ++i)
        for (int c = 0; c < 3; ++c) fixed_[3 * (i * nv + j) + c] = true;
    }
  }
}

void ShellPatch::fix_edge_component(Edge e, int component, int rows) {
  const int nu = surface_.n1(), nv = surface_.n2();
  for (int r = 0; r < rows; ++r) {
    if (e == Edge::UMin || e == Edge::UMax) {
      const int i = (e == Edge::UMin) ? r : nu - 1 - r;
      for (int j = 0; j < nv; ++j) fixed_[3 * (i * nv + j) + component] = true;
    } else {
      const int j = (e == Edge::VMin) ? r : nv - 1 - r;
      for (int i = 0; i < nu; ++i) fixed_[3 * (i * nv + j) + component] = true;
    }
  }
}

VecX ShellPatch::flat_points() const {
  VecX p(num_dofs());
  for (int k = 0; k < num_points(); ++k)
    for (int c = 0; c < 3; ++c) p[3 * k + c] = surface_.control_points()(k, c);
  return p;
}

void ShellPatch::set_flat_points(const VecX& p) {
  MatX P(num_points(), 3);
  for (int k = 0; k < num_points(); ++k)
    for (int c = 0; c < 3; ++c) P(k, c) = p[3 * k + c];
  surface_.set_control_points(P);
}

namespace {

// Field-variable layout for the quadrature point integrand. Reference
// slots depend on control points only, displacement slots on d only;
// strains, energy density, and the load potential are evaluated on Jet2
// values seeded in these variables, and the chain back to control point
// and displacement dofs goes through the (constant) basis tables.
constexpr int kRefSlots = 5;   // A1 A2 X11 X12 X22
constexpr int kDispSlots = 6;  // u u1 u2 u11 u12 u22
constexpr int kRefVars = 3 * kRefSlots;
constexpr int kDispVars = 3 * kDispSlots;
constexpr int kAllVars = kRefVars + kDispVars;

template <class T>
struct Densities {
  T internal;   // internal energy density (per unit parametric area)
  T potential;  // internal + dead-load potential
};

template <class T>
Densities<T> shell_density(const V3<T>* ref, const V3<T>* disp,
                           const Material& mat, double t, const LoadSpec& load) {
  const V3<T>&A1 = ref[0], &A2 = ref[1], &X11 = ref[2], &X12 = ref[3], &X22 = ref[4];
  const V3<T>&u = disp[0], &u1 = disp[1], &u2 = disp[2], &u11 = disp[3],
      &u12 = disp[4], &u22 = disp[5];

  const V3<T> a1 = v3_add(A1, u1), a2 = v3_add(A2, u2);
  const V3<T> x11 = v3_add(X11, u11), x12 = v3_add(X12, u12), x22 = v3_add(X22, u22);

  const V3<T> cA = v3_cross(A1, A2);
  const T J0 = v3_norm(cA);
  const V3<T> A3 = v3_scale(cA, inverse(J0));
  const V3<T> a3 = v3_normalized(v3_cross(a1, a2));

  // membrane strain (Green-Lagrange of the metric)
  const T e11 = (v3_dot(a1, a1) - v3_dot(A1, A1)) * 0.5;
  const T e12 = (v3_dot(a1, a2) - v3_dot(A1, A2)) * 0.5;
  const T e22 = (v3_dot(a2, a2) - v3_dot(A2, A2)) * 0.5;

  // curvature change, with the deformed normal in the deformed term
  const T k11 = v3_dot(X11, A3) - v3_dot(x11, a3);
  const T k12 = v3_dot(X12, A3) - v3_dot(x12, a3);
  const T k22 = v3_dot(X22, A3) - v3_dot(x22, a3);

  // contravariant reference metric
  const T A11 = v3_dot(A1, A1), A12 = v3_dot(A1, A2), A22v = v3_dot(A2, A2);
  const T idet = inverse(A11 * A22v - A12 * A12);
  const T Ai11 = A22v * idet, Ai12 = -1.0 * A12 * idet, Ai22 = A11 * idet;

  // plane-stress St. Venant-Kirchhoff contraction s:C:s
  auto quad_form = [&](const T& s11, const T& s12, const T& s22) {
    const T tr = Ai11 * s11 + 2.0 * Ai12 * s12 + Ai22 * s22;
    const T m11 = Ai11 * (s11 * Ai11 + s12 * Ai12) + Ai12 * (s12 * Ai11 + s22 * Ai12);
    const T m12 = Ai11 * (s11 * Ai12 + s12 * Ai22) + Ai12 * (s12 * Ai12 + s22 * Ai22);
    const T m22 = Ai12 * (s11 * Ai12 + s12 * Ai22) + Ai22 * (s12 * Ai12 + s22 * Ai22);
    const T contr = m11 * s11 + 2.0 * m12 * s12 + m22 * s22;
    return mat.lambda_bar() * (tr * tr) + mat.two_mu() * contr;
  };

  Densities<T> out;
  const double tb = t * t * t / 12.0;
  out.internal =
      (0.5 * t * quad_form(e11, e12, e22) + 0.5 * tb * quad_form(k11, k12, k22)) * J0;
  out.potential = out.internal;
  if (load.kind == LoadKind::DeadPressure) {
    const T fu = u[0] * (load.magnitude * load.direction[0]) +
                 u[1] * (load.magnitude * load.direction[1]) +
                 u[2] * (load.magnitude * load.direction[2]);
    out.potential = out.potential - fu * J0;
  }
  return out;
}

struct FieldValues {
  Vec3 ref[kRefSlots];
  Vec3 disp[kDispSlots];
};

FieldValues gather_fields(const ShellQuadPoint& q, const MatX& P, const VecX& d) {
  FieldValues f;
  for (auto& v : f.ref) v.setZero();
  for (auto& v : f.disp) v.setZero();
  const SurfaceBasis& b = q.basis;
  for (int k = 0; k < b.count(); ++k) {
    const int idx = b.index(k);
    const Vec3 p = P.row(idx);
    const Vec3 dk(d[3 * idx], d[3 * idx + 1], d[3 * idx + 2]);
    f.ref[0] += b.N1[k] * p;
    f.ref[1] += b.N2[k] * p;
    f.ref[2] += b.N11[k] * p;
    f.ref[3] += b.N12[k] * p;
    f.ref[4] += b.N22[k] * p;
    f.disp[0] += b.N[k] * dk;
    f.disp[1] += b.N1[k] * dk;
    f.disp[2] += b.N2[k] * dk;
    f.disp[3] += b.N11[k] * dk;
    f.disp[4] += b.N12[k] * dk;
    f.disp[5] += b.N22[k] * dk;
  }
  return f;
}

// disp slot s interpolates with these basis vectors; ref slot s uses
// slot_basis(b, s+1) since reference fields start at the first derivative
inline const VecX& slot_basis(const SurfaceBasis& b, int slot) {
  switch (slot) {
    case 0: return b.N;
    case 1: return b.N1;
    case 2: return b.N2;
    case 3: return b.N11;
    case 4: return b.N12;
    default: return b.N22;
  }
}

void check_regular(double J0) {
  if (!(J0 > 1e-14))
    throw SingularGeometryError("shell: degenerate surface metric at quadrature point");
}

// follower pressure: external force p*(a1 x a2) per unit parametric area,
// with its configuration-dependent tangent (unsymmetric)
void add_follower_terms(const ShellQuadPoint& q, const FieldValues& f, double p,
                        VecX* R, MatX* K, MatX* dRdP) {
  const Vec3 a1 = f.ref[0] + f.disp[1];
  const Vec3 a2 = f.ref[1] + f.disp[2];
  const Vec3 n = a1.cross(a2);
  const SurfaceBasis& b = q.basis;
  const double w = q.weight;
  if (R) {
    for (int k = 0; k < b.count(); ++k) {
      const int idx = b.index(k);
      for (int c = 0; c < 3; ++c) (*R)[3 * idx + c] -= w * p * n[c] * b.N[k];
    }
  }
  if (K || dRdP) {
    Mat3 M1, M2;  // d(a1 x a2)/da1 = -skew(a2), d/da2 = skew(a1)
    M1 << 0, a2[2], -a2[1], -a2[2], 0, a2[0], a2[1], -a2[0], 0;
    M2 << 0, -a1[2], a1[1], a1[2], 0, -a1[0], -a1[1], a1[0], 0;
    for (int k = 0; k < b.count(); ++k) {
      const int rk = 3 * b.index(k);
      for (int l = 0; l < b.count(); ++l) {
        const int cl = 3 * b.index(l);
        const Mat3 block = -w * p * b.N[k] * (M1 * b.N1[l] + M2 * b.N2[l]);
        for (int c = 0; c < 3; ++c)
          for (int e = 0; e < 3; ++e) {
            if (K) (*K)(rk + c, cl + e) += block(c, e);
            if (dRdP) (*dRdP)(rk + c, cl + e) += block(c, e);
          }
      }
    }
  }
}

void dense_to_triplets(const MatX& M, std::vector<Triplet>& out) {
  for (int j = 0; j < M.cols(); ++j)
    for (int i = 0; i < M.rows(); ++i)
      if (M(i, j) != 0.0) out.emplace_back(i, j, M(i, j));
}

} // namespace

ShellKinematics kinematics_at(const ShellPatch& patch, const Vec2& xi,
                              const VecX& d) {
  const SurfaceBasis b = patch.surface().basis(xi, 2);
  ShellQuadPoint q{1.0, xi, b};
  const FieldValues f = gather_fields(q, patch.surface().control_points(), d);
  ShellKinematics k;
  k.A1 = f.ref[0];
  k.A2 = f.ref[1];
  k.a1 = f.ref[0] + f.disp[1];
  k.a2 = f.ref[1] + f.disp[2];
  const Vec3 cA = k.A1.cross(k.A2);
  check_regular(cA.norm());
  k.A3 = cA.normalized();
  k.a3 = k.a1.cross(k.a2).normalized();
  k.Aab << k.A1.dot(k.A1), k.A1.dot(k.A2), k.A1.dot(k.A2), k.A2.dot(k.A2);
  k.aab << k.a1.dot(k.a1), k.a1.dot(k.a2), k.a1.dot(k.a2), k.a2.dot(k.a2);
  const Vec3 X11 = f.ref[2], X12 = f.ref[3], X22 = f.ref[4];
  const Vec3 x11 = X11 + f.disp[3], x12 = X12 + f.disp[4], x22 = X22 + f.disp[5];
  k.Bab << X11.dot(k.A3), X12.dot(k.A3), X12.dot(k.A3), X22.dot(k.A3);
  k.bab << x11.dot(k.a3), x12.dot(k.a3), x12.dot(k.a3), x22.dot(k.a3);
  k.eps = 0.5 * (k.aab - k.Aab);
  k.kap = k.Bab - k.bab;
  return k;
}

PatchResult assemble_patch(const ShellPatch& patch, const VecX& d,
                           const PatchRequest& req) {
  const int nd = patch.num_dofs();
  if (d.size() != nd) throw std::invalid_argument("assemble_patch: d size mismatch");
  const MatX& P = patch.surface().control_points();
  const Material& mat = patch.material();
  const LoadSpec& load = patch.load();
  const double t = patch.thickness();

  PatchResult out;
  const bool need_jet33 = req.dR_dP || req.objective;
  const bool need_jet18 = !need_jet33 && (req.residual || req.stiffness);
  MatX Kd, dRdPd;
  if (req.residual) out.residual = VecX::Zero(nd);
  if (req.stiffness) Kd = MatX::Zero(nd, nd);
  if (req.dR_dP) dRdPd = MatX::Zero(nd, nd);
  if (req.objective) {
    out.obj_grad_d = VecX::Zero(nd);
    out.obj_grad_P = VecX::Zero(nd);
  }

  using J18 = Jet2<kDispVars>;
  using J33 = Jet2<kAllVars>;

  for (const auto& q : patch.quadrature()) {
    const FieldValues f = gather_fields(q, P, d);
    check_regular(f.ref[0].cross(f.ref[1]).norm());
    const SurfaceBasis& b = q.basis;
    const int cnt = b.count();
    const double w = q.weight;

    if (need_jet33) {
      V3<J33> ref[kRefSlots], disp[kDispSlots];
      for (int s = 0; s < kRefSlots; ++s)
        for (int c = 0; c < 3; ++c)
          ref[s][c] = J33::variable(f.ref[s][c], 3 * s + c);
      for (int s = 0; s < kDispSlots; ++s)
        for (int c = 0; c < 3; ++c)
          disp[s][c] = J33::variable(f.disp[s][c], kRefVars + 3 * s + c);
      const Densities<J33> dens = shell_density(ref, disp, mat, t, load);
      out.internal_energy += w * dens.internal.v;
      out.potential_energy += w * dens.potential.v;

      if (req.residual) {
        for (int k = 0; k < cnt; ++k) {
          const int idx = b.index(k);
          for (int s = 0; s < kDispSlots; ++s) {
            const double bs = slot_basis(b, s)[k];
            if (bs == 0.0) continue;
            for (int c = 0; c < 3; ++c)
              out.residual[3 * idx + c] +=
                  w * bs * dens.potential.g[kRefVars + 3 * s + c];
          }
        }
      }
      if (req.objective) {
        for (int k = 0; k < cnt; ++k) {
          const int idx = b.index(k);
          for (int s = 0; s < kDispSlots; ++s) {
            const double bs = slot_basis(b, s)[k];
            for (int c = 0; c < 3; ++c)
              out.obj_grad_d[3 * idx + c] +=
                  w * bs * dens.internal.g[kRefVars + 3 * s + c];
          }
          for (int s = 0; s < kRefSlots; ++s) {
            const double bs = slot_basis(b, s + 1)[k];
            for (int c = 0; c < 3; ++c)
              out.obj_grad_P[3 * idx + c] += w * bs * dens.internal.g[3 * s + c];
          }
        }
      }
      if (req.stiffness || req.dR_dP) {
        for (int k = 0; k < cnt; ++k) {
          const int rk = 3 * b.index(k);
          for (int s = 0; s < kDispSlots; ++s) {
            const double bk = slot_basis(b, s)[k];
            if (bk == 0.0) continue;
            for (int l = 0; l < cnt; ++l) {
              const int cl = 3 * b.index(l);
              if (req.stiffness) {
                for (int s2 = 0; s2 < kDispSlots; ++s2) {
                  const double bl = slot_basis(b, s2)[l];
                  if (bl == 0.0) continue;
                  const double cw = w * bk * bl;
                  for (int c = 0; c < 3; ++c)
                    for (int e = 0; e < 3; ++e)
                      Kd(rk + c, cl + e) += cw * dens.potential.h(
                                                kRefVars + 3 * s + c,
                                                kRefVars + 3 * s2 + e);
                }
              }
              if (req.dR_dP) {
                for (int s2 = 0; s2 < kRefSlots; ++s2) {
                  const double bl = slot_basis(b, s2 + 1)[l];
                  if (bl == 0.0) continue;
                  const double cw = w * bk * bl;
                  for (int c = 0; c < 3; ++c)
                    for (int e = 0; e < 3; ++e)
                      dRdPd(rk + c, cl + e) +=
                          cw * dens.potential.h(kRefVars + 3 * s + c, 3 * s2 + e);
                }
              }
            }
          }
        }
      }
    } else if (need_jet18) {
      V3<J18> ref[kRefSlots], disp[kDispSlots];
      for (int s = 0; s < kRefSlots; ++s)
        for (int c = 0; c < 3; ++c) ref[s][c] = J18(f.ref[s][c]);
      for (int s = 0; s < kDispSlots; ++s)
        for (int c = 0; c < 3; ++c)
          disp[s][c] = J18::variable(f.disp[s][c], 3 * s + c);
      const Densities<J18> dens = shell_density(ref, disp, mat, t, load);
      out.internal_energy += w * dens.internal.v;
      out.potential_energy += w * dens.potential.v;
      if (req.residual) {
        for (int k = 0; k < cnt; ++k) {
          const int idx = b.index(k);
          for (int s = 0; s < kDispSlots; ++s) {
            const double bs = slot_basis(b, s)[k];
            if (bs == 0.0) continue;
            for (int c = 0; c < 3; ++c)
              out.residual[3 * idx + c] += w * bs * dens.potential.g[3 * s + c];
          }
        }
      }
      if (req.stiffness) {
        for (int k = 0; k < cnt; ++k) {
          const int rk = 3 * b.index(k);
          for (int s = 0; s < kDispSlots; ++s) {
            const double bk = slot_basis(b, s)[k];
            if (bk == 0.0) continue;
            for (int l = 0; l < cnt; ++l) {
              const int cl = 3 * b.index(l);
              for (int s2 = 0; s2 < kDispSlots; ++s2) {
                const double bl = slot_basis(b, s2)[l];
                if (bl == 0.0) continue;
                const double cw = w * bk * bl;
                for (int c = 0; c < 3; ++c)
                  for (int e = 0; e < 3; ++e)
                    Kd(rk + c, cl + e) +=
                        cw * dens.potential.h(3 * s + c, 3 * s2 + e);
              }
            }
          }
        }
      }
    } else {
      V3<double> ref[kRefSlots], disp[kDispSlots];
      for (int s = 0; s < kRefSlots; ++s)
        for (int c = 0; c < 3; ++c) ref[s][c] = f.ref[s][c];
      for (int s = 0; s < kDispSlots; ++s)
        for (int c = 0; c < 3; ++c) disp[s][c] = f.disp[s][c];
      const Densities<double> dens = shell_density(ref, disp, mat, t, load);
      out.internal_energy += w * dens.internal;
      out.potential_energy += w * dens.potential;
    }

    if (load.kind == LoadKind::FollowerPressure) {
      add_follower_terms(q, f, load.magnitude,
                         req.residual ? &out.residual : nullptr,
                         req.stiffness ? &Kd : nullptr,
                         req.dR_dP ? &dRdPd : nullptr);
    }
  }

  if (req.stiffness) dense_to_triplets(Kd, out.stiffness);
  if (req.dR_dP) dense_to_triplets(dRdPd, out.dR_dP);
  return out;
}

double patch_internal_energy(const ShellPatch& patch, const VecX& d) {
  return assemble_patch(patch, d, {}).internal_energy;
}

VecX patch_residual(const ShellPatch& patch, const VecX& d) {
  PatchRequest req;
  req.residual = true;
  VecX R = assemble_patch(patch, d, req).residual;
  for (int i = 0; i < R.size(); ++i)
    if (patch.fixed()[i]) R[i] = 0.0;
  return R;
}

SpMat patch_stiffness(const ShellPatch& patch, const VecX& d) {
  PatchRequest req;
  req.stiffness = true;
  PatchResult r = assemble_patch(patch, d, req);
  std::vector<Triplet> ts;
  ts.reserve(r.stiffness.size());
  for (const auto& t : r.stiffness)
    if (!patch.fixed()[t.row()] && !patch.fixed()[t.col()]) ts.push_back(t);
  for (int i = 0; i < patch.num_dofs(); ++i)
    if (patch.fixed()[i]) ts.emplace_back(i, i, 1.0);
  return from_triplets(patch.num_dofs(), patch.num_dofs(), ts);
}

VecX patch_newton_solve(const ShellPatch& patch, double rtol, double atol,
                        int max_iter) {
  VecX d = VecX::Zero(patch.num_dofs());
  double r0 = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    const VecX R = patch_residual(patch, d);
    const double rn = R.lpNorm<Eigen::Infinity>();
    if (it == 0) r0 = rn;
    if (rn < std::max(atol, rtol * r0)) return d;
    SpMat K = patch_stiffness(patch, d);
    Eigen::SparseLU<SpMat> lu(K);
    if (lu.info() != Eigen::Success)
      throw SolverError("patch_newton_solve: singular tangent");
    const VecX step = lu.solve(R);
    d -= step;
    // roundoff floor: the update no longer moves the iterate
    if (step.lpNorm<Eigen::Infinity>() <
        1e-11 * (1.0 + d.lpNorm<Eigen::Infinity>()))
      return d;
  }
  throw SolverError("patch_newton_solve: no convergence within iteration cap");
}

double patch_area(const ShellPatch& patch, VecX* grad) {
  double area = 0.0;
  if (grad) *grad = VecX::Zero(patch.num_dofs());
  const MatX& P = patch.surface().control_points();
  for (const auto& q : patch.quadrature()) {
    Vec3 A1 = Vec3::Zero(), A2 = Vec3::Zero();
    const SurfaceBasis& b = q.basis;
    for (int k = 0; k < b.count(); ++k) {
      const Vec3 p = P.row(b.index(k));
      A1 += b.N1[k] * p;
      A2 += b.N2[k] * p;
    }
    const Vec3 n = A1.cross(A2);
    const double J0 = n.norm();
    check_regular(J0);
    area += q.weight * J0;
    if (grad) {
      const Vec3 nh = n / J0;
      // d|A1 x A2| = (A2 x nh) . dA1 + (nh x A1) . dA2
      const Vec3 g1 = A2.cross(nh), g2 = nh.cross(A1);
      for (int k = 0; k < b.count(); ++k) {
        const int idx = b.index(k);
        for (int c = 0; c < 3; ++c)
          (*grad)[3 * idx + c] += q.weight * (b.N1[k] * g1[c] + b.N2[k] * g2[c]);
      }
    }
  }
  return area;
}

} // namespace shellopt
