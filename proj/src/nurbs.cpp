// SPDX-License-Identifier: Apache-2.0
#include "shellopt/nurbs.hpp"

#include <cmath>
#include <stdexcept>

#include "shellopt/errors.hpp"

namespace shellopt {

NurbsSurface::NurbsSurface(KnotVector kv_u, KnotVector kv_v, MatX control_points,
                           VecX weights)
    : kv_u_(std::move(kv_u)), kv_v_(std::move(kv_v)),
      P_(std::move(control_points)), w_(std::move(weights)) {
  const int n = n1() * n2();
  if (P_.rows() != n || P_.cols() != 3)
    throw std::invalid_argument("NurbsSurface: control net size inconsistent with knots");
  if (w_.size() != n)
    throw std::invalid_argument("NurbsSurface: weight count inconsistent");
  for (int i = 0; i < n; ++i)
    if (!(w_[i] > 0.0))
      throw std::invalid_argument("NurbsSurface: weights must be positive");
}

NurbsSurface NurbsSurface::flat_rectangle(const KnotVector& kv_u,
                                          const KnotVector& kv_v, double x0,
                                          double x1, double y0, double y1) {
  const auto gu = kv_u.greville();
  const auto gv = kv_v.greville();
  MatX P(kv_u.num_basis() * kv_v.num_basis(), 3);
  for (int i = 0; i < kv_u.num_basis(); ++i)
    for (int j = 0; j < kv_v.num_basis(); ++j)
      P.row(i * kv_v.num_basis() + j) =
          Vec3(x0 + (x1 - x0) * gu[i], y0 + (y1 - y0) * gv[j], 0.0);
  return NurbsSurface(kv_u, kv_v, P, VecX::Ones(P.rows()));
}

void NurbsSurface::set_control_points(const MatX& P) {
  if (P.rows() != P_.rows() || P.cols() != 3)
    throw std::invalid_argument("set_control_points: size mismatch");
  P_ = P;
}

SurfaceBasis NurbsSurface::basis(const Vec2& xi, int max_deriv, bool extend) const {
  SurfaceBasis b;
  // Derivatives beyond a direction's degree vanish identically.
  MatX du_m = kv_u_.basis_derivatives(xi[0], std::min(max_deriv, kv_u_.degree()),
                                      &b.first_u, extend);
  MatX dv_m = kv_v_.basis_derivatives(xi[1], std::min(max_deriv, kv_v_.degree()),
                                      &b.first_v, extend);
  auto du = [&](int k, int a) { return k < du_m.rows() ? du_m(k, a) : 0.0; };
  auto dv = [&](int k, int a) { return k < dv_m.rows() ? dv_m(k, a) : 0.0; };
  b.nu = kv_u_.degree() + 1;
  b.nv = kv_v_.degree() + 1;
  b.n2 = n2();
  const int cnt = b.count();

  // Homogeneous sums W, W_u, W_v, W_uu, W_uv, W_vv.
  auto wsum = [&](int ku, int kv) {
    double s = 0.0;
    for (int a = 0; a < b.nu; ++a)
      for (int c = 0; c < b.nv; ++c)
        s += du(ku, a) * dv(kv, c) * w_[(b.first_u + a) * b.n2 + (b.first_v + c)];
    return s;
  };
  const double W = wsum(0, 0);
  b.N.resize(cnt);
  auto wN = [&](int k, int ku, int kv) {
    const int a = k / b.nv, c = k % b.nv;
    return du(ku, a) * dv(kv, c) * w_[b.index(k)];
  };
  for (int k = 0; k < cnt; ++k) b.N[k] = wN(k, 0, 0) / W;

  if (max_deriv >= 1) {
    const double Wu = wsum(1, 0), Wv = wsum(0, 1);
    b.N1.resize(cnt);
    b.N2.resize(cnt);
    for (int k = 0; k < cnt; ++k) {
      const double f = wN(k, 0, 0);
      b.N1[k] = wN(k, 1, 0) / W - f * Wu / (W * W);
      b.N2[k] = wN(k, 0, 1) / W - f * Wv / (W * W);
    }
    if (max_deriv >= 2) {
      const double Wuu = wsum(2, 0), Wuv = wsum(1, 1), Wvv = wsum(0, 2);
      b.N11.resize(cnt);
      b.N12.resize(cnt);
      b.N22.resize(cnt);
      auto second = [&](double fab, double fa, double fb, double f, double Wa,
                        double Wb, double Wab) {
        return fab / W - fa * Wb / (W * W) - fb * Wa / (W * W) -
               f * Wab / (W * W) + 2.0 * f * Wa * Wb / (W * W * W);
      };
      for (int k = 0; k < cnt; ++k) {
        const double f = wN(k, 0, 0), fu = wN(k, 1, 0), fv = wN(k, 0, 1);
        b.N11[k] = second(wN(k, 2, 0), fu, fu, f, Wu, Wu, Wuu);
        b.N12[k] = second(wN(k, 1, 1), fu, fv, f, Wu, Wv, Wuv);
        b.N22[k] = second(wN(k, 0, 2), fv, fv, f, Wv, Wv, Wvv);
      }
    }
  }
  return b;
}

SurfacePoint NurbsSurface::evaluate(const Vec2& xi, int max_deriv,
                                    bool extend) const {
  const SurfaceBasis b = basis(xi, max_deriv, extend);
  SurfacePoint s;
  for (int k = 0; k < b.count(); ++k) {
    const Vec3 p = P_.row(b.index(k));
    s.X += b.N[k] * p;
    if (max_deriv >= 1) {
      s.X1 += b.N1[k] * p;
      s.X2 += b.N2[k] * p;
    }
    if (max_deriv >= 2) {
      s.X11 += b.N11[k] * p;
      s.X12 += b.N12[k] * p;
      s.X22 += b.N22[k] * p;
    }
  }
  return s;
}

NurbsSurface NurbsSurface::rebased(int direction, const KnotVector& fine,
                                   MatX* map) const {
  const KnotVector& coarse = (direction == 0) ? kv_u_ : kv_v_;
  const MatX M1 = subdivision_matrix(coarse, fine);
  const MatX Mu = (direction == 0) ? M1 : MatX(MatX::Identity(n1(), n1()));
  const MatX Mv = (direction == 1) ? M1 : MatX(MatX::Identity(n2(), n2()));

  const int m1 = static_cast<int>(Mu.rows()), m2 = static_cast<int>(Mv.rows());
  // Homogeneous refinement: weights folded in so the map stays linear for
  // rational surfaces.
  MatX Pw(num_points(), 4);
  for (int k = 0; k < num_points(); ++k) {
    Pw.row(k).head<3>() = P_.row(k) * w_[k];
    Pw(k, 3) = w_[k];
  }
  MatX Pw_new = MatX::Zero(m1 * m2, 4);
  for (int i = 0; i < m1; ++i)
    for (int a = 0; a < n1(); ++a) {
      if (Mu(i, a) == 0.0) continue;
      for (int j = 0; j < m2; ++j)
        for (int c = 0; c < n2(); ++c) {
          const double w = Mu(i, a) * Mv(j, c);
          if (w != 0.0) Pw_new.row(i * m2 + j) += w * Pw.row(a * n2() + c);
        }
    }
  MatX Pn(m1 * m2, 3);
  VecX wn(m1 * m2);
  for (int k = 0; k < m1 * m2; ++k) {
    wn[k] = Pw_new(k, 3);
    Pn.row(k) = Pw_new.row(k).head<3>() / wn[k];
  }
  NurbsSurface out((direction == 0) ? fine : kv_u_,
                   (direction == 1) ? fine : kv_v_, Pn, wn);
  if (map) *map = (direction == 0) ? Mu : Mv;
  return out;
}

NurbsSurface NurbsSurface::insert_knots(int direction,
                                        const std::vector<double>& new_knots,
                                        MatX* map) const {
  const KnotVector& kv = (direction == 0) ? kv_u_ : kv_v_;
  if (new_knots.empty()) {
    if (map) *map = MatX::Identity(kv.num_basis(), kv.num_basis());
    return *this;
  }
  return rebased(direction, kv.inserted(new_knots), map);
}

NurbsSurface NurbsSurface::elevate_order(int direction, int times,
                                         MatX* map) const {
  const KnotVector& kv = (direction == 0) ? kv_u_ : kv_v_;
  return rebased(direction, kv.elevated(times), map);
}

MatX RefinementMap::apply(const MatX& coarse_points) const {
  MatX Pw(coarse_points.rows(), 4);
  for (int k = 0; k < coarse_points.rows(); ++k) {
    Pw.row(k).head<3>() = coarse_points.row(k) * coarse_weights[k];
    Pw(k, 3) = coarse_weights[k];
  }
  MatX out = matrix * Pw;
  MatX P(out.rows(), 3);
  for (int k = 0; k < out.rows(); ++k) P.row(k) = out.row(k).head<3>() / out(k, 3);
  return P;
}

RefinementMap make_refinement_map(const NurbsSurface& coarse,
                                  const NurbsSurface& fine, const MatX& Mu,
                                  const MatX& Mv) {
  RefinementMap rm;
  rm.coarse_weights = coarse.weights();
  rm.fine_weights = fine.weights();
  std::vector<Triplet> ts;
  const int m2 = static_cast<int>(Mv.rows());
  const int n2 = static_cast<int>(Mv.cols());
  for (int i = 0; i < Mu.rows(); ++i)
    for (int a = 0; a < Mu.cols(); ++a) {
      if (std::abs(Mu(i, a)) < 1e-300) continue;
      for (int j = 0; j < m2; ++j)
        for (int c = 0; c < n2; ++c) {
          const double w = Mu(i, a) * Mv(j, c);
          if (w != 0.0) ts.emplace_back(i * m2 + j, a * n2 + c, w);
        }
    }
  rm.matrix = from_triplets(static_cast<int>(Mu.rows()) * m2,
                            static_cast<int>(Mu.cols()) * n2, ts);
  return rm;
}

// --- BsplineVolume ---

BsplineVolume::BsplineVolume(KnotVector u, KnotVector v, KnotVector w,
                             MatX control_points)
    : kv_{std::move(u), std::move(v), std::move(w)}, Q_(std::move(control_points)) {
  if (Q_.rows() != num_points() || Q_.cols() != 3)
    throw std::invalid_argument("BsplineVolume: control grid inconsistent with knots");
}

BsplineVolume BsplineVolume::identity_box(const KnotVector& u, const KnotVector& v,
                                          const KnotVector& w, const Vec3& lo,
                                          const Vec3& hi) {
  const auto gu = u.greville(), gv = v.greville(), gw = w.greville();
  MatX Q(u.num_basis() * v.num_basis() * w.num_basis(), 3);
  int r = 0;
  for (double a : gu)
    for (double b : gv)
      for (double c : gw)
        Q.row(r++) = Vec3(lo[0] + (hi[0] - lo[0]) * a, lo[1] + (hi[1] - lo[1]) * b,
                          lo[2] + (hi[2] - lo[2]) * c);
  return BsplineVolume(u, v, w, Q);
}

void BsplineVolume::set_control_points(const MatX& Q) {
  if (Q.rows() != Q_.rows() || Q.cols() != 3)
    throw std::invalid_argument("set_control_points: size mismatch");
  Q_ = Q;
}

void BsplineVolume::basis_row(const Vec3& eta,
                              std::vector<std::pair<int, double>>& out) const {
  out.clear();
  int f[3];
  MatX d[3];
  for (int dir = 0; dir < 3; ++dir)
    d[dir] = kv_[dir].basis_derivatives(eta[dir], 0, &f[dir]);
  const int n2 = size(1), n3 = size(2);
  for (int a = 0; a <= kv_[0].degree(); ++a)
    for (int b = 0; b <= kv_[1].degree(); ++b)
      for (int c = 0; c <= kv_[2].degree(); ++c) {
        const int idx = ((f[0] + a) * n2 + (f[1] + b)) * n3 + (f[2] + c);
        out.emplace_back(idx, d[0](0, a) * d[1](0, b) * d[2](0, c));
      }
}

Vec3 BsplineVolume::evaluate(const Vec3& eta) const {
  std::vector<std::pair<int, double>> row;
  basis_row(eta, row);
  Vec3 x = Vec3::Zero();
  for (auto& [i, val] : row) x += val * Vec3(Q_.row(i));
  return x;
}

Mat3 BsplineVolume::jacobian(const Vec3& eta) const {
  int f[3];
  MatX d[3];
  for (int dir = 0; dir < 3; ++dir)
    d[dir] = kv_[dir].basis_derivatives(eta[dir], 1, &f[dir]);
  const int n2 = size(1), n3 = size(2);
  Mat3 J = Mat3::Zero();
  for (int a = 0; a <= kv_[0].degree(); ++a)
    for (int b = 0; b <= kv_[1].degree(); ++b)
      for (int c = 0; c <= kv_[2].degree(); ++c) {
        const int idx = ((f[0] + a) * n2 + (f[1] + b)) * n3 + (f[2] + c);
        const Vec3 q = Q_.row(idx);
        J.col(0) += d[0](1, a) * d[1](0, b) * d[2](0, c) * q;
        J.col(1) += d[0](0, a) * d[1](1, b) * d[2](0, c) * q;
        J.col(2) += d[0](0, a) * d[1](0, b) * d[2](1, c) * q;
      }
  return J;
}

Vec3 BsplineVolume::invert(const Vec3& x, double tol) const {
  auto clamp01 = [](Vec3 e) {
    for (int i = 0; i < 3; ++i) e[i] = std::min(1.0, std::max(0.0, e[i]));
    return e;
  };
  const int grid = 4;
  // Starts ordered by residual so the best seed is tried first.
  std::vector<std::pair<double, Vec3>> starts;
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b)
      for (int c = 0; c < grid; ++c) {
        Vec3 eta((a + 0.5) / grid, (b + 0.5) / grid, (c + 0.5) / grid);
        starts.emplace_back((evaluate(eta) - x).norm(), eta);
      }
  std::sort(starts.begin(), starts.end(),
            [](auto& l, auto& r) { return l.first < r.first; });

  for (auto& [r0, eta0] : starts) {
    Vec3 eta = eta0;
    double res = (evaluate(eta) - x).norm();
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      if (res < tol) {
        ok = true;
        break;
      }
      const Vec3 f = evaluate(eta) - x;
      const Mat3 J = jacobian(eta);
      const Vec3 step = J.fullPivLu().solve(-f);
      double alpha = 1.0;
      Vec3 next = eta;
      double next_res = res;
      for (int ls = 0; ls < 20; ++ls) {
        Vec3 trial = clamp01(eta + alpha * step);
        const double tr = (evaluate(trial) - x).norm();
        if (tr < res) {
          next = trial;
          next_res = tr;
          break;
        }
        alpha *= 0.5;
      }
      if (next_res >= res) break;  // stalled, try next start
      eta = next;
      res = next_res;
    }
    if (res < tol) return eta;
    if (ok) return eta;
  }
  throw EmbeddingError("BsplineVolume::invert: no start converged (point outside block?)");
}

} // namespace shellopt
