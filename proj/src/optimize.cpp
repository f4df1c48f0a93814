// SPDX-License-Identifier: Apache-2.0
#include "shellopt/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "shellopt/errors.hpp"

namespace shellopt {

namespace {

VecX project_bounds(VecX z, const VecX& lo, const VecX& hi) {
  for (int i = 0; i < z.size(); ++i) z[i] = std::clamp(z[i], lo[i], hi[i]);
  return z;
}

} // namespace

QpResult solve_qp(const MatX& B, const VecX& g, const MatX& Je, const VecX& be,
                  const MatX& Ji, const VecX& bi, const VecX& lo,
                  const VecX& hi) {
  const int n = static_cast<int>(g.size());
  const int me = static_cast<int>(Je.rows());
  const int mi = static_cast<int>(Ji.rows());

  // inequality rows in a(p) >= 0 form: [Ji p - bi; p - lo; hi - p]
  const int mall = mi + 2 * n;
  auto ineq_row = [&](int r) -> VecX {
    VecX row = VecX::Zero(n);
    if (r < mi)
      row = Ji.row(r);
    else if (r < mi + n)
      row[r - mi] = 1.0;
    else
      row[r - mi - n] = -1.0;
    return row;
  };
  auto ineq_rhs = [&](int r) {
    if (r < mi) return bi[r];
    if (r < mi + n) return lo[r - mi];
    return -hi[r - mi - n];
  };

  std::vector<bool> active(mall, false);
  // start from bounds that are already tight
  for (int i = 0; i < n; ++i)
    if (hi[i] - lo[i] < 1e-15) active[mi + i] = true;

  QpResult out;
  out.lambda_ineq = VecX::Zero(mall);
  VecX p = VecX::Zero(n);
  for (int iter = 0; iter < 20 * (n + mall) + 20; ++iter) {
    std::vector<int> act;
    for (int r = 0; r < mall; ++r)
      if (active[r]) act.push_back(r);
    const int ma = me + static_cast<int>(act.size());
    MatX A(ma, n);
    VecX b(ma);
    for (int r = 0; r < me; ++r) {
      A.row(r) = Je.row(r);
      b[r] = be[r];
    }
    for (size_t k = 0; k < act.size(); ++k) {
      A.row(me + static_cast<int>(k)) = ineq_row(act[k]);
      b[me + static_cast<int>(k)] = ineq_rhs(act[k]);
    }

    VecX p0 = VecX::Zero(n);
    MatX Z;
    if (ma > 0) {
      Eigen::CompleteOrthogonalDecomposition<MatX> cod(A);
      cod.setThreshold(1e-12);
      p0 = cod.solve(b);  // least-squares for redundant rows
      const int rank = static_cast<int>(cod.rank());
      if (rank < n) {
        // null space basis from the full orthogonal factor
        const MatX Q = cod.householderQ() * MatX::Identity(n, n);
        // rows of A in terms of cod: A P = Q [T 0; 0 0]; null space of A
        // spanned by the last n-rank columns of P * Z2 ... use kernel()
        Eigen::FullPivLU<MatX> lu(A);
        lu.setThreshold(1e-12);
        Z = lu.kernel();
      } else {
        Z = MatX::Zero(n, 0);
      }
    } else {
      Z = MatX::Identity(n, n);
    }

    if (Z.cols() > 0) {
      const MatX H = Z.transpose() * B * Z;
      const VecX rhs = -(Z.transpose() * (g + B * p0));
      const VecX q = H.ldlt().solve(rhs);
      p = p0 + Z * q;
    } else {
      p = p0;
    }

    // multipliers from the stationarity residual
    VecX lam = VecX::Zero(ma);
    if (ma > 0) {
      MatX At = A.transpose();
      Eigen::CompleteOrthogonalDecomposition<MatX> cod(At);
      cod.setThreshold(1e-12);
      lam = cod.solve(VecX(g + B * p));
    }

    // most violated inactive inequality
    int worst = -1;
    double worst_v = -1e-9;
    for (int r = 0; r < mall; ++r) {
      if (active[r]) continue;
      const double v = ineq_row(r).dot(p) - ineq_rhs(r);
      if (v < worst_v) {
        worst_v = v;
        worst = r;
      }
    }
    if (worst >= 0) {
      active[worst] = true;
      continue;
    }

    // most negative multiplier among active inequalities
    int drop = -1;
    double drop_v = -1e-9;
    for (size_t k = 0; k < act.size(); ++k) {
      const double l = lam[me + static_cast<int>(k)];
      if (l < drop_v && hi.size() &&
          !(act[k] >= mi && act[k] < mi + n && hi[act[k] - mi] - lo[act[k] - mi] < 1e-15)) {
        drop_v = l;
        drop = act[k];
      }
    }
    if (drop >= 0) {
      active[drop] = false;
      continue;
    }

    out.p = p;
    out.lambda_eq = lam.head(me);
    for (size_t k = 0; k < act.size(); ++k)
      out.lambda_ineq[act[k]] = lam[me + static_cast<int>(k)];
    return out;
  }
  out.p = p;
  out.lambda_eq = VecX::Zero(me);
  return out;
}

ShapeOptimization::ShapeOptimization(OptimizationProblem problem)
    : problem_(std::move(problem)) {}

ShapeOptimization::AssemblyState ShapeOptimization::save_state() const {
  AssemblyState s;
  const auto& asmb = problem_.design->assembly();
  for (int k = 0; k < asmb.num_intersections(); ++k)
    s.intersections.push_back(asmb.intersection(k));
  s.warm_d = warm_d_;
  return s;
}

void ShapeOptimization::restore_state(const AssemblyState& s) {
  auto& asmb = problem_.design->assembly();
  for (int k = 0; k < asmb.num_intersections(); ++k) {
    asmb.intersection(k) = s.intersections[k];
    asmb.refresh_intersection(k);
  }
  warm_d_ = s.warm_d;
}

EvaluateResult ShapeOptimization::evaluate(const VecX& z, bool with_gradients) {
  auto& asmb = problem_.design->assembly();
  problem_.design->apply(z);
  asmb.solve_all_coordinates();
  VecX d0 = warm_d_.size() == asmb.num_dofs() ? warm_d_ : VecX();
  EvaluateResult ev;
  ev.d = asmb.newton_solve(d0);
  warm_d_ = ev.d;
  ev.coord_residual = asmb.max_coordinate_residual();

  const SpMat dPdz = problem_.design->jacobian(z);
  ConstraintState cs;
  cs.asmb = &asmb;
  cs.z = &z;
  cs.dPdz = &dPdz;

  if (with_gradients) {
    const SensitivityWorkspace ws = total_design_derivative(asmb, ev.d);
    ev.f = ws.res.internal_energy;
    ev.grad = dPdz.transpose() * ws.total;
  } else {
    ev.f = asmb.internal_energy(ev.d);
  }

  std::vector<VecX> ce_v, ci_v;
  std::vector<MatX> ce_g, ci_g;
  const int nz = problem_.design->num_vars();
  for (const auto& c : problem_.constraints) {
    VecX v;
    MatX g;
    c->eval(cs, v, g);
    if (c->equality()) {
      ce_v.push_back(v);
      ce_g.push_back(g);
    } else {
      ci_v.push_back(v);
      ci_g.push_back(g);
    }
  }
  auto stack = [&](const std::vector<VecX>& vs, const std::vector<MatX>& gs,
                   VecX& v, MatX& g) {
    int total = 0;
    for (const auto& x : vs) total += static_cast<int>(x.size());
    v.resize(total);
    g.resize(total, nz);
    int at = 0;
    for (size_t i = 0; i < vs.size(); ++i) {
      v.segment(at, vs[i].size()) = vs[i];
      g.block(at, 0, gs[i].rows(), nz) = gs[i];
      at += static_cast<int>(vs[i].size());
    }
  };
  stack(ce_v, ce_g, ev.ce, ev.Je);
  stack(ci_v, ci_g, ev.ci, ev.Ji);
  return ev;
}

IterateRecord ShapeOptimization::make_record(int it, const VecX& z,
                                             const EvaluateResult& ev,
                                             const VecX& kkt_residual) const {
  IterateRecord rec;
  rec.iteration = it;
  rec.z = z;
  rec.objective = ev.f;
  rec.normalized = ev.f / problem_.energy_reference;
  rec.grad_norm = kkt_residual.size() ? kkt_residual.lpNorm<Eigen::Infinity>()
                                      : ev.grad.lpNorm<Eigen::Infinity>();
  double viol = 0.0;
  for (int i = 0; i < ev.ce.size(); ++i) viol = std::max(viol, std::abs(ev.ce[i]));
  for (int i = 0; i < ev.ci.size(); ++i) viol = std::max(viol, std::max(0.0, -ev.ci[i]));
  rec.violation = viol;
  rec.coord_residual = ev.coord_residual;
  const auto& asmb = problem_.design->assembly();
  for (int k = 0; k < asmb.num_intersections(); ++k)
    rec.coords.push_back(asmb.intersection(k).mesh.stacked());
  return rec;
}

OptimizationOutcome ShapeOptimization::run(const VecX& z0) {
  const SqpSettings& st = problem_.settings;
  const int n = problem_.design->num_vars();
  OptimizationOutcome out;

  VecX z = project_bounds(z0, problem_.lower, problem_.upper);
  EvaluateResult ev = evaluate(z, true);
  AssemblyState accepted = save_state();

  MatX B = MatX::Identity(n, n);
  bool b_scaled = false;
  double rho = 1.0;

  auto merit = [&](const EvaluateResult& e) {
    double viol = 0.0;
    for (int i = 0; i < e.ce.size(); ++i) viol += std::abs(e.ce[i]);
    for (int i = 0; i < e.ci.size(); ++i) viol += std::max(0.0, -e.ci[i]);
    return e.f + rho * viol;
  };

  out.history.push_back(make_record(0, z, ev, VecX()));
  if (on_iterate) on_iterate(out.history.back());

  for (int it = 1; it <= st.max_iter; ++it) {
    QpResult qp = solve_qp(B, ev.grad, ev.Je, VecX(-ev.ce), ev.Ji,
                                 VecX(-ev.ci), VecX(problem_.lower - z),
                                 VecX(problem_.upper - z));

    // KKT residual with projection onto the active bounds
    VecX kkt = ev.grad;
    if (ev.Je.rows()) kkt -= ev.Je.transpose() * qp.lambda_eq;
    const int mi = static_cast<int>(ev.Ji.rows());
    for (int r = 0; r < mi; ++r)
      if (qp.lambda_ineq[r] != 0.0) kkt -= qp.lambda_ineq[r] * VecX(ev.Ji.row(r));
    for (int i = 0; i < n; ++i) {
      if (z[i] <= problem_.lower[i] + 1e-14 && kkt[i] > 0) kkt[i] = 0.0;
      if (z[i] >= problem_.upper[i] - 1e-14 && kkt[i] < 0) kkt[i] = 0.0;
    }
    double viol = 0.0;
    for (int i = 0; i < ev.ce.size(); ++i) viol = std::max(viol, std::abs(ev.ce[i]));
    for (int i = 0; i < ev.ci.size(); ++i)
      viol = std::max(viol, std::max(0.0, -ev.ci[i]));

    if (kkt.lpNorm<Eigen::Infinity>() < st.kkt_tol && viol < st.feas_tol) {
      out.converged = true;
      out.message = "optimality and feasibility tolerances reached";
      break;
    }
    if (qp.p.lpNorm<Eigen::Infinity>() < st.step_tol) {
      out.converged = viol < st.feas_tol;
      out.message = "step below tolerance";
      break;
    }

    // penalty parameter keeps the merit function exact
    double lam_max = qp.lambda_eq.size() ? qp.lambda_eq.cwiseAbs().maxCoeff() : 0.0;
    lam_max = std::max(lam_max, qp.lambda_ineq.size()
                                    ? qp.lambda_ineq.cwiseAbs().maxCoeff()
                                    : 0.0);
    rho = std::max(rho, 2.0 * lam_max + 1e-6);

    // trust-style cap keeps early steps from jumping across the geometry
    if (qp.p.lpNorm<Eigen::Infinity>() > st.max_step)
      qp.p *= st.max_step / qp.p.lpNorm<Eigen::Infinity>();

    const double phi0 = merit(ev);
    double viol_l1 = 0.0;
    for (int i = 0; i < ev.ce.size(); ++i) viol_l1 += std::abs(ev.ce[i]);
    for (int i = 0; i < ev.ci.size(); ++i) viol_l1 += std::max(0.0, -ev.ci[i]);
    const double ddir = ev.grad.dot(qp.p) - rho * viol_l1;

    double alpha = 1.0;
    bool accepted_step = false;
    EvaluateResult trial;
    VecX z_trial;
    for (int ls = 0; ls < st.line_search_max; ++ls) {
      z_trial = project_bounds(z + alpha * qp.p, problem_.lower, problem_.upper);
      restore_state(accepted);
      warm_d_ = ev.d;
      bool evaluated = true;
      try {
        trial = evaluate(z_trial, false);
      } catch (const TrackingLostError&) {
        evaluated = false;
      } catch (const DegenerateIntersectionError&) {
        evaluated = false;
      } catch (const SolverError&) {
        evaluated = false;
      }
      if (evaluated &&
          merit(trial) <= phi0 + st.armijo * alpha * std::min(ddir, 0.0)) {
        accepted_step = true;
        break;
      }
      // second-order correction against the Maratos effect: retry the full
      // step with the constraint violation at the trial point corrected
      // through the current Jacobian
      if (evaluated && ls == 0 && trial.ce.size() > 0) {
        Eigen::CompleteOrthogonalDecomposition<MatX> cod(ev.Je);
        cod.setThreshold(1e-12);
        const VecX dp = -cod.solve(trial.ce);
        const VecX z_soc =
            project_bounds(z + qp.p + dp, problem_.lower, problem_.upper);
        restore_state(accepted);
        warm_d_ = ev.d;
        try {
          const EvaluateResult soc = evaluate(z_soc, false);
          if (merit(soc) <= phi0 + st.armijo * std::min(ddir, 0.0)) {
            trial = soc;
            z_trial = z_soc;
            accepted_step = true;
            break;
          }
        } catch (const TrackingLostError&) {
        } catch (const DegenerateIntersectionError&) {
        } catch (const SolverError&) {
        }
      }
      alpha *= 0.5;
    }
    if (!accepted_step) {
      restore_state(accepted);
      out.message = "persistent step rejection";
      break;
    }

    // gradients at the accepted point (assembly state is already there)
    EvaluateResult ev_new = evaluate(z_trial, true);
    accepted = save_state();

    // damped BFGS on the Lagrangian gradient
    VecX gL_old = ev.grad, gL_new = ev_new.grad;
    if (ev.Je.rows()) {
      gL_old -= ev.Je.transpose() * qp.lambda_eq;
      gL_new -= ev_new.Je.transpose() * qp.lambda_eq;
    }
    for (int r = 0; r < mi; ++r)
      if (qp.lambda_ineq[r] != 0.0) {
        gL_old -= qp.lambda_ineq[r] * VecX(ev.Ji.row(r));
        gL_new -= qp.lambda_ineq[r] * VecX(ev_new.Ji.row(r));
      }
    const VecX s = z_trial - z;
    VecX y = gL_new - gL_old;
    const double sts = s.dot(s);
    if (sts > 0) {
      if (!b_scaled) {
        const double ys = y.dot(s);
        if (ys > 1e-14 * std::sqrt(sts) * y.norm())
          B = MatX::Identity(n, n) * (y.dot(y) / ys);
        b_scaled = true;
      }
      const VecX Bs = B * s;
      const double sBs = s.dot(Bs);
      double sy = s.dot(y);
      if (sy < 0.2 * sBs) {  // Powell damping
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
      }
      if (sy > 1e-16 * sBs)
        B += (y * y.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
    }

    z = z_trial;
    ev = ev_new;
    out.history.push_back(make_record(it, z, ev, kkt));
    if (on_iterate) on_iterate(out.history.back());
  }

  if (out.message.empty()) out.message = "iteration cap reached";
  out.z = z;
  // leave the assembly at the final accepted design
  restore_state(accepted);
  problem_.design->apply(z);
  return out;
}

} // namespace shellopt
