// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shellopt/design.hpp"

namespace shellopt {

struct SqpSettings {
  int max_iter = 100;
  double kkt_tol = 1e-9;    // stationarity, absolute on the projected gradient
  double feas_tol = 1e-9;   // constraint violation
  double step_tol = 1e-13;  // step size giving up
  double max_step = 1e30;   // trust-style cap on the step inf-norm
  int line_search_max = 30;
  double armijo = 1e-4;
};

/// Constrained shape optimization problem: internal energy objective over a
/// design space, with geometric constraints and simple bounds.
struct OptimizationProblem {
  DesignSpace* design = nullptr;
  std::vector<std::unique_ptr<Constraint>> constraints;
  VecX lower, upper;  // bounds on z
  SqpSettings settings;
  double energy_reference = 1.0;  // reported objective = W_int / reference
};

struct IterateRecord {
  int iteration = 0;
  VecX z;
  double objective = 0.0;       // raw internal energy (J)
  double normalized = 0.0;      // objective / energy_reference
  double grad_norm = 0.0;       // projected gradient, inf norm
  double violation = 0.0;       // max constraint violation
  double coord_residual = 0.0;  // implicit system residual at the iterate
  std::vector<VecX> coords;     // stacked coordinates per intersection
};

struct EvaluateResult {
  double f = 0.0;
  VecX grad;       // df/dz (empty when gradients were not requested)
  VecX ce, ci;     // equality and inequality values
  MatX Je, Ji;     // constraint Jacobians (rows per constraint)
  VecX d;          // equilibrium displacements
  double coord_residual = 0.0;
};

struct OptimizationOutcome {
  bool converged = false;
  std::string message;
  VecX z;
  std::vector<IterateRecord> history;
};

/// Dense SQP with a damped BFGS Hessian, active-set bound and inequality
/// handling, and an l1 merit line search. Evaluation failures (lost
/// intersection tracking, Newton breakdown) reject the step and shrink it.
class ShapeOptimization {
 public:
  explicit ShapeOptimization(OptimizationProblem problem);

  /// Full pipeline at z: geometry update, coordinate solve, equilibrium,
  /// adjoint gradient and constraint data.
  EvaluateResult evaluate(const VecX& z, bool with_gradients = true);

  OptimizationOutcome run(const VecX& z0);

  const OptimizationProblem& problem() const { return problem_; }

  /// Observer called after every accepted iterate.
  std::function<void(const IterateRecord&)> on_iterate;

  /// Snapshot of the continuation state (intersection meshes and the warm
  /// displacement start). Restoring it makes evaluations reproducible from
  /// a fixed reference, which finite-difference oracles rely on.
  struct AssemblyState {
    std::vector<Intersection> intersections;
    VecX warm_d;
  };
  AssemblyState save_state() const;
  void restore_state(const AssemblyState& s);

 private:
  IterateRecord make_record(int it, const VecX& z, const EvaluateResult& ev,
                            const VecX& kkt_residual) const;

  OptimizationProblem problem_;
  VecX warm_d_;
};

/// Active-set QP: min 1/2 p^T B p + g^T p subject to Je p = be,
/// Ji p >= bi and lo <= p <= hi. Redundant or inconsistent equality rows
/// are resolved in the least-squares sense.
struct QpResult {
  VecX p;
  VecX lambda_eq;
  VecX lambda_ineq;  // >= 0 on active rows, 0 elsewhere
};
QpResult solve_qp(const MatX& B, const VecX& g, const MatX& Je, const VecX& be,
                  const MatX& Ji, const VecX& bi, const VecX& lo, const VecX& hi);

} // namespace shellopt
