// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "shellopt/linalg.hpp"

namespace shellopt {

/// Open (clamped) knot vector of a given polynomial degree.
///
/// Invariants checked at construction: knots nondecreasing, the first and
/// last knot each repeated exactly degree+1 times, and interior
/// multiplicities at most the degree (the basis stays C^1 inside, which
/// the bending terms require).
class KnotVector {
 public:
  KnotVector() = default;
  KnotVector(int degree, std::vector<double> knots);

  /// Uniform open knot vector with `spans` knot intervals on [0, 1].
  static KnotVector uniform(int degree, int spans);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }
  int num_spans() const;

  bool in_domain(double u, double tol = 0.0) const {
    return u >= front() - tol && u <= back() + tol;
  }

  /// Knot-span index for evaluation; u outside the domain selects the
  /// boundary span, whose polynomials extend smoothly past the ends.
  int find_span(double u) const;

  /// Values and derivatives of the degree+1 basis functions supported on
  /// the span of u. Row k of the result holds the k-th derivatives;
  /// `first` is the index of the first supported basis function.
  /// Throws std::domain_error for u outside the knot range unless
  /// `extend` is set, and std::invalid_argument for max_deriv > degree.
  MatX basis_derivatives(double u, int max_deriv, int* first,
                         bool extend = false) const;

  /// Greville abscissae (one characteristic parameter per basis function).
  std::vector<double> greville() const;

  /// Distinct interior knots with their multiplicities.
  std::vector<std::pair<double, int>> interior_knots() const;

  /// Knot vector after inserting `new_knots` (values strictly inside the
  /// domain; resulting interior multiplicity must stay <= degree).
  KnotVector inserted(const std::vector<double>& new_knots) const;

  /// Knot vector after raising the degree `times` times (every distinct
  /// knot multiplicity grows by `times`).
  KnotVector elevated(int times) const;

  bool operator==(const KnotVector& o) const {
    return degree_ == o.degree_ && knots_ == o.knots_;
  }

 private:
  int degree_ = 0;
  std::vector<double> knots_;
};

/// Matrix M with P_fine = M * P_coarse for two spline spaces where the
/// coarse space is contained in the fine one (knot insertion, order
/// elevation, or both). Built by collocation at the Greville points of the
/// fine space; rows sum to one.
MatX subdivision_matrix(const KnotVector& coarse, const KnotVector& fine);

} // namespace shellopt
