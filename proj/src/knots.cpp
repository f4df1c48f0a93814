// SPDX-License-Identifier: Apache-2.0
#include "shellopt/knots.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shellopt {

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 1) throw std::invalid_argument("KnotVector: degree must be >= 1");
  const int n = static_cast<int>(knots_.size());
  if (n < 2 * (degree_ + 1))
    throw std::invalid_argument("KnotVector: too few knots for degree");
  for (int i = 0; i + 1 < n; ++i)
    if (knots_[i] > knots_[i + 1])
      throw std::invalid_argument("KnotVector: knots must be nondecreasing");
  for (int k = 0; k <= degree_; ++k) {
    if (knots_[k] != knots_.front() || knots_[n - 1 - k] != knots_.back())
      throw std::invalid_argument("KnotVector: knot vector must be open (clamped)");
  }
  if (knots_[degree_ + 1] == knots_.front() ||
      knots_[n - degree_ - 2] == knots_.back())
    throw std::invalid_argument("KnotVector: end knot repeated more than degree+1 times");
  // interior multiplicities
  int i = degree_ + 1;
  while (i < n - degree_ - 1) {
    int j = i;
    while (j < n - degree_ - 1 && knots_[j] == knots_[i]) ++j;
    if (j - i > degree_)
      throw std::invalid_argument("KnotVector: interior multiplicity exceeds degree");
    i = j;
  }
}

KnotVector KnotVector::uniform(int degree, int spans) {
  std::vector<double> k;
  for (int i = 0; i <= degree; ++i) k.push_back(0.0);
  for (int i = 1; i < spans; ++i) k.push_back(double(i) / spans);
  for (int i = 0; i <= degree; ++i) k.push_back(1.0);
  return KnotVector(degree, std::move(k));
}

int KnotVector::num_spans() const {
  int c = 0;
  for (size_t i = degree_; i + degree_ + 1 < knots_.size(); ++i)
    if (knots_[i + 1] > knots_[i]) ++c;
  return c;
}

int KnotVector::find_span(double u) const {
  const int n = num_basis();
  if (u >= knots_[n]) return n - 1;
  if (u <= knots_[degree_]) return degree_;
  // binary search: span i with knots[i] <= u < knots[i+1]
  int lo = degree_, hi = n;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (u < knots_[mid])
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

MatX KnotVector::basis_derivatives(double u, int max_deriv, int* first,
                                   bool extend) const {
  if (max_deriv < 0 || max_deriv > degree_)
    throw std::invalid_argument("basis_derivatives: derivative order out of range");
  if (!extend && !in_domain(u))
    throw std::domain_error("basis_derivatives: parameter outside knot range");

  const int p = degree_;
  const int span = find_span(u);
  if (first) *first = span - p;

  // Cox-de Boor with derivative tableau (The NURBS Book, A2.3).
  MatX ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - knots_[span + 1 - j];
    right[j] = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  MatX ders = MatX::Zero(max_deriv + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  MatX a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= max_deriv; ++k) {
      double d = 0.0;
      int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      int j1 = (rk >= -1) ? 1 : -rk;
      int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }

  double r = p;
  for (int k = 1; k <= max_deriv; ++k) {
    for (int j = 0; j <= p; ++j) ders(k, j) *= r;
    r *= (p - k);
  }
  return ders;
}

std::vector<double> KnotVector::greville() const {
  const int n = num_basis();
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 1; j <= degree_; ++j) s += knots_[i + j];
    g[i] = s / degree_;
  }
  return g;
}

std::vector<std::pair<double, int>> KnotVector::interior_knots() const {
  std::vector<std::pair<double, int>> out;
  const int n = static_cast<int>(knots_.size());
  int i = degree_ + 1;
  while (i < n - degree_ - 1) {
    int j = i;
    while (j < n - degree_ - 1 && knots_[j] == knots_[i]) ++j;
    out.emplace_back(knots_[i], j - i);
    i = j;
  }
  return out;
}

KnotVector KnotVector::inserted(const std::vector<double>& new_knots) const {
  std::vector<double> merged = knots_;
  for (double u : new_knots) {
    if (u <= front() || u >= back())
      throw std::invalid_argument("inserted: knot outside open domain");
    merged.insert(std::upper_bound(merged.begin(), merged.end(), u), u);
  }
  return KnotVector(degree_, std::move(merged));  // ctor re-validates multiplicities
}

KnotVector KnotVector::elevated(int times) const {
  if (times < 1) throw std::invalid_argument("elevated: times must be >= 1");
  std::vector<double> k;
  size_t i = 0;
  while (i < knots_.size()) {
    size_t j = i;
    while (j < knots_.size() && knots_[j] == knots_[i]) ++j;
    const int mult = static_cast<int>(j - i) + times;
    for (int c = 0; c < mult; ++c) k.push_back(knots_[i]);
    i = j;
  }
  return KnotVector(degree_ + times, std::move(k));
}

MatX subdivision_matrix(const KnotVector& coarse, const KnotVector& fine) {
  const int nf = fine.num_basis();
  const int nc = coarse.num_basis();
  // Collocation at the Greville points of the fine space. The coarse space
  // is contained in the fine one, so interpolating the coarse basis there
  // reproduces it exactly and the resulting map is the subdivision operator.
  MatX Bf = MatX::Zero(nf, nf);
  MatX Bc = MatX::Zero(nf, nc);
  const auto tau = fine.greville();
  for (int i = 0; i < nf; ++i) {
    int ff = 0, fc = 0;
    MatX df = fine.basis_derivatives(tau[i], 0, &ff);
    MatX dc = coarse.basis_derivatives(tau[i], 0, &fc);
    for (int j = 0; j <= fine.degree(); ++j) Bf(i, ff + j) = df(0, j);
    for (int j = 0; j <= coarse.degree(); ++j) Bc(i, fc + j) = dc(0, j);
  }
  return Bf.partialPivLu().solve(Bc);
}

} // namespace shellopt
