// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "shellopt/linalg.hpp"

namespace testsup {

using shellopt::MatX;
using shellopt::Vec2;
using shellopt::Vec3;
using shellopt::VecX;

// Independent Cox-de Boor recursion, straight from the textbook definition.
// Evaluates every basis function of the knot vector; intentionally naive so
// it shares no code path with the library evaluator it checks against.
inline double deboor_basis(const std::vector<double>& t, int i, int p, double u) {
  if (p == 0) {
    const bool last = (i + 2 == static_cast<int>(t.size()) - 0) ||
                      (t[i + 1] == t.back() && u == t.back());
    if (u >= t[i] && u < t[i + 1]) return 1.0;
    if (last && u == t[i + 1] && t[i] < t[i + 1]) return 1.0;
    return 0.0;
  }
  double a = 0.0, b = 0.0;
  if (t[i + p] > t[i]) a = (u - t[i]) / (t[i + p] - t[i]) * deboor_basis(t, i, p - 1, u);
  if (t[i + p + 1] > t[i + 1])
    b = (t[i + p + 1] - u) / (t[i + p + 1] - t[i + 1]) * deboor_basis(t, i + 1, p - 1, u);
  return a + b;
}

inline std::vector<double> deboor_all(const std::vector<double>& t, int p, double u) {
  const int n = static_cast<int>(t.size()) - p - 1;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = deboor_basis(t, i, p, u);
  return out;
}

// Derivative of a single basis function by the recursive formula.
inline double deboor_deriv(const std::vector<double>& t, int i, int p, double u) {
  double a = 0.0, b = 0.0;
  if (t[i + p] > t[i]) a = p / (t[i + p] - t[i]) * deboor_basis(t, i, p - 1, u);
  if (t[i + p + 1] > t[i + 1])
    b = p / (t[i + p + 1] - t[i + 1]) * deboor_basis(t, i + 1, p - 1, u);
  return a - b;
}

// Central finite difference with a step sweep; returns the derivative from
// the step whose half/full-step estimates agree best.
inline double fd_best(const std::function<double(double)>& f, double x0,
                      std::vector<double> steps = {1e-5, 1e-6, 1e-7}) {
  double best = 0.0, best_disc = 1e300;
  for (double h : steps) {
    const double d1 = (f(x0 + h) - f(x0 - h)) / (2 * h);
    const double d2 = (f(x0 + h / 2) - f(x0 - h / 2)) / h;
    const double disc = std::abs(d1 - d2);
    if (disc < best_disc) {
      best_disc = disc;
      best = d2;
    }
  }
  return best;
}

// Central-difference directional derivative of a multivariate functional.
inline double fd_directional(const std::function<double(const VecX&)>& f,
                             const VecX& x0, const VecX& dir,
                             std::vector<double> steps = {1e-5, 1e-6, 1e-7}) {
  return fd_best([&](double s) { return f(x0 + s * dir); }, 0.0, steps);
}

inline std::mt19937& rng() {
  static std::mt19937 gen(20240517u);
  return gen;
}

inline double urand(double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

inline VecX random_vec(int n, double scale = 1.0) {
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * (2.0 * urand() - 1.0);
  return v;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace testsup

namespace testsup {

// second derivative of one B-spline basis function via the recursion
inline double deboor_deriv2(const std::vector<double>& t, int i, int p, double u) {
  double a = 0.0, b = 0.0;
  if (t[i + p] > t[i]) a = p / (t[i + p] - t[i]) * deboor_deriv(t, i, p - 1, u);
  if (t[i + p + 1] > t[i + 1])
    b = p / (t[i + p + 1] - t[i + 1]) * deboor_deriv(t, i + 1, p - 1, u);
  return a - b;
}

} // namespace testsup
