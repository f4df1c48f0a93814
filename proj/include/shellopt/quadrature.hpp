// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace shellopt {

/// Gauss-Legendre points and weights on [0, 1].
inline std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  std::vector<std::pair<double, double>> pw(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    pw[i] = {0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp)};
  }
  return pw;
}

} // namespace shellopt
