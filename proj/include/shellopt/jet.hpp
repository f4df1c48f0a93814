// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace shellopt {

// Second-order truncated Taylor value: carries the value, gradient, and
// (symmetric) Hessian with respect to N seed variables. Arithmetic
// propagates exact first and second derivatives, which is how every
// quadrature-point integrand in this library is differentiated.
template <int N>
struct Jet2 {
  using GradT = Eigen::Matrix<double, N, 1>;
  using HessT = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  GradT g = GradT::Zero();
  HessT h = HessT::Zero();

  Jet2() = default;
  explicit Jet2(double value) : v(value) {}
  static Jet2 variable(double value, int index) {
    Jet2 j(value);
    j.g[index] = 1.0;
    return j;
  }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    g += o.g;
    h += o.h;
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    g -= o.g;
    h -= o.h;
    return *this;
  }
  Jet2& operator*=(double s) {
    v *= s;
    g *= s;
    h *= s;
    return *this;
  }
};

template <int N>
Jet2<N> operator+(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r(a);
  r += b;
  return r;
}
template <int N>
Jet2<N> operator-(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r(a);
  r -= b;
  return r;
}
template <int N>
Jet2<N> operator-(const Jet2<N>& a) {
  Jet2<N> r;
  r.v = -a.v;
  r.g = -a.g;
  r.h = -a.h;
  return r;
}
template <int N>
Jet2<N> operator+(const Jet2<N>& a, double b) {
  Jet2<N> r(a);
  r.v += b;
  return r;
}
template <int N>
Jet2<N> operator+(double b, const Jet2<N>& a) {
  return a + b;
}
template <int N>
Jet2<N> operator-(const Jet2<N>& a, double b) {
  return a + (-b);
}
template <int N>
Jet2<N> operator-(double b, const Jet2<N>& a) {
  return (-a) + b;
}
template <int N>
Jet2<N> operator*(const Jet2<N>& a, double s) {
  Jet2<N> r(a);
  r *= s;
  return r;
}
template <int N>
Jet2<N> operator*(double s, const Jet2<N>& a) {
  return a * s;
}
template <int N>
Jet2<N> operator/(const Jet2<N>& a, double s) {
  return a * (1.0 / s);
}

template <int N>
Jet2<N> operator*(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r;
  r.v = a.v * b.v;
  r.g = a.g * b.v + b.g * a.v;
  r.h = a.h * b.v + b.h * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

template <int N>
Jet2<N> inverse(const Jet2<N>& a) {
  const double iv = 1.0 / a.v;
  Jet2<N> r;
  r.v = iv;
  r.g = -a.g * (iv * iv);
  r.h = -a.h * (iv * iv) + (2.0 * iv * iv * iv) * (a.g * a.g.transpose());
  return r;
}

template <int N>
Jet2<N> operator/(const Jet2<N>& a, const Jet2<N>& b) {
  return a * inverse(b);
}
template <int N>
Jet2<N> operator/(double a, const Jet2<N>& b) {
  return inverse(b) * a;
}

template <int N>
Jet2<N> sqrt(const Jet2<N>& a) {
  const double s = std::sqrt(a.v);
  const double inv2s = 0.5 / s;
  Jet2<N> r;
  r.v = s;
  r.g = a.g * inv2s;
  r.h = a.h * inv2s - (0.25 / (s * a.v)) * (a.g * a.g.transpose());
  return r;
}

// Scalar fallbacks so quadrature-point integrands can be instantiated with
// plain doubles when only the value is needed.
inline double inverse(double a) { return 1.0 / a; }

// --- 3-vector helpers usable with double or Jet2 components ---

template <class T>
using V3 = std::array<T, 3>;

template <class T>
V3<T> v3_add(const V3<T>& a, const V3<T>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
template <class T>
V3<T> v3_sub(const V3<T>& a, const V3<T>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
template <class T>
T v3_dot(const V3<T>& a, const V3<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
template <class T>
V3<T> v3_cross(const V3<T>& a, const V3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
template <class T>
T v3_norm(const V3<T>& a) {
  using std::sqrt;
  using shellopt::sqrt;
  return sqrt(v3_dot(a, a));
}
template <class T>
V3<T> v3_scale(const V3<T>& a, const T& s) {
  return {a[0] * s, a[1] * s, a[2] * s};
}
template <class T>
V3<T> v3_normalized(const V3<T>& a) {
  T inv = inverse(v3_norm(a));
  return v3_scale(a, inv);
}

} // namespace shellopt
