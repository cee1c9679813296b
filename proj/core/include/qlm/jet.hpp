#pragma once

#include <array>
#include <cmath>

namespace qlm {

/// Second-order Taylor jet in three variables: value, gradient and Hessian.
///
/// Arithmetic propagates exact first and second partial derivatives, so a
/// closed-form metric written once as a template over the scalar type yields
/// its analytic derivative jet with no step-size tuning.
struct Jet {
  double v = 0.0;
  std::array<double, 3> d{};
  // Symmetric Hessian packed as (00, 01, 02, 11, 12, 22).
  std::array<double, 6> dd{};

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Jet variable(double value, int axis) {
    Jet j(value);
    j.d[axis] = 1.0;
    return j;
  }

  static constexpr int pack(int k, int l) {
    if (k > l) {
      const int t = k;
      k = l;
      l = t;
    }
    return k == 0 ? l : (k == 1 ? 2 + l : 5);
  }

  double hess(int k, int l) const { return dd[pack(k, l)]; }
};

namespace jet_detail {

// Applies a scalar function with derivatives f1 = f'(u), f2 = f''(u).
inline Jet chain(const Jet& u, double f0, double f1, double f2) {
  Jet r(f0);
  for (int k = 0; k < 3; ++k) r.d[k] = f1 * u.d[k];
  for (int k = 0; k < 3; ++k) {
    for (int l = k; l < 3; ++l) {
      const int p = Jet::pack(k, l);
      r.dd[p] = f1 * u.dd[p] + f2 * u.d[k] * u.d[l];
    }
  }
  return r;
}

}  // namespace jet_detail

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.v + b.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] + b.d[k];
  for (int p = 0; p < 6; ++p) r.dd[p] = a.dd[p] + b.dd[p];
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r(a.v - b.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] - b.d[k];
  for (int p = 0; p < 6; ++p) r.dd[p] = a.dd[p] - b.dd[p];
  return r;
}

inline Jet operator-(const Jet& a) {
  Jet r(-a.v);
  for (int k = 0; k < 3; ++k) r.d[k] = -a.d[k];
  for (int p = 0; p < 6; ++p) r.dd[p] = -a.dd[p];
  return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.v * b.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
  for (int k = 0; k < 3; ++k) {
    for (int l = k; l < 3; ++l) {
      const int p = Jet::pack(k, l);
      r.dd[p] = a.dd[p] * b.v + a.v * b.dd[p] + a.d[k] * b.d[l] +
                a.d[l] * b.d[k];
    }
  }
  return r;
}

inline Jet reciprocal(const Jet& a) {
  const double inv = 1.0 / a.v;
  return jet_detail::chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }
inline Jet& operator*=(Jet& a, const Jet& b) { return a = a * b; }
inline Jet& operator/=(Jet& a, const Jet& b) { return a = a / b; }

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return jet_detail::chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return jet_detail::chain(a, e, e, e);
}

inline Jet log(const Jet& a) {
  return jet_detail::chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

inline Jet pow(const Jet& a, double p) {
  const double f0 = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return jet_detail::chain(a, f0, f1, f2);
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.v; }

}  // namespace qlm
