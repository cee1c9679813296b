#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qlm {

// Real orthonormal spherical harmonics without the Condon-Shortley phase:
//   Y_{l,0}  = Pbar_{l,0}(cos t)
//   Y_{l,m}  = sqrt(2) Pbar_{l,m}(cos t) cos(m phi)     m > 0
//   Y_{l,-m} = sqrt(2) Pbar_{l,m}(cos t) sin(m phi)     m > 0
// with Pbar normalized so that the integral of Y^2 over the unit sphere is 1.

inline constexpr int harmonic_index(int l, int m) { return l * l + l + m; }
inline constexpr int harmonic_count(int band_limit) {
  return (band_limit + 1) * (band_limit + 1);
}

/// Reduced normalized Legendre function Pbar_{l,m}(t) / (1 - t^2)^{m/2},
/// a polynomial in t. Generic in the scalar type so metric jets can use it.
template <class T>
T reduced_legendre(int l, int m, const T& t) {
  if (m < 0 || l < m) throw std::invalid_argument("reduced_legendre: need 0 <= m <= l");
  double pmm = (2.0 * m + 1.0) / (4.0 * std::numbers::pi);
  for (int k = 1; k <= m; ++k) pmm *= (2.0 * k - 1.0) / (2.0 * k);
  pmm = std::sqrt(pmm);
  if (l == m) return T(pmm);
  T prev = T(pmm);
  T cur = t * std::sqrt(2.0 * m + 3.0) * pmm;
  double a_prev = std::sqrt(2.0 * m + 3.0);
  for (int n = m + 2; n <= l; ++n) {
    const double a = std::sqrt((4.0 * n * n - 1.0) / (double(n) * n - double(m) * m));
    T next = a * (t * cur - prev * (1.0 / a_prev));
    prev = cur;
    cur = next;
    a_prev = a;
  }
  return cur;
}

/// Y_{l,m} evaluated at the direction of (x, y, z); the point need not be on
/// the unit sphere.
template <class T>
T real_ylm(int l, int m, const T& x, const T& y, const T& z) {
  using std::sqrt;
  const T r = sqrt(x * x + y * y + z * z);
  const int am = m < 0 ? -m : m;
  const T q = reduced_legendre(l, am, z / r);
  if (am == 0) return q;
  // (x + i y)^am / r^am = sin^am(t) (cos(am phi) + i sin(am phi))
  const T xr = x / r;
  const T yr = y / r;
  T re = T(1.0);
  T im = T(0.0);
  for (int k = 0; k < am; ++k) {
    T nre = re * xr - im * yr;
    T nim = re * yr + im * xr;
    re = nre;
    im = nim;
  }
  return std::sqrt(2.0) * q * (m > 0 ? re : im);
}

/// All normalized Pbar_{l,m}(cos theta) for 0 <= m <= l <= band_limit together
/// with their theta derivatives. Layout: packed_index(l, m) = l(l+1)/2 + m.
struct LegendreTable {
  std::vector<double> value;
  std::vector<double> dtheta;
  // m Pbar_{l,m} / sin(theta), finite at the poles.
  std::vector<double> m_over_sin;

  static constexpr int packed_index(int l, int m) { return l * (l + 1) / 2 + m; }
};

LegendreTable legendre_table(int band_limit, double theta);

}  // namespace qlm
