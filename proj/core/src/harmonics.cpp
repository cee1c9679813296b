#include "qlm/harmonics.hpp"

namespace qlm {

LegendreTable legendre_table(int band_limit, double theta) {
  const int count = (band_limit + 1) * (band_limit + 2) / 2;
  LegendreTable table;
  table.value.assign(count, 0.0);
  table.dtheta.assign(count, 0.0);
  table.m_over_sin.assign(count, 0.0);
  const double t = std::cos(theta);
  const double s = std::sin(theta);

  double pmm = 1.0 / (4.0 * std::numbers::pi);
  for (int m = 0; m <= band_limit; ++m) {
    if (m > 0) pmm *= (2.0 * m - 1.0) / (2.0 * m);
    const double qmm = std::sqrt((2.0 * m + 1.0) * pmm);
    const double s_m = std::pow(s, m);
    const double s_m1 = m > 0 ? std::pow(s, m - 1) : 0.0;

    // Reduced polynomial Q and its t-derivative dQ by the three-term recurrence.
    double q_prev = 0.0, dq_prev = 0.0;
    double q_cur = qmm, dq_cur = 0.0;
    double a_prev = 0.0;
    for (int l = m; l <= band_limit; ++l) {
      if (l > m) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double back = l == m + 1 ? 0.0 : 1.0 / a_prev;
        const double q_next = a * (t * q_cur - back * q_prev);
        const double dq_next = a * (q_cur + t * dq_cur - back * dq_prev);
        q_prev = q_cur;
        dq_prev = dq_cur;
        q_cur = q_next;
        dq_cur = dq_next;
        a_prev = a;
      }
      const int idx = LegendreTable::packed_index(l, m);
      table.value[idx] = s_m * q_cur;
      // d/dtheta [s^m Q(t)] = m s^{m-1} t Q - s^{m+1} Q'(t)
      table.dtheta[idx] = m * s_m1 * t * q_cur - s_m * s * dq_cur;
      table.m_over_sin[idx] = m * s_m1 * q_cur;
    }
  }
  return table;
}

}  // namespace qlm
