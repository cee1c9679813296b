#include "doctest.h"
#include "qlm/jet.hpp"

#include <cmath>

using qlm::Jet;

namespace {

template <class T>
T sample(const T& x, const T& y, const T& z) {
  using std::exp;
  using std::log;
  using std::pow;
  using std::sqrt;
  return sqrt(x * x + 2.0 * y * y + z * z + 1.0) * exp(0.3 * x * z) / (1.0 + y * y) + log(2.0 + x * y) +
         pow(z + 4.0, 1.5);
}

}  // namespace

TEST_CASE("jet derivatives match central differences") {
  const double p[3] = {0.4, -0.7, 1.1};
  const Jet j = sample(Jet::variable(p[0], 0), Jet::variable(p[1], 1), Jet::variable(p[2], 2));
  CHECK(j.v == doctest::Approx(sample(p[0], p[1], p[2])).epsilon(1e-15));

  const double h = 1e-4;
  auto f = [&](double dx, double dy, double dz) { return sample(p[0] + dx, p[1] + dy, p[2] + dz); };
  for (int k = 0; k < 3; ++k) {
    double e[3] = {0, 0, 0};
    e[k] = h;
    const double fd = (f(e[0], e[1], e[2]) - f(-e[0], -e[1], -e[2])) / (2 * h);
    CHECK(j.d[k] == doctest::Approx(fd).epsilon(1e-7));
  }
  for (int k = 0; k < 3; ++k) {
    for (int l = 0; l < 3; ++l) {
      double ek[3] = {0, 0, 0}, el[3] = {0, 0, 0};
      ek[k] = h;
      el[l] = h;
      auto F = [&](double sk, double sl) {
        return f(sk * ek[0] + sl * el[0], sk * ek[1] + sl * el[1], sk * ek[2] + sl * el[2]);
      };
      const double fd = (F(1, 1) - F(1, -1) - F(-1, 1) + F(-1, -1)) / (4 * h * h);
      CHECK(j.hess(k, l) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("hessian packing is symmetric and complete") {
  int seen[6] = {0, 0, 0, 0, 0, 0};
  for (int k = 0; k < 3; ++k)
    for (int l = k; l < 3; ++l) ++seen[Jet::pack(k, l)];
  for (int p = 0; p < 6; ++p) CHECK(seen[p] == 1);
  CHECK(Jet::pack(2, 0) == Jet::pack(0, 2));
}

TEST_CASE("quotient times divisor recovers the numerator") {
  const Jet a = Jet::variable(1.3, 0) * Jet::variable(0.2, 1) + Jet::variable(0.5, 2);
  const Jet b = Jet::variable(2.5, 2) * Jet::variable(1.3, 0) + 1.0;
  const Jet back = (a / b) * b;
  CHECK(back.v == doctest::Approx(a.v));
  for (int k = 0; k < 3; ++k) CHECK(back.d[k] == doctest::Approx(a.d[k]));
  for (int p = 0; p < 6; ++p) CHECK(back.dd[p] == doctest::Approx(a.dd[p]).epsilon(1e-12));
}
