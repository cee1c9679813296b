#include "doctest.h"
#include "qlm/errors.hpp"
#include "qlm/sphere_spectral.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

using namespace qlm;
using D = SphereGrid::Derivative;
constexpr double kPi = std::numbers::pi;

namespace {

Eigen::VectorXd random_coeffs(int L, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd a(harmonic_count(L));
  for (int i = 0; i < a.size(); ++i) a[i] = n(rng);
  return a;
}

}  // namespace

TEST_CASE("grid rejects band limits below 4") { CHECK_THROWS_AS(SphereGrid(3), std::invalid_argument); }

TEST_CASE("quadrature weights integrate the sphere area") {
  const SphereGrid g(10);
  CHECK(g.weights().sum() == doctest::Approx(4 * std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("harmonics are orthonormal under grid quadrature") {
  const SphereGrid g(6);
  const int n = g.n_coeffs();
  Eigen::MatrixXd Y(g.size(), n);
  for (int i = 0; i < n; ++i) Y.col(i) = g.synthesize(Eigen::VectorXd::Unit(n, i));
  const Eigen::MatrixXd G = Y.transpose() * g.weights().asDiagonal() * Y;
  CHECK((G - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("analysis inverts synthesis") {
  for (int L : {4, 9, 16}) {
    const SphereGrid g(L);
    const Eigen::VectorXd a = random_coeffs(L, 7 + L);
    CHECK((g.analyze(g.synthesize(a)) - a).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("synthesized values match direct harmonic evaluation") {
  const SphereGrid g(8);
  const int n = g.n_coeffs();
  const Eigen::VectorXd nodal = g.synthesize(Eigen::VectorXd::Unit(n, harmonic_index(5, -3)));
  for (int node = 0; node < g.size(); node += 17) {
    const Eigen::Vector3d u = g.unit_vector(node);
    CHECK(nodal[node] == doctest::Approx(real_ylm(5, -3, u.x(), u.y(), u.z())).epsilon(1e-12));
  }
}

TEST_CASE("derivative synthesis matches finite differences of point evaluation") {
  const SphereGrid g(10);
  const Eigen::VectorXd a = random_coeffs(10, 3);
  const Eigen::VectorXd dth = g.synthesize(a, D::kTheta);
  const Eigen::VectorXd dph = g.synthesize(a, D::kPhiOverSin);
  const double h = 1e-6;
  for (int node = 3; node < g.size(); node += 23) {
    const double t = g.theta_of(node), p = g.phi_of(node);
    const double ft = (g.evaluate(a, t + h, p).value - g.evaluate(a, t - h, p).value) / (2 * h);
    const double fp = (g.evaluate(a, t, p + h).value - g.evaluate(a, t, p - h).value) / (2 * h);
    CHECK(dth[node] == doctest::Approx(ft).epsilon(1e-6).scale(1.0));
    CHECK(dph[node] == doctest::Approx(fp / std::sin(t)).epsilon(1e-6).scale(1.0));
    const auto pv = g.evaluate(a, t, p);
    CHECK(pv.d_theta == doctest::Approx(dth[node]).epsilon(1e-10).scale(1.0));
    CHECK(pv.d_phi == doctest::Approx(dph[node] * std::sin(t)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("adjoint synthesis is the transpose") {
  const SphereGrid g(7);
  const Eigen::VectorXd a = random_coeffs(7, 11);
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd w(g.size());
  for (int i = 0; i < w.size(); ++i) w[i] = n(rng);
  for (D which : {D::kNone, D::kTheta, D::kPhiOverSin}) {
    const double lhs = g.synthesize(a, which).dot(w);
    const double rhs = a.dot(g.synthesize_adjoint(w, which));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("tensor mesh synthesis agrees with point evaluation") {
  const SphereGrid g(6);
  const Eigen::VectorXd a = random_coeffs(6, 19);
  const std::vector<double> th{0.0, 0.4, 1.9, std::numbers::pi};
  const std::vector<double> ph{0.0, 2.5, 5.0};
  const Eigen::VectorXd v = g.synthesize_on(a, th, ph);
  for (std::size_t i = 0; i < th.size(); ++i)
    for (std::size_t j = 0; j < ph.size(); ++j)
      CHECK(v[i * ph.size() + j] == doctest::Approx(g.evaluate(a, th[i], ph[j]).value).epsilon(1e-12));
}

TEST_CASE("laplace-beltrami scales by -l(l+1)") {
  auto grid = SphereGrid::build(6);
  const ScalarField f = ScalarField::from_function(grid, [](const Eigen::Vector3d& x) { return x.x() * x.z(); });
  const ScalarField lap = synthesize(laplace_beltrami(analyze(f)), grid);
  CHECK((lap.values + 6.0 * f.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dilations are inverse to their negatives and conformal") {
  const Eigen::Vector3d b(0.2, -0.3, 0.1);
  const Eigen::Vector3d x = Eigen::Vector3d(0.3, 0.5, -0.8).normalized();
  const Eigen::Vector3d y = mobius_map(b, x);
  CHECK(y.norm() == doctest::Approx(1.0));
  CHECK((mobius_map(-b, y) - x).norm() < 1e-14);
  // Stretching of a tangent vector equals e^{w_b}.
  const Eigen::Vector3d v = x.cross(Eigen::Vector3d(0, 0, 1)).normalized();
  const double h = 1e-6;
  const Eigen::Vector3d xp = (x + h * v).normalized(), xm = (x - h * v).normalized();
  const double stretch = (mobius_map(b, xp) - mobius_map(b, xm)).norm() / (xp - xm).norm();
  CHECK(stretch * stretch == doctest::Approx(mobius_conformal_factor(b, x)).epsilon(1e-8));
}

TEST_CASE("axial dilation is stereographic scaling") {
  // Projection from the north pole sends T_{beta e3} to zeta -> lambda zeta.
  const double beta = 0.35;
  const double lambda = (1 + beta) / (1 - beta);
  const Eigen::Vector3d b(0, 0, beta);
  const Eigen::Vector3d x = Eigen::Vector3d(0.6, -0.2, 0.4).normalized();
  const Eigen::Vector3d y = mobius_map(b, x);
  auto proj = [](const Eigen::Vector3d& p) -> Eigen::Vector2d { return Eigen::Vector2d(p.x(), p.y()) / (1 - p.z()); };
  CHECK((proj(y) - lambda * proj(x)).norm() < 1e-13);
}

TEST_CASE("pullback by the identity dilation is trivial") {
  auto grid = SphereGrid::build(8);
  const ScalarField f = ScalarField::from_function(grid, [](const Eigen::Vector3d& x) { return x.y() * x.y(); });
  const MobiusPullback pb = apply_mobius(f, Eigen::Vector3d::Zero());
  CHECK((pb.field.values - f.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pb.conformal_factor.values.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(apply_mobius(f, Eigen::Vector3d(0, 0, 1.0)), DomainError);
}

TEST_CASE("center gauge balances an axial tilt") {
  // Reference roots from a 30-digit one-dimensional quadrature.
  for (auto [c, beta] : {std::pair{0.05, 0.024978158089487077}, std::pair{0.2, 0.098633021293982165}}) {
    auto grid = SphereGrid::build(24);
    const ScalarField u = ScalarField::from_function(grid, [c](const Eigen::Vector3d& x) { return c * x.z(); });
    const GaugeResult r = center_gauge(u);
    CHECK(r.residual <= 1e-10);
    CHECK(r.b.z() == doctest::Approx(beta).epsilon(1e-8));
    CHECK(std::hypot(r.b.x(), r.b.y()) < 1e-10);
    CHECK(conformal_moments(r.u).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("center gauge is idempotent on a balanced field") {
  auto grid = SphereGrid::build(8);
  const ScalarField u = ScalarField::from_function(grid, [](const Eigen::Vector3d& x) { return 0.1 * x.x() * x.y(); });
  const GaugeResult r = center_gauge(u);
  CHECK(r.b.norm() < 1e-10);
  CHECK((r.u.values - u.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant field has only the mean coefficient") {
  auto grid = SphereGrid::build(10);
  const HarmonicCoeffs a = analyze(ScalarField(grid, Eigen::VectorXd::Constant(grid->size(), 2.5)));
  CHECK(a(0, 0) == doctest::Approx(2.5 * std::sqrt(4 * kPi)).epsilon(1e-14));
  CHECK(a.a.tail(a.a.size() - 1).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(synthesize(laplace_beltrami(a), grid).values.cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("dilation pullback preserves area and moves x3 as a mobius map") {
  auto grid = SphereGrid::build(24);
  const ScalarField x3 = ScalarField::from_function(grid, [](const Eigen::Vector3d& x) { return x.z(); });
  for (const Eigen::Vector3d& b : {Eigen::Vector3d(0, 0, 0.3), Eigen::Vector3d(0.2, -0.1, 0.15)}) {
    const MobiusPullback pb = apply_mobius(x3, b);
    CHECK(grid->integrate(pb.conformal_factor.values) == doctest::Approx(4 * kPi).epsilon(1e-10));
  }
  const double beta = 0.3;
  const MobiusPullback pb = apply_mobius(x3, Eigen::Vector3d(0, 0, beta));
  double worst = 0.0;
  for (int i = 0; i < grid->size(); ++i) {
    const double z = x3.values[i];
    const double ref = ((1 + beta * beta) * z + 2 * beta) / (1 + 2 * beta * z + beta * beta);
    worst = std::max(worst, std::abs(pb.field.values[i] - ref));
  }
  CHECK(worst < 1e-13);
}
