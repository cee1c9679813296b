#include "doctest.h"
#include "qlm/errors.hpp"
#include "qlm/surface_geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qlm;

namespace {

constexpr double kPi = std::numbers::pi;

Immersion perturbed(int L, double r, double amplitude, int l, double decay) {
  auto grid = SphereGrid::build(L);
  const ScalarField R = ScalarField::from_function(grid, [&](const Eigen::Vector3d& w) {
    return r * (1.0 + amplitude * std::pow(r, -decay) * real_ylm(l, 0, w.x(), w.y(), w.z()));
  });
  return immerse_radial(Eigen::Vector3d::Zero(), R);
}

}  // namespace

TEST_CASE("round sphere in flat space") {
  const double r = 6.5;
  const FundamentalData fd = fundamental_forms_hat(coordinate_sphere(16, r, Eigen::Vector3d(1, -2, 0.5)));
  CHECK(fd.area == doctest::Approx(4 * kPi * r * r).epsilon(1e-12));
  CHECK((fd.H.array() - 2 / r).abs().maxCoeff() < 1e-11);
  CHECK((fd.K.array() - 1 / (r * r)).abs().maxCoeff() < 1e-11);
  CHECK(fd.norm_A_ring.maxCoeff() < 1e-11);
  CHECK(fd.diameter == doctest::Approx(kPi * r).epsilon(1e-2));
  const Eigen::Vector2d k = fd.principal_curvatures(17);
  CHECK(k[0] == doctest::Approx(1 / r));
  CHECK(k[1] == doctest::Approx(1 / r));
}

TEST_CASE("immersion preconditions") {
  auto grid = SphereGrid::build(8);
  CHECK_THROWS_AS(immerse_radial(Eigen::Vector3d::Zero(), ScalarField::constant(grid, -1.0)), DomainError);
  CHECK_THROWS_AS(coordinate_sphere(8, 3.0, Eigen::Vector3d::Zero(), AFMetric::schwarzschild_standard(1)),
                  DomainError);
  const Immersion s = coordinate_sphere(8, 5.0, Eigen::Vector3d(1, 0, 0));
  CHECK((s.position(0) - Eigen::Vector3d(1, 0, 0)).norm() == doctest::Approx(5.0));
}

TEST_CASE("symmetric spheres have closed-form mean curvature") {
  const double m = 1.0, r = 10.0;
  const FundamentalData st = fundamental_forms(coordinate_sphere(16, r), AFMetric::schwarzschild_standard(m));
  CHECK((st.H.array() - 0.2 * std::sqrt(0.8)).abs().maxCoeff() < 1e-12);
  CHECK(st.area == doctest::Approx(4 * kPi * r * r).epsilon(1e-12));

  const FundamentalData iso = fundamental_forms(coordinate_sphere(16, r), AFMetric::schwarzschild_isotropic(m));
  const double phi = 1 + m / (2 * r), dphi = -m / (2 * r * r);
  const double H = (2 / r + 4 * dphi / phi) / (phi * phi);
  CHECK((iso.H.array() - H).abs().maxCoeff() < 1e-12);
  CHECK(iso.area == doctest::Approx(4 * kPi * std::pow(r * phi * phi, 2)).epsilon(1e-12));
}

TEST_CASE("trace-free part is trace free and gauss-bonnet holds") {
  const std::vector<AFMetric> ambients{AFMetric::euclidean(), AFMetric::schwarzschild_isotropic(1),
                                       AFMetric::kerr_slice(1, 0.5),
                                       AFMetric::conformal_perturbed(1, 0.1, 2, 1, 1.0)};
  for (const AFMetric& g : ambients) {
    CAPTURE(g.to_string());
    for (const Immersion& s :
         {coordinate_sphere(16, 12.0, Eigen::Vector3d(0.5, 1, -1)), perturbed(16, 15, 0.1, 3, 0)}) {
      const FundamentalData fd = fundamental_forms(s, g);
      CHECK(fd.trace_A_ring.cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(fd.integrate(fd.K) == doctest::Approx(4 * kPi).epsilon(1e-10));
    }
  }
}

TEST_CASE("flat gauss equation holds pointwise") {
  const Immersion s = perturbed(24, 10, 0.2, 2, 0);
  const FundamentalData fd = fundamental_forms_hat(s);
  // Intrinsic curvature of h from Gauss-Bonnet density is not local; compare
  // instead with the product of principal curvatures.
  for (int i = 0; i < s.grid->size(); i += 37) {
    const Eigen::Vector2d k = fd.principal_curvatures(i);
    CHECK(fd.K[i] == doctest::Approx(k[0] * k[1]).epsilon(1e-12));
    CHECK(fd.H[i] == doctest::Approx(k[0] + k[1]).epsilon(1e-12));
  }
}

TEST_CASE("kerr coordinate spheres have cubically decaying trace-free part") {
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  std::vector<double> c;
  for (double tau : {20.0, 40.0, 80.0}) {
    const FundamentalData fd = fundamental_forms(coordinate_sphere(16, tau), kerr);
    c.push_back(std::pow(tau, 3) * fd.norm_A_ring.maxCoeff());
    CHECK(tau * tau * (fd.H.array() - 2 / tau).abs().maxCoeff() < 3.0);
  }
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  CHECK(*hi / *lo < 1.2);
}

TEST_CASE("best-fit sphere") {
  const Immersion s = coordinate_sphere(12, 7.0, Eigen::Vector3d(1, 2, 3));
  const BestFitSphere b = best_fit_sphere(fundamental_forms_hat(s), s);
  CHECK(b.r0 == doctest::Approx(7.0).epsilon(1e-12));
  CHECK((b.center - Eigen::Vector3d(1, 2, 3)).norm() < 1e-10);
  CHECK(b.position_deviation < 1e-10);

  std::vector<double> scaled;
  for (double r : {10.0, 20.0, 40.0}) {
    const Immersion p = perturbed(16, r, 0.1, 2, 1.0);
    const BestFitSphere bp = best_fit_sphere(fundamental_forms_hat(p), p);
    scaled.push_back(bp.curvature_deviation * r * r);
  }
  CHECK(scaled[2] < 1.5 * scaled[0]);
  CHECK_THROWS_AS(best_fit_sphere(fundamental_forms(s, AFMetric::schwarzschild_isotropic(1)), s),
                  std::invalid_argument);
}

TEST_CASE("hatted and ambient second forms are related exactly") {
  CHECK(second_form_relation_residual(perturbed(16, 10, 0.3, 2, 0), AFMetric::euclidean()) <= 1e-11);
  // Off-center spheres are not adapted to the metric symmetry, so the
  // identity is resolved only spectrally.
  const AFMetric iso = AFMetric::schwarzschild_isotropic(1.0);
  const double r8 = second_form_relation_residual(coordinate_sphere(8, 10, Eigen::Vector3d(3, 0, 0)), iso);
  const double r16 = second_form_relation_residual(coordinate_sphere(16, 10, Eigen::Vector3d(3, 0, 0)), iso);
  CHECK(r16 <= r8 / 10);
  CHECK(second_form_relation_residual(coordinate_sphere(24, 40), AFMetric::kerr_slice(1, 0.5)) <= 1e-6);
}

TEST_CASE("distance hessian decomposition") {
  const double r = 9.0;
  const Immersion round = coordinate_sphere(12, r);
  const FundamentalData fd = fundamental_forms_hat(round);
  for (int i = 0; i < round.grid->size(); i += 29) {
    const Eigen::Vector3d n = fd.euclidean_normal[i];
    const Eigen::Matrix3d expect = (Eigen::Matrix3d::Identity() - n * n.transpose()) / r;
    CHECK((distance_hessian(fd, i) - expect).cwiseAbs().maxCoeff() < 1e-13);
  }
  for (int L : {12, 24}) {
    const DistanceHessianReport rep = distance_hessian_residual(perturbed(L, 10, 0.3, 2, 0));
    CHECK(rep.algebraic <= 1e-10);
    CHECK(rep.spot_nodes == 8);
    CHECK(rep.spot_check <= 1e-5);
  }
}

TEST_CASE("mean curvature expansion and integral identity are bounded along families") {
  for (const AFMetric& g : {AFMetric::schwarzschild_isotropic(1), AFMetric::kerr_slice(1, 0.5)}) {
    CAPTURE(g.to_string());
    std::vector<double> mce, ii;
    for (double r : {10.0, 20.0, 40.0}) {
      const Immersion s = coordinate_sphere(16, r);
      mce.push_back(mean_curvature_expansion_residual(s, g));
      const IntegralIdentityReport rep = integral_identity_residual(s, g);
      ii.push_back(rep.scaled_residual);
      CHECK(rep.ibp_residual <= 1e-10 * std::max(1.0, std::abs(rep.ibp_lhs)));
    }
    CHECK(mce[2] <= 1.5 * mce[0] + 1e-12);
    CHECK(ii[2] <= 1.5 * ii[0] + 1e-12);
  }
  const Immersion s = coordinate_sphere(12, 10);
  CHECK(mean_curvature_expansion_residual(s, AFMetric::euclidean()) < 1e-10);
  const IntegralIdentityReport flat = integral_identity_residual(s, AFMetric::euclidean());
  CHECK(std::abs(flat.lhs) < 1e-10);
  CHECK(std::abs(flat.rhs) < 1e-12);
}

TEST_CASE("nearly round diagnostics") {
  std::vector<FundamentalData> round, kerr, bad;
  for (double r : {10.0, 20.0, 40.0}) {
    round.push_back(fundamental_forms_hat(coordinate_sphere(16, r)));
    kerr.push_back(fundamental_forms(coordinate_sphere(16, 2 * r), AFMetric::kerr_slice(1, 0.5)));
    bad.push_back(fundamental_forms_hat(perturbed(24, r, 0.3, 4, 0)));
  }
  const NearlyRoundReport a = nearly_round_diagnostics(round, 1.0);
  CHECK(a.c_trace_free < 1e-8);
  CHECK(a.radial_ratio == doctest::Approx(1.0));
  CHECK(a.diameter_ratio == doctest::Approx(kPi).epsilon(1e-2));
  CHECK(a.area_ratio_max == doctest::Approx(4 * kPi));
  CHECK(a.bounded);

  const NearlyRoundReport k = nearly_round_diagnostics(kerr, 1.0);
  CHECK(k.bounded);
  CHECK(k.c_second_form < 3.0);

  const NearlyRoundReport v = nearly_round_diagnostics(bad, 1.0);
  CHECK_FALSE(v.bounded);
  CHECK(v.trace_free_slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::find(v.flags.begin(), v.flags.end(), "trace_free_decay") != v.flags.end());

  CHECK_THROWS(nearly_round_diagnostics(std::span(round.data(), 2), 1.0));
}

TEST_CASE("immersion csv export") {
  const Immersion s = coordinate_sphere(4, 2.0);
  std::ostringstream os;
  write_immersion_csv(os, s);
  const std::string text = os.str();
  CHECK(text.rfind("theta,phi,y1,y2,y3\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == s.grid->size() + 1);
}
