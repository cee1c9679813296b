#include "doctest.h"
#include "qlm/errors.hpp"
#include "qlm/quasilocal_mass.hpp"

#include <cmath>

using namespace qlm;

namespace {

Immersion radial(int L, double r, const Eigen::Vector3d& c, double amplitude, const AFMetric& g) {
  auto grid = SphereGrid::build(L);
  const ScalarField R = ScalarField::from_function(grid, [&](const Eigen::Vector3d& w) {
    return r * (1.0 + amplitude * real_ylm(2, 0, w.x(), w.y(), w.z()) +
                0.5 * amplitude * real_ylm(3, 1, w.x(), w.y(), w.z()));
  });
  return immerse_radial(c, R, g);
}

}  // namespace

TEST_CASE("euclidean spheres carry no mass") {
  const AFMetric flat = AFMetric::euclidean();
  for (double r : {1.0, 7.5}) {
    const MassValues row = assemble_mass_row(coordinate_sphere(12, r, Eigen::Vector3d(0.3, 0, -1)), r, flat);
    CHECK(std::abs(row.hawking) < 1e-12);
    REQUIRE(row.brown_york.has_value());
    CHECK(std::abs(*row.brown_york) < 1e-11);
    CHECK(row.adm_reference == 0.0);
    CHECK(row.status == EmbeddingStatus::kOk);
  }
}

TEST_CASE("isotropic schwarzschild spheres") {
  const AFMetric iso = AFMetric::schwarzschild_isotropic(1.0);
  for (double r : {10.0, 20.0, 40.0}) {
    CAPTURE(r);
    const MassValues row = assemble_mass_row(coordinate_sphere(16, r, Eigen::Vector3d::Zero(), iso), r, iso);
    CHECK(std::abs(row.hawking - 1.0) <= 1e-8);
    // H0 = 2 / (r phi^2), so m_BY = m phi.
    REQUIRE(row.brown_york.has_value());
    CHECK(*row.brown_york == doctest::Approx(1.0 + 0.5 / r).epsilon(1e-10));
    CHECK(row.adm_reference == 1.0);
  }
}

TEST_CASE("standard schwarzschild brown-york closed form") {
  const AFMetric st = AFMetric::schwarzschild_standard(1.0);
  const Immersion s10 = coordinate_sphere(16, 10.0, Eigen::Vector3d::Zero(), st);
  const FundamentalData fd = fundamental_forms(s10, st);
  const double by10 = brown_york_mass(fd, embed(s10, fd));
  CHECK(by10 == doctest::Approx(1.0557280900008412).epsilon(1e-12));
  CHECK(hawking_mass(fd) == doctest::Approx(1.0).epsilon(1e-12));

  double previous = by10;
  for (double r : {20.0, 40.0, 100.0}) {
    const MassValues row = assemble_mass_row(coordinate_sphere(16, r, Eigen::Vector3d::Zero(), st), r, st);
    REQUIRE(row.brown_york.has_value());
    CHECK(*row.brown_york == doctest::Approx(r * (1 - std::sqrt(1 - 2 / r))).epsilon(1e-10));
    CHECK(*row.brown_york < previous);
    CHECK(*row.brown_york > 1.0);
    previous = *row.brown_york;
  }
  CHECK(previous == doctest::Approx(1.0050506338833465).epsilon(1e-10));
}

TEST_CASE("hawking mass does not exceed brown-york mass") {
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  const AFMetric iso = AFMetric::schwarzschild_isotropic(1.0);
  for (double r : {20.0, 40.0}) {
    for (const AFMetric* g : {&kerr, &iso}) {
      const MassValues centered = assemble_mass_row(coordinate_sphere(16, r, Eigen::Vector3d::Zero(), *g), r, *g);
      const MassValues shifted = assemble_mass_row(radial(16, r, Eigen::Vector3d(1, 0.5, -0.5), 0.02, *g), r, *g);
      for (const MassValues* row : {&centered, &shifted}) {
        REQUIRE(row->brown_york.has_value());
        CHECK(row->hawking <= *row->brown_york);
      }
    }
  }
}

TEST_CASE("masses are invariant under chart rotation") {
  AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  const Eigen::Vector3d c(2.0, -1.0, 0.5);
  const MassValues a = assemble_mass_row(coordinate_sphere(20, 30.0, c, kerr), 30.0, kerr);

  kerr.rotation = Eigen::Vector3d(0.3, -0.7, 0.2);
  const Eigen::Matrix3d Q = kerr.chart_rotation();
  const MassValues b = assemble_mass_row(coordinate_sphere(20, 30.0, Q.transpose() * c, kerr), 30.0, kerr);
  CHECK(b.hawking == doctest::Approx(a.hawking).epsilon(1e-9));
  REQUIRE(a.brown_york.has_value());
  REQUIRE(b.brown_york.has_value());
  CHECK(*b.brown_york == doctest::Approx(*a.brown_york).epsilon(1e-9));
}

TEST_CASE("embedding problems give partial rows") {
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  EmbedOptions strict;
  strict.uniformize.epsilon0 = 1e-3;
  const MassValues regime =
      assemble_mass_row(radial(16, 30.0, Eigen::Vector3d::Zero(), 0.05, kerr), 30.0, kerr, strict);
  CHECK(regime.status == EmbeddingStatus::kOutOfRegime);
  CHECK_FALSE(regime.brown_york.has_value());
  CHECK(std::isfinite(regime.hawking));
  CHECK(regime.area > 0.0);

  const MassValues dented = assemble_mass_row(radial(16, 30.0, Eigen::Vector3d::Zero(), -0.6, kerr), 30.0, kerr);
  CHECK(dented.status == EmbeddingStatus::kNotConvex);
  CHECK_FALSE(dented.brown_york.has_value());
  CHECK(std::string(status_name(dented.status)) == "not_convex");

  const Immersion s = radial(16, 30.0, Eigen::Vector3d::Zero(), -0.6, kerr);
  const FundamentalData fd = fundamental_forms(s, kerr);
  IsometricEmbedding fake;
  fake.grid = s.grid;
  fake.H0 = fd.H;
  CHECK_THROWS_AS(brown_york_mass(fd, fake), DomainError);
}

TEST_CASE("kerr sphere at radius 100") {
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  const MassValues row = assemble_mass_row(coordinate_sphere(16, 100.0, Eigen::Vector3d::Zero(), kerr), 100.0, kerr);
  CHECK(std::abs(row.hawking - 1.0) <= 1e-2);
  REQUIRE(row.brown_york.has_value());
  CHECK(std::abs(*row.brown_york - 1.0) <= 1e-2);
  CHECK(row.hawking <= *row.brown_york);
}
