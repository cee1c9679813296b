#include <benchmark/benchmark.h>

#include <random>

#include "qlm/harness.hpp"
#include "qlm/quasilocal_mass.hpp"
#include "qlm/sphere_spectral.hpp"
#include "qlm/surface_geometry.hpp"
#include "qlm/weyl_embedding.hpp"

using namespace qlm;

namespace {

Eigen::VectorXd random_coeffs(int L) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd a(harmonic_count(L));
  for (auto& v : a) v = n(rng);
  return a;
}

Immersion kerr_sphere(int L, double tau) {
  FamilySpec f;
  f.kind = FamilyKind::kAxisymKerr;
  return make_surface(f, tau, L, AFMetric::kerr_slice(1.0, 0.5));
}

Immersion tilted(int L, double r, const AFMetric& g) {
  FamilySpec f;
  f.kind = FamilyKind::kRadialPerturbed;
  f.amplitude = 0.5;
  f.degree = 3;
  f.order = 2;
  f.center = Eigen::Vector3d(1, 0, -0.5);
  return make_surface(f, r, L, g);
}

void BM_Synthesize(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  auto grid = SphereGrid::build(L);
  const Eigen::VectorXd a = random_coeffs(L);
  for (auto _ : state) benchmark::DoNotOptimize(grid->synthesize(a));
  state.SetComplexityN(L);
}
BENCHMARK(BM_Synthesize)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_Analyze(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  auto grid = SphereGrid::build(L);
  const Eigen::VectorXd f = grid->synthesize(random_coeffs(L));
  for (auto _ : state) benchmark::DoNotOptimize(grid->analyze(f));
  state.SetComplexityN(L);
}
BENCHMARK(BM_Analyze)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_FundamentalForms(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  const Immersion s = kerr_sphere(L, 40.0);
  for (auto _ : state) benchmark::DoNotOptimize(fundamental_forms(s, kerr));
}
BENCHMARK(BM_FundamentalForms)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Uniformize(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const AFMetric g = AFMetric::schwarzschild_isotropic(1.0);
  const Immersion s = tilted(L, 20.0, g);
  const FundamentalData fd = fundamental_forms(s, g);
  const double r0 = std::sqrt(fd.area / (4 * std::numbers::pi));
  const ScalarField K(s.grid, fd.K * r0 * r0);
  for (auto _ : state) benchmark::DoNotOptimize(uniformize(K));
}
BENCHMARK(BM_Uniformize)->Arg(12)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_EmbedGeneral(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const AFMetric g = AFMetric::schwarzschild_isotropic(1.0);
  const Immersion s = tilted(L, 20.0, g);
  const FundamentalData fd = fundamental_forms(s, g);
  for (auto _ : state) benchmark::DoNotOptimize(embed(s, fd));
}
BENCHMARK(BM_EmbedGeneral)->Arg(12)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_EmbedAxisymmetric(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  const Immersion s = kerr_sphere(L, 40.0);
  const FundamentalData fd = fundamental_forms(s, kerr);
  for (auto _ : state) benchmark::DoNotOptimize(embed(s, fd));
}
BENCHMARK(BM_EmbedAxisymmetric)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MassRow(benchmark::State& state) {
  const AFMetric kerr = AFMetric::kerr_slice(1.0, 0.5);
  const Immersion s = kerr_sphere(16, 40.0);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_mass_row(s, 40.0, kerr));
}
BENCHMARK(BM_MassRow)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
