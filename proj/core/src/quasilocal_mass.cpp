#include "qlm/quasilocal_mass.hpp"

#include <cmath>
#include <numbers>

#include "qlm/errors.hpp"

namespace qlm {

namespace {
constexpr double kPi = std::numbers::pi;
}

double hawking_mass(const FundamentalData& fd) {
  const double willmore = fd.integrate(fd.H.cwiseAbs2());
  return std::sqrt(fd.area) / std::pow(16.0 * kPi, 1.5) * (16.0 * kPi - willmore);
}

double brown_york_mass(const FundamentalData& fd, const IsometricEmbedding& e) {
  if (e.grid != fd.grid) throw DomainError("brown_york_mass: embedding lives on a different grid");
  if (fd.K.minCoeff() <= 0.0) throw DomainError("brown_york_mass: Gauss curvature is not positive");
  return fd.integrate(e.H0 - fd.H) / (8.0 * kPi);
}

const char* status_name(EmbeddingStatus s) {
  switch (s) {
    case EmbeddingStatus::kOk: return "ok";
    case EmbeddingStatus::kNotConvex: return "not_convex";
    case EmbeddingStatus::kOutOfRegime: return "out_of_regime";
    case EmbeddingStatus::kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

MassValues assemble_mass_row(const Immersion& s, double r_label, const AFMetric& metric,
                             const EmbedOptions& options) {
  const FundamentalData fd = fundamental_forms(s, metric);
  MassValues row;
  row.r_label = r_label;
  row.area = fd.area;
  row.hawking = hawking_mass(fd);
  row.adm_reference = metric.adm_mass_exact();
  row.r_min = fd.r_min;

  if (fd.K.minCoeff() <= 0.0) {
    row.status = EmbeddingStatus::kNotConvex;
    row.failure = "Gauss curvature is not positive";
    return row;
  }
  try {
    IsometricEmbedding e = embed(s, fd, options);
    e.tau = metric.decay_order();
    row.k_deviation = e.uniformization.diagnostics.k_deviation;
    row.metric_residual = e.metric_residual;
    row.h0_deviation = e.h0_deviation;
    row.brown_york = brown_york_mass(fd, e);
  } catch (const DomainError& ex) {
    row.status = EmbeddingStatus::kOutOfRegime;
    row.failure = ex.what();
  } catch (const SolverError& ex) {
    row.status = EmbeddingStatus::kSolverFailure;
    row.failure = ex.what();
  }
  return row;
}

}  // namespace qlm
