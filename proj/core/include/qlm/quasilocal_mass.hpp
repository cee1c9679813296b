#pragma once

#include <optional>
#include <string>

#include "qlm/metric_catalog.hpp"
#include "qlm/surface_geometry.hpp"
#include "qlm/weyl_embedding.hpp"

namespace qlm {

/// Area^{1/2} / (16 pi)^{3/2} * (16 pi - int H^2).
double hawking_mass(const FundamentalData& fd);

/// (1/8 pi) int (H0 - H) over the source surface. H0 is taken node by node
/// from the embedding, which shares the source grid. Throws DomainError if
/// the Gauss curvature is not positive or the grids differ.
double brown_york_mass(const FundamentalData& fd, const IsometricEmbedding& e);

enum class EmbeddingStatus {
  kOk,
  kNotConvex,      // Gauss curvature not positive
  kOutOfRegime,    // sup |K r0^2 - 1| above the uniformization threshold
  kSolverFailure,  // Newton did not converge or the image self-intersects
};

const char* status_name(EmbeddingStatus s);

struct MassValues {
  double r_label = 0.0;
  double area = 0.0;
  double hawking = 0.0;
  std::optional<double> brown_york;  // absent unless status == kOk
  double adm_reference = 0.0;
  EmbeddingStatus status = EmbeddingStatus::kOk;
  std::string failure;               // solver message for failed rows
  double r_min = 0.0;
  double k_deviation = 0.0;          // sup |K r0^2 - 1| of the normalized metric
  double metric_residual = 0.0;      // of the embedding, when present
  double h0_deviation = 0.0;         // sup |H0 - 2 / r0|
};

/// Fundamental forms in the given ambient, embedding, both masses and the
/// exact ADM mass of the end. Embedding problems give a partial row.
MassValues assemble_mass_row(const Immersion& s, double r_label, const AFMetric& metric,
                             const EmbedOptions& options = {});

}  // namespace qlm
