#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "qlm/metric_catalog.hpp"
#include "qlm/sphere_spectral.hpp"
#include "qlm/surface_geometry.hpp"

namespace qlm {

using ComponentFields = std::array<Eigen::VectorXd, 3>;

struct UniformizationDiagnostics {
  double u0_norm = 0.0;      // L2 norm of the mean part
  double u1_norm = 0.0;      // L2 norm of the l = 1 part
  double u2_norm = 0.0;      // L2 norm of the l >= 2 part
  double k_deviation = 0.0;  // sup |K - 1|
  double residual = 0.0;     // sup of the projected PDE residual
  double nodal_residual = 0.0;
  double obstruction = 0.0;  // l = 1 residual left when the full Newton step stalls
  bool restricted = false;   // Newton finished in the l != 1 complement
  int iterations = 0;
};

struct UniformizeOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  double epsilon0 = 0.5;  // admissible sup |K - 1|
};

struct UniformizeResult {
  ScalarField u;          // solution of  Lap u + K e^{2u} = 1
  ScalarField u_gauged;   // u o T_b + w_b with balanced first moments
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  UniformizationDiagnostics diagnostics;
};

/// Solves Lap u + K e^{2u} = 1 on the round sphere by Galerkin Newton in
/// harmonic space, then fixes the dilation gauge. K holds the Gauss curvature
/// of the normalized metric at the grid nodes. Throws DomainError when
/// sup |K - 1| > epsilon0 and SolverError when Newton stalls.
UniformizeResult uniformize(const ScalarField& K, const UniformizeOptions& options = {});

struct EmbeddingSolveOptions {
  double tolerance = 1e-8;  // sup nodal first-fundamental-form mismatch
  double target = 1e-12;    // keep iterating towards this while steps still reduce the residual
  int max_iterations = 30;
  int max_inner_iterations = 400;
};

struct EmbeddingSolution {
  ComponentFields coeffs;   // harmonic coefficients of the three components
  ComponentFields nodal;
  double residual = 0.0;
  int iterations = 0;
};

/// Finds Y with dY(t_a) . dY(t_b) = h_ab at every node, in the parameter frame
/// t1 = d/dtheta, t2 = (d/dphi) / sin(theta). Gauss-Newton with an inner
/// preconditioned CGLS solve; centroid and l = 1 rotation are pinned after
/// every step. Throws SolverError with the best residual on failure.
EmbeddingSolution solve_embedding(const GridPtr& grid, const std::vector<Eigen::Matrix2d>& h,
                                  const ComponentFields& initial_coeffs, const EmbeddingSolveOptions& options = {});

/// Round embedding composed with the dilation found by the uniformizer:
/// e^{u'(T_{-b} w)} T_{-b}(w).
ComponentFields initial_embedding_guess(const UniformizeResult& uni);

/// Coefficients of the identity embedding w -> w.
ComponentFields round_embedding_coeffs(int band_limit);

/// Surface-of-revolution data ds^2 = E dtheta^2 + G dphi^2, with dG = dG/dtheta.
struct AxisymmetricProfile {
  std::function<double(double)> E;
  std::function<double(double)> G;
  std::function<double(double)> dG;
};

/// Image (R cos phi, R sin phi, z_mid - z) at the grid nodes with R = sqrt(G)
/// and z(theta) = int_0^theta sqrt(E - R'^2). Throws DomainError if
/// E < R'^2 somewhere.
ComponentFields embed_axisymmetric(const AxisymmetricProfile& profile, const GridPtr& grid);

struct EmbedOptions {
  UniformizeOptions uniformize;
  EmbeddingSolveOptions solve;
  bool axisymmetric_shortcut = true;
  double axisymmetry_tolerance = 1e-10;
  bool cross_validate = false;  // also run the general solver when the shortcut applies
};

struct IsometricEmbedding {
  GridPtr grid;
  double r0 = 0.0;
  Eigen::Vector3d best_fit_center = Eigen::Vector3d::Zero();
  double r_source = 0.0;  // r_min of the source surface
  double tau = 1.0;
  UniformizeResult uniformization;
  ComponentFields image;         // physical scale, nodal
  FundamentalData image_forms;   // Euclidean geometry of the image
  Eigen::VectorXd H0;
  Eigen::VectorXd support;       // Y . n0
  double area = 0.0;
  double volume = 0.0;
  double metric_residual = 0.0;  // sup |h_image - h| / r0^2
  double h0_deviation = 0.0;     // sup |H0 - 2 / r0|
  double support_deviation = 0.0;
  int solver_iterations = 0;
  bool axisymmetric = false;
  double cross_validation = -1.0;  // aligned distance / r0 between shortcut and general path
};

/// Full pipeline for a surface in an AF end: best-fit radius, normalization,
/// uniformization, gauge, embedding solve, rescale.
IsometricEmbedding embed(const Immersion& s, const FundamentalData& fd, const EmbedOptions& options = {});

struct MinkowskiResiduals {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double claim_residual = 0.0;
};

MinkowskiResiduals minkowski_residuals(const IsometricEmbedding& e);

struct VolumeCheck {
  double divergence = 0.0;   // (1/3) int Y . n
  double tetrahedra = 0.0;   // Richardson-extrapolated signed tetrahedron sum
  double relative = 0.0;
};

VolumeCheck check_volume(const IsometricEmbedding& e, int n_theta = 160);

/// Root-mean-square nodal distance after optimal rigid alignment of b onto a.
double aligned_distance(const ComponentFields& a, const ComponentFields& b);

/// Columns theta, phi, x, y, z, H0, support.
void write_embedding_csv(std::ostream& out, const IsometricEmbedding& e);
/// Lat-long triangle mesh with the poles as single vertices.
void write_embedding_obj(std::ostream& out, const IsometricEmbedding& e, int n_theta = 48);

}  // namespace qlm
