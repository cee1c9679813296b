#pragma once

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlm/metric_catalog.hpp"
#include "qlm/sphere_spectral.hpp"

namespace qlm {

/// Radial description y = c + R(w) w of a star-shaped surface.
struct RadialForm {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  ScalarField radius;
};

/// Closed surface sampled at the nodes of a sphere grid: node i sits at the
/// chart point (y[0][i], y[1][i], y[2][i]).
struct Immersion {
  GridPtr grid;
  std::array<Eigen::VectorXd, 3> y;
  std::optional<RadialForm> radial;

  Eigen::Vector3d position(int node) const { return {y[0][node], y[1][node], y[2][node]}; }
  /// Harmonic coefficients of the three Cartesian components.
  std::array<Eigen::VectorXd, 3> coefficients() const;
  /// Position at an arbitrary parameter point through the band-limited expansion.
  Eigen::Vector3d evaluate(const std::array<Eigen::VectorXd, 3>& coeffs, double theta, double phi) const;
};

/// y = c + R(w) w. Throws DomainError if R <= 0 somewhere or a node falls
/// inside the exclusion radius of the given metric.
Immersion immerse_radial(const Eigen::Vector3d& center, const ScalarField& R,
                         const AFMetric& metric = AFMetric::euclidean());

/// Coordinate sphere |x - c| = r on a grid of band limit L.
Immersion coordinate_sphere(int band_limit, double r, const Eigen::Vector3d& center = Eigen::Vector3d::Zero(),
                            const AFMetric& metric = AFMetric::euclidean());

/// Extrinsic geometry of an immersion in one ambient metric.
///
/// The parameter frame at each node is t1 = dy/dtheta, t2 = (dy/dphi) / sin(theta);
/// two-index arrays (h, A, ...) are components in that frame.
struct FundamentalData {
  GridPtr grid;
  bool euclidean = true;  // hatted data
  std::vector<Eigen::Matrix<double, 3, 2>> frame;
  std::vector<Eigen::Matrix2d> h;
  std::vector<Eigen::Matrix2d> A;
  std::vector<Eigen::Matrix2d> A_ring;
  std::vector<Eigen::Vector3d> normal;            // unit normal vector in the ambient metric
  std::vector<Eigen::Vector3d> euclidean_normal;  // Euclidean unit normal
  Eigen::VectorXd area_element;                   // per unit round area
  Eigen::VectorXd H;
  Eigen::VectorXd K;
  Eigen::VectorXd norm_A;
  Eigen::VectorXd norm_A_ring;
  Eigen::VectorXd norm_grad_A_ring;
  Eigen::VectorXd trace_A_ring;
  double area = 0.0;
  double diameter = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;

  double integrate(const Eigen::VectorXd& f) const;
  /// Eigenvalues of the shape operator at a node, ascending.
  Eigen::Vector2d principal_curvatures(int node) const;
  /// Tangential 3x3 tensor sum_ab (h^-1 M h^-1)_ab t_a t_b^T.
  Eigen::Matrix3d lift(int node, const Eigen::Matrix2d& M) const;
};

/// Throws DomainError on a degenerate induced metric.
FundamentalData fundamental_forms(const Immersion& s, const AFMetric& ambient);
inline FundamentalData fundamental_forms_hat(const Immersion& s) {
  return fundamental_forms(s, AFMetric::euclidean());
}

struct NearlyRoundReport {
  struct Member {
    double r = 0.0;
    double c_trace_free = 0.0;  // r^{1+tau} sup(|A_ring| + r |grad A_ring|)
    double radial_ratio = 0.0;  // r_max / r_min
    double diameter_ratio = 0.0;
    double area_ratio = 0.0;    // Area / r^2
    double c_second_form = 0.0; // r sup |A|
  };
  std::vector<Member> members;
  double c_trace_free = 0.0;
  double radial_ratio = 0.0;
  double diameter_ratio = 0.0;
  double area_ratio_max = 0.0;
  double area_ratio_min = 0.0;
  double c_second_form = 0.0;
  double trace_free_slope = 0.0;  // log-log growth of c_trace_free against r
  bool bounded = true;
  std::vector<std::string> flags;
};

/// Constants of the nearly-round conditions along a family with increasing r_min.
NearlyRoundReport nearly_round_diagnostics(std::span<const FundamentalData> family, double tau);

struct BestFitSphere {
  double r0 = 0.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double curvature_deviation = 0.0;  // sup |lambda_i - 1/r0|
  double position_deviation = 0.0;   // sup |(y - a) - r0 n|
};

/// Requires Euclidean data; throws DomainError if the mean curvature is not positive.
BestFitSphere best_fit_sphere(const FundamentalData& hat, const Immersion& s);

/// sup over nodes and Euclidean-orthonormal tangent pairs of
/// |A_hat(X,Y) - |grad rho|_g A(X,Y) - X^i Y^j Gamma^k_ij d_k rho|.
double second_form_relation_residual(const Immersion& s, const AFMetric& metric);

struct DistanceHessianReport {
  double algebraic = 0.0;  // sup |D^2 rho - (B + (H_hat/2) P)|
  double spot_check = 0.0; // max deviation from a finite-difference distance Hessian
  int spot_nodes = 0;
};

/// Distance-Hessian decomposition on the surface, with a finite-difference
/// check against the true point-to-surface distance at eight nodes.
DistanceHessianReport distance_hessian_residual(const Immersion& s, double fd_step_fraction = 1e-4);

/// Distance Hessian (shape-operator extension) at a node of Euclidean data.
Eigen::Matrix3d distance_hessian(const FundamentalData& hat, int node);

/// sup |H - RHS| r^{1+2 tau} where RHS is the five-term expansion of H in
/// terms of H_hat, sigma and the distance function.
double mean_curvature_expansion_residual(const Immersion& s, const AFMetric& metric);

struct IntegralIdentityReport {
  double lhs = 0.0;             // int (H - H_hat) dsigma
  double rhs = 0.0;             // leading flux and Hessian terms
  double scaled_residual = 0.0; // |lhs - rhs| r^{2 tau - 1}
  double ibp_lhs = 0.0;         // int sigma_st,i n_i n_s n_t dsigma0
  double ibp_rhs = 0.0;         // after the divergence theorem
  double ibp_residual = 0.0;    // |ibp_lhs - ibp_rhs|
};

IntegralIdentityReport integral_identity_residual(const Immersion& s, const AFMetric& metric);

/// Node table with columns theta, phi, y1, y2, y3.
void write_immersion_csv(std::ostream& out, const Immersion& s);

}  // namespace qlm
