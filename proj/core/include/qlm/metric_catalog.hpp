#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qlm {

using SpacePoint = Eigen::Vector3d;

enum class MetricFamily {
  kEuclidean,
  kSchwarzschildIsotropic,
  kSchwarzschildStandard,
  kKerrSlice,
  kConformalPerturbed,
};

/// Analytic asymptotically flat 3-metric on the exterior of a ball in R^3.
///
/// Families:
///   euclidean
///   schwarzschild_isotropic  g = phi^4 delta, phi = 1 + m / 2r
///   schwarzschild_standard   g = delta + 2m / (r - 2m) x x / r^2
///   kerr_slice               Boyer-Lindquist t = const slice in the chart
///                            x = r sin(th) cos(ph), y = r sin(th) sin(ph), z = r cos(th)
///   conformal_perturbed      g = phi^4 delta,
///                            phi = 1 + m / 2r + eps Y_{l,k}(x / r) r^{-tau_extra}
///
/// An optional chart rotation (rotation vector) expresses the same metric in
/// rotated Cartesian coordinates x = Q x'.
struct AFMetric {
  MetricFamily family = MetricFamily::kEuclidean;
  double mass = 0.0;
  double spin = 0.0;        // kerr a
  double epsilon = 0.0;     // conformal_perturbed amplitude
  int degree = 0;           // conformal_perturbed l
  int order = 0;            // conformal_perturbed m
  double tau_extra = 1.0;   // conformal_perturbed decay of the harmonic term
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();

  static AFMetric euclidean();
  static AFMetric schwarzschild_isotropic(double m);
  static AFMetric schwarzschild_standard(double m);
  static AFMetric kerr_slice(double m, double a);
  static AFMetric conformal_perturbed(double m, double eps, int l, int m_order, double tau_extra);

  /// Throws ConfigError when the parameters are outside the family's range.
  void validate() const;

  /// Decay order tau in (1/2, 1].
  double decay_order() const;
  /// Twice the natural singular radius of the family.
  double exclusion_radius() const;
  /// Total mass of the end; every catalog family has ADM mass m.
  double adm_mass_exact() const { return family == MetricFamily::kEuclidean ? 0.0 : mass; }

  std::string family_name() const;
  /// Whitespace-separated key=value text, e.g. "kerr_slice m=1 a=0.5".
  std::string to_string() const;
  static AFMetric parse(std::string_view text);

  Eigen::Matrix3d chart_rotation() const;
};

/// Metric values with first and second coordinate derivatives at a point.
struct MetricJet {
  Eigen::Matrix3d g;
  std::array<Eigen::Matrix3d, 3> dg;                   // dg[k](i,j) = d_k g_ij
  std::array<std::array<Eigen::Matrix3d, 3>, 3> ddg;   // ddg[k][l](i,j) = d_k d_l g_ij
};

/// Gamma^k_ij stored as gamma[k](i, j).
struct Christoffel {
  std::array<Eigen::Matrix3d, 3> gamma;
};

/// Fully covariant Riemann tensor R_ijkl = g_im R^m_jkl with
/// R(d_k, d_l) d_j = R^m_jkl d_m.
struct RiemannTensor {
  std::array<double, 81> r{};
  double operator()(int i, int j, int k, int l) const { return r[((i * 3 + j) * 3 + k) * 3 + l]; }
  double& operator()(int i, int j, int k, int l) { return r[((i * 3 + j) * 3 + k) * 3 + l]; }
};

/// Exact analytic jet. Throws DomainError inside the exclusion radius.
MetricJet evaluate_jet(const AFMetric& metric, const SpacePoint& x);

Christoffel christoffel(const MetricJet& jet);
RiemannTensor riemann(const MetricJet& jet);
double scalar_curvature(const MetricJet& jet);
double scalar_curvature(const AFMetric& metric, const SpacePoint& x);
/// Sectional curvature of the plane spanned by X and Y.
double sectional_curvature(const MetricJet& jet, const RiemannTensor& rm, const Eigen::Vector3d& X,
                           const Eigen::Vector3d& Y);

/// (g_ij,i - g_ii,j) nu^j for a Euclidean unit vector nu.
double adm_flux_density(const MetricJet& jet, const Eigen::Vector3d& nu);

struct FluxResult {
  double value = 0.0;
  double refinement_change = 0.0;  // |value(2L) - value(L)|
  bool underresolved = false;
};

/// (1/16 pi) times the flux over the coordinate sphere |x| = r, by spectral
/// quadrature at the given band limit, with a band-limit doubling check.
FluxResult adm_surface_integral(const AFMetric& metric, double r, int band_limit = 16,
                                double tolerance = 1e-10);

struct AdmEstimate {
  double value = 0.0;
  double error = 0.0;
  double fitted_order = 0.0;  // p in c0 + c1 r^-p
  bool non_monotone = false;
  bool underresolved = false;
  std::vector<double> radii;
  std::vector<double> fluxes;
};

/// Extrapolates the coordinate-sphere flux to r -> infinity by fitting
/// c0 + c1 r^{-p} to the last three radii of an increasing schedule.
AdmEstimate adm_mass(const AFMetric& metric, std::span<const double> radii, int band_limit = 16);

/// Same extrapolation applied to an arbitrary series.
AdmEstimate richardson_extrapolate(std::span<const double> radii, std::span<const double> values);

}  // namespace qlm
