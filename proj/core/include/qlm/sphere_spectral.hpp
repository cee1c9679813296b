#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <vector>

#include "qlm/harmonics.hpp"

namespace qlm {

/// n-point Gauss-Legendre rule on [-1, 1], abscissae in decreasing order.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss-Legendre (in cos theta) by uniform-phi quadrature grid on the unit
/// sphere, with band-limited real spherical-harmonic transforms.
///
/// Node (p, q) has flat index p * n_phi() + q; theta increases with p.
/// Integrates every harmonic of degree <= 2L exactly up to roundoff.
class SphereGrid {
 public:
  enum class Derivative { kNone, kTheta, kPhiOverSin };

  explicit SphereGrid(int band_limit);

  static std::shared_ptr<const SphereGrid> build(int band_limit) {
    return std::make_shared<const SphereGrid>(band_limit);
  }

  int band_limit() const { return band_limit_; }
  int n_theta() const { return band_limit_ + 1; }
  int n_phi() const { return 2 * band_limit_ + 2; }
  int size() const { return n_theta() * n_phi(); }
  int n_coeffs() const { return harmonic_count(band_limit_); }

  double theta(int p) const { return theta_[p]; }
  double phi(int q) const { return phi_[q]; }
  double theta_of(int node) const { return theta_[node / n_phi()]; }
  double phi_of(int node) const { return phi_[node % n_phi()]; }
  double weight(int node) const { return weights_[node]; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Vector3d unit_vector(int node) const;

  double integrate(const Eigen::VectorXd& nodal) const { return weights_.dot(nodal); }

  Eigen::VectorXd analyze(const Eigen::VectorXd& nodal) const;
  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs,
                             Derivative which = Derivative::kNone) const;
  /// Transpose of synthesize(): coefficient (l,m) receives sum over nodes of
  /// the (differentiated) basis function times the nodal value.
  Eigen::VectorXd synthesize_adjoint(const Eigen::VectorXd& nodal,
                                     Derivative which = Derivative::kNone) const;

  struct PointValue {
    double value = 0.0;
    double d_theta = 0.0;
    double d_phi = 0.0;
  };
  PointValue evaluate(const Eigen::VectorXd& coeffs, double theta, double phi) const;

  /// Synthesis on an arbitrary tensor-product (theta, phi) mesh; the result is
  /// row-major in theta.
  Eigen::VectorXd synthesize_on(const Eigen::VectorXd& coeffs,
                                std::span<const double> thetas,
                                std::span<const double> phis) const;

 private:
  const std::vector<double>& table(int p, Derivative which) const;

  int band_limit_;
  std::vector<double> theta_;
  std::vector<double> phi_;
  std::vector<double> theta_weight_;
  Eigen::VectorXd weights_;
  std::vector<LegendreTable> legendre_;
  std::vector<double> cos_;  // [q * (L + 1) + m]
  std::vector<double> sin_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

/// Function on the sphere sampled at grid nodes.
struct ScalarField {
  GridPtr grid;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(GridPtr g, Eigen::VectorXd v);
  static ScalarField constant(GridPtr g, double c);
  /// Samples f(unit_vector) at every node.
  template <class F>
  static ScalarField from_function(GridPtr g, F&& f) {
    Eigen::VectorXd v(g->size());
    for (int i = 0; i < g->size(); ++i) v[i] = f(g->unit_vector(i));
    return ScalarField(std::move(g), std::move(v));
  }
};

/// Real orthonormal spherical-harmonic coefficients a_{l,m}, 0 <= l <= L.
struct HarmonicCoeffs {
  int band_limit = 0;
  Eigen::VectorXd a;

  HarmonicCoeffs() = default;
  explicit HarmonicCoeffs(int L) : band_limit(L), a(Eigen::VectorXd::Zero(harmonic_count(L))) {}
  HarmonicCoeffs(int L, Eigen::VectorXd coeffs);

  double& operator()(int l, int m) { return a[harmonic_index(l, m)]; }
  double operator()(int l, int m) const { return a[harmonic_index(l, m)]; }
};

HarmonicCoeffs analyze(const ScalarField& field);
ScalarField synthesize(const HarmonicCoeffs& coeffs, const GridPtr& grid);

/// Multiplies a_{l,m} by -l(l+1).
HarmonicCoeffs laplace_beltrami(const HarmonicCoeffs& coeffs);

// ---------------------------------------------------------------------------
// Conformal dilations of the round sphere.
//
// T_b(x) = ((1 - |b|^2) x + 2 (1 + x.b) b) / (1 + 2 x.b + |b|^2),  |b| < 1,
// the boundary action of the ball automorphism taking 0 to b. It pushes the
// sphere towards b/|b|, satisfies T_b^{-1} = T_{-b}, and
// T_b^* g0 = e^{2 w_b} g0 with e^{w_b} = (1 - |b|^2) / (1 + 2 x.b + |b|^2).

Eigen::Vector3d mobius_map(const Eigen::Vector3d& b, const Eigen::Vector3d& x);
double mobius_conformal_factor(const Eigen::Vector3d& b, const Eigen::Vector3d& x);

struct MobiusPullback {
  ScalarField field;            // f o T_b
  ScalarField conformal_factor; // e^{2 w_b}
};

/// Pulls a field back through T_b. The field is evaluated off-grid through its
/// band-limited expansion.
MobiusPullback apply_mobius(const ScalarField& field, const Eigen::Vector3d& b);

struct GaugeResult {
  ScalarField u;           // u o T_b + w_b
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double residual = 0.0;   // max_i |int e^{2u'} x_i|
  int iterations = 0;
};

struct GaugeOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
};

/// Finds the dilation T_b so that u' = u o T_b + w_b satisfies
/// int e^{2u'} x_i = 0 (i = 1, 2, 3). The metric e^{2u'} g0 is the pullback of
/// e^{2u} g0 by T_b. Throws SolverError when damped Newton fails.
GaugeResult center_gauge(const ScalarField& u, const GaugeOptions& options = {});

/// The three first moments int e^{2u} x_i over the round sphere.
Eigen::Vector3d conformal_moments(const ScalarField& u);

}  // namespace qlm
