#include "qlm/sphere_spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qlm/errors.hpp"

namespace qlm {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (t * p1 - p0) / (t * t - 1.0);
    nodes[i] = t;
    weights[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

SphereGrid::SphereGrid(int band_limit) : band_limit_(band_limit) {
  if (band_limit < 4) throw std::invalid_argument("SphereGrid: band limit must be >= 4");
  std::vector<double> t, wt;
  gauss_legendre(n_theta(), t, wt);
  theta_.resize(n_theta());
  theta_weight_ = wt;
  for (int p = 0; p < n_theta(); ++p) theta_[p] = std::acos(t[p]);
  phi_.resize(n_phi());
  const double dphi = 2.0 * std::numbers::pi / n_phi();
  for (int q = 0; q < n_phi(); ++q) phi_[q] = q * dphi;

  weights_.resize(size());
  for (int p = 0; p < n_theta(); ++p)
    for (int q = 0; q < n_phi(); ++q) weights_[p * n_phi() + q] = wt[p] * dphi;

  legendre_.reserve(n_theta());
  for (int p = 0; p < n_theta(); ++p) legendre_.push_back(legendre_table(band_limit_, theta_[p]));

  const int M = band_limit_ + 1;
  cos_.resize(n_phi() * M);
  sin_.resize(n_phi() * M);
  for (int q = 0; q < n_phi(); ++q)
    for (int m = 0; m < M; ++m) {
      cos_[q * M + m] = std::cos(m * phi_[q]);
      sin_[q * M + m] = std::sin(m * phi_[q]);
    }
}

Eigen::Vector3d SphereGrid::unit_vector(int node) const {
  const double th = theta_of(node);
  const double ph = phi_of(node);
  return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

const std::vector<double>& SphereGrid::table(int p, Derivative which) const {
  switch (which) {
    case Derivative::kTheta:
      return legendre_[p].dtheta;
    case Derivative::kPhiOverSin:
      return legendre_[p].m_over_sin;
    default:
      return legendre_[p].value;
  }
}

Eigen::VectorXd SphereGrid::analyze(const Eigen::VectorXd& nodal) const {
  if (nodal.size() != size()) throw std::invalid_argument("analyze: field/grid size mismatch");
  const int L = band_limit_;
  const int M = L + 1;
  const double dphi = 2.0 * std::numbers::pi / n_phi();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n_coeffs());
  std::vector<double> C(M), S(M);
  for (int p = 0; p < n_theta(); ++p) {
    std::fill(C.begin(), C.end(), 0.0);
    std::fill(S.begin(), S.end(), 0.0);
    for (int q = 0; q < n_phi(); ++q) {
      const double f = nodal[p * n_phi() + q];
      const double* cq = &cos_[q * M];
      const double* sq = &sin_[q * M];
      for (int m = 0; m < M; ++m) {
        C[m] += f * cq[m];
        S[m] += f * sq[m];
      }
    }
    const double w = theta_weight_[p] * dphi;
    const auto& P = legendre_[p].value;
    for (int l = 0; l <= L; ++l) {
      a[harmonic_index(l, 0)] += w * P[LegendreTable::packed_index(l, 0)] * C[0];
      for (int m = 1; m <= l; ++m) {
        const double pw = w * kSqrt2 * P[LegendreTable::packed_index(l, m)];
        a[harmonic_index(l, m)] += pw * C[m];
        a[harmonic_index(l, -m)] += pw * S[m];
      }
    }
  }
  return a;
}

Eigen::VectorXd SphereGrid::synthesize(const Eigen::VectorXd& coeffs, Derivative which) const {
  if (coeffs.size() != n_coeffs()) throw std::invalid_argument("synthesize: band-limit mismatch");
  const int L = band_limit_;
  const int M = L + 1;
  Eigen::VectorXd out(size());
  std::vector<double> Gc(M), Gs(M);
  for (int p = 0; p < n_theta(); ++p) {
    const auto& P = table(p, which);
    std::fill(Gc.begin(), Gc.end(), 0.0);
    std::fill(Gs.begin(), Gs.end(), 0.0);
    for (int l = 0; l <= L; ++l) {
      Gc[0] += coeffs[harmonic_index(l, 0)] * P[LegendreTable::packed_index(l, 0)];
      for (int m = 1; m <= l; ++m) {
        const double pl = kSqrt2 * P[LegendreTable::packed_index(l, m)];
        Gc[m] += coeffs[harmonic_index(l, m)] * pl;
        Gs[m] += coeffs[harmonic_index(l, -m)] * pl;
      }
    }
    if (which == Derivative::kPhiOverSin) {
      // d/dphi maps (cos, sin) -> (-sin, cos); the m factor is in the table.
      for (int m = 0; m < M; ++m) {
        const double c = Gc[m];
        Gc[m] = Gs[m];
        Gs[m] = -c;
      }
    }
    for (int q = 0; q < n_phi(); ++q) {
      const double* cq = &cos_[q * M];
      const double* sq = &sin_[q * M];
      double f = 0.0;
      for (int m = 0; m < M; ++m) f += Gc[m] * cq[m] + Gs[m] * sq[m];
      out[p * n_phi() + q] = f;
    }
  }
  return out;
}

Eigen::VectorXd SphereGrid::synthesize_adjoint(const Eigen::VectorXd& nodal, Derivative which) const {
  if (nodal.size() != size()) throw std::invalid_argument("synthesize_adjoint: size mismatch");
  const int L = band_limit_;
  const int M = L + 1;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n_coeffs());
  std::vector<double> C(M), S(M);
  for (int p = 0; p < n_theta(); ++p) {
    std::fill(C.begin(), C.end(), 0.0);
    std::fill(S.begin(), S.end(), 0.0);
    for (int q = 0; q < n_phi(); ++q) {
      const double f = nodal[p * n_phi() + q];
      const double* cq = &cos_[q * M];
      const double* sq = &sin_[q * M];
      for (int m = 0; m < M; ++m) {
        C[m] += f * cq[m];
        S[m] += f * sq[m];
      }
    }
    if (which == Derivative::kPhiOverSin) {
      // Transpose of the (Gc, Gs) -> (Gs, -Gc) swap used in synthesize().
      for (int m = 0; m < M; ++m) {
        const double c = C[m];
        C[m] = -S[m];
        S[m] = c;
      }
    }
    const auto& P = table(p, which);
    for (int l = 0; l <= L; ++l) {
      a[harmonic_index(l, 0)] += P[LegendreTable::packed_index(l, 0)] * C[0];
      for (int m = 1; m <= l; ++m) {
        const double pl = kSqrt2 * P[LegendreTable::packed_index(l, m)];
        a[harmonic_index(l, m)] += pl * C[m];
        a[harmonic_index(l, -m)] += pl * S[m];
      }
    }
  }
  return a;
}

SphereGrid::PointValue SphereGrid::evaluate(const Eigen::VectorXd& coeffs, double theta,
                                            double phi) const {
  const int L = band_limit_;
  const LegendreTable tab = legendre_table(L, theta);
  PointValue out;
  for (int l = 0; l <= L; ++l) {
    const int i0 = LegendreTable::packed_index(l, 0);
    const double a0 = coeffs[harmonic_index(l, 0)];
    out.value += a0 * tab.value[i0];
    out.d_theta += a0 * tab.dtheta[i0];
    for (int m = 1; m <= l; ++m) {
      const int i = LegendreTable::packed_index(l, m);
      const double c = std::cos(m * phi), s = std::sin(m * phi);
      const double ac = coeffs[harmonic_index(l, m)];
      const double as = coeffs[harmonic_index(l, -m)];
      out.value += kSqrt2 * tab.value[i] * (ac * c + as * s);
      out.d_theta += kSqrt2 * tab.dtheta[i] * (ac * c + as * s);
      out.d_phi += kSqrt2 * tab.value[i] * m * (-ac * s + as * c);
    }
  }
  return out;
}

Eigen::VectorXd SphereGrid::synthesize_on(const Eigen::VectorXd& coeffs,
                                          std::span<const double> thetas,
                                          std::span<const double> phis) const {
  const int L = band_limit_;
  const int M = L + 1;
  const int nphi = static_cast<int>(phis.size());
  std::vector<double> cs(nphi * M), sn(nphi * M);
  for (int q = 0; q < nphi; ++q)
    for (int m = 0; m < M; ++m) {
      cs[q * M + m] = std::cos(m * phis[q]);
      sn[q * M + m] = std::sin(m * phis[q]);
    }
  Eigen::VectorXd out(thetas.size() * phis.size());
  std::vector<double> Gc(M), Gs(M);
  for (std::size_t p = 0; p < thetas.size(); ++p) {
    const LegendreTable tab = legendre_table(L, thetas[p]);
    std::fill(Gc.begin(), Gc.end(), 0.0);
    std::fill(Gs.begin(), Gs.end(), 0.0);
    for (int l = 0; l <= L; ++l) {
      Gc[0] += coeffs[harmonic_index(l, 0)] * tab.value[LegendreTable::packed_index(l, 0)];
      for (int m = 1; m <= l; ++m) {
        const double pl = kSqrt2 * tab.value[LegendreTable::packed_index(l, m)];
        Gc[m] += coeffs[harmonic_index(l, m)] * pl;
        Gs[m] += coeffs[harmonic_index(l, -m)] * pl;
      }
    }
    for (int q = 0; q < nphi; ++q) {
      double f = 0.0;
      for (int m = 0; m < M; ++m) f += Gc[m] * cs[q * M + m] + Gs[m] * sn[q * M + m];
      out[p * nphi + q] = f;
    }
  }
  return out;
}

ScalarField::ScalarField(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw std::invalid_argument("ScalarField: null grid");
  if (values.size() != grid->size()) throw std::invalid_argument("ScalarField: size mismatch");
}

ScalarField ScalarField::constant(GridPtr g, double c) {
  const int n = g->size();
  return ScalarField(std::move(g), Eigen::VectorXd::Constant(n, c));
}

HarmonicCoeffs::HarmonicCoeffs(int L, Eigen::VectorXd coeffs) : band_limit(L), a(std::move(coeffs)) {
  if (a.size() != harmonic_count(L)) throw std::invalid_argument("HarmonicCoeffs: length mismatch");
}

HarmonicCoeffs analyze(const ScalarField& field) {
  return HarmonicCoeffs(field.grid->band_limit(), field.grid->analyze(field.values));
}

ScalarField synthesize(const HarmonicCoeffs& coeffs, const GridPtr& grid) {
  if (coeffs.band_limit != grid->band_limit())
    throw std::invalid_argument("synthesize: band-limit mismatch");
  return ScalarField(grid, grid->synthesize(coeffs.a));
}

HarmonicCoeffs laplace_beltrami(const HarmonicCoeffs& coeffs) {
  HarmonicCoeffs out = coeffs;
  for (int l = 0; l <= coeffs.band_limit; ++l)
    for (int m = -l; m <= l; ++m) out(l, m) *= -double(l) * (l + 1);
  return out;
}

Eigen::Vector3d mobius_map(const Eigen::Vector3d& b, const Eigen::Vector3d& x) {
  const double bb = b.squaredNorm();
  const double xb = x.dot(b);
  return ((1.0 - bb) * x + 2.0 * (1.0 + xb) * b) / (1.0 + 2.0 * xb + bb);
}

double mobius_conformal_factor(const Eigen::Vector3d& b, const Eigen::Vector3d& x) {
  const double bb = b.squaredNorm();
  const double e = (1.0 - bb) / (1.0 + 2.0 * x.dot(b) + bb);
  return e * e;
}

namespace {

Eigen::Vector3d to_angles_unit(const Eigen::Vector3d& y, double& theta, double& phi) {
  theta = std::acos(std::clamp(y.z() / y.norm(), -1.0, 1.0));
  phi = std::atan2(y.y(), y.x());
  return y;
}

// u o T_b + w_b on the grid, from the coefficients of u.
Eigen::VectorXd gauge_transform(const SphereGrid& grid, const Eigen::VectorXd& u_coeffs,
                                const Eigen::Vector3d& b) {
  Eigen::VectorXd out(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Eigen::Vector3d x = grid.unit_vector(i);
    double th, ph;
    to_angles_unit(mobius_map(b, x), th, ph);
    out[i] = grid.evaluate(u_coeffs, th, ph).value + 0.5 * std::log(mobius_conformal_factor(b, x));
  }
  return out;
}

Eigen::Vector3d moments(const SphereGrid& grid, const Eigen::VectorXd& u) {
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (int i = 0; i < grid.size(); ++i) m += grid.weight(i) * std::exp(2.0 * u[i]) * grid.unit_vector(i);
  return m;
}

}  // namespace

MobiusPullback apply_mobius(const ScalarField& field, const Eigen::Vector3d& b) {
  if (b.norm() >= 1.0) throw DomainError("apply_mobius: |b| must be < 1");
  const SphereGrid& grid = *field.grid;
  const Eigen::VectorXd coeffs = grid.analyze(field.values);
  Eigen::VectorXd pulled(grid.size()), factor(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Eigen::Vector3d x = grid.unit_vector(i);
    double th, ph;
    to_angles_unit(mobius_map(b, x), th, ph);
    pulled[i] = grid.evaluate(coeffs, th, ph).value;
    factor[i] = mobius_conformal_factor(b, x);
  }
  return {ScalarField(field.grid, std::move(pulled)), ScalarField(field.grid, std::move(factor))};
}

Eigen::Vector3d conformal_moments(const ScalarField& u) { return moments(*u.grid, u.values); }

GaugeResult center_gauge(const ScalarField& u, const GaugeOptions& options) {
  const SphereGrid& grid = *u.grid;
  const Eigen::VectorXd coeffs = grid.analyze(u.values);

  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  auto residual_at = [&](const Eigen::Vector3d& bb, Eigen::VectorXd* field) {
    Eigen::VectorXd v = bb.isZero() ? u.values : gauge_transform(grid, coeffs, bb);
    const Eigen::Vector3d g = moments(grid, v);
    if (field) *field = std::move(v);
    return g;
  };

  Eigen::VectorXd current;
  Eigen::Vector3d g = residual_at(b, &current);
  int iter = 0;
  for (; iter < options.max_iterations && g.cwiseAbs().maxCoeff() > options.tolerance; ++iter) {
    Eigen::Matrix3d J;
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[k] = h;
      J.col(k) = (residual_at(b + e, nullptr) - residual_at(b - e, nullptr)) / (2.0 * h);
    }
    const Eigen::Vector3d step = -J.fullPivLu().solve(g);
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
      const Eigen::Vector3d trial = b + lambda * step;
      if (trial.norm() >= 1.0) continue;
      Eigen::VectorXd field;
      const Eigen::Vector3d gt = residual_at(trial, &field);
      if (gt.norm() < g.norm()) {
        b = trial;
        g = gt;
        current = std::move(field);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  const double res = g.cwiseAbs().maxCoeff();
  if (res > options.tolerance)
    throw SolverError("center_gauge: damped Newton did not converge", res);
  return {ScalarField(u.grid, std::move(current)), b, res, iter};
}

}  // namespace qlm
