#include "qlm/weyl_embedding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "qlm/errors.hpp"

namespace qlm {

using D = SphereGrid::Derivative;

namespace {

constexpr double kPi = std::numbers::pi;

int degree_of(int index) {
  int l = static_cast<int>(std::sqrt(static_cast<double>(index)));
  while (l * l > index) --l;
  while ((l + 1) * (l + 1) <= index) ++l;
  return l;
}

// Dense synthesis matrix: column j holds basis function j at the nodes.
Eigen::MatrixXd synthesis_matrix(const SphereGrid& grid) {
  const int nc = grid.n_coeffs();
  Eigen::MatrixXd Y(grid.size(), nc);
  for (int j = 0; j < nc; ++j) Y.col(j) = grid.synthesize(Eigen::VectorXd::Unit(nc, j));
  return Y;
}

}  // namespace

UniformizeResult uniformize(const ScalarField& K, const UniformizeOptions& options) {
  const SphereGrid& grid = *K.grid;
  const int nc = grid.n_coeffs();
  UniformizationDiagnostics diag;
  diag.k_deviation = (K.values.array() - 1.0).abs().maxCoeff();
  if (!(diag.k_deviation <= options.epsilon0))
    throw DomainError("uniformize: sup |K - 1| exceeds the perturbative threshold");

  const Eigen::MatrixXd Y = synthesis_matrix(grid);
  const Eigen::MatrixXd WY = grid.weights().asDiagonal() * Y;
  Eigen::VectorXd lap(nc);
  std::vector<int> complement;
  for (int j = 0; j < nc; ++j) {
    const int l = degree_of(j);
    lap[j] = -double(l) * (l + 1);
    if (l != 1) complement.push_back(j);
  }

  Eigen::VectorXd a = Eigen::VectorXd::Zero(nc);
  auto projected = [&](const Eigen::VectorXd& c, Eigen::VectorXd* ke2u) {
    const Eigen::VectorXd u = Y * c;
    const Eigen::VectorXd k2 = K.values.array() * (2.0 * u.array()).exp();
    if (ke2u) *ke2u = k2;
    Eigen::VectorXd F = WY.transpose() * (k2.array() - 1.0).matrix();
    F += lap.cwiseProduct(c);
    return F;
  };
  auto measure = [&](const Eigen::VectorXd& F, bool restricted) {
    if (!restricted) return F.norm();
    double s = 0.0;
    for (int j : complement) s += F[j] * F[j];
    return std::sqrt(s);
  };

  bool restricted = false;
  Eigen::VectorXd ke2u;
  Eigen::VectorXd F = projected(a, &ke2u);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    double sup = 0.0;
    for (int j = 0; j < nc; ++j)
      if (!restricted || degree_of(j) != 1) sup = std::max(sup, std::abs(F[j]));
    if (sup <= options.tolerance) break;

    Eigen::MatrixXd J = WY.transpose() * (2.0 * ke2u).asDiagonal() * Y;
    J.diagonal() += lap;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(nc);
    if (!restricted) {
      step = -J.partialPivLu().solve(F);
    } else {
      const int m = static_cast<int>(complement.size());
      Eigen::MatrixXd Jr(m, m);
      Eigen::VectorXd Fr(m);
      for (int p = 0; p < m; ++p) {
        Fr[p] = F[complement[p]];
        for (int q = 0; q < m; ++q) Jr(p, q) = J(complement[p], complement[q]);
      }
      const Eigen::VectorXd sr = -Jr.partialPivLu().solve(Fr);
      for (int p = 0; p < m; ++p) step[complement[p]] = sr[p];
    }

    const double current = measure(F, restricted);
    bool accepted = false;
    double lambda = 1.0;
    for (int halving = 0; halving < 30 && step.allFinite(); ++halving, lambda *= 0.5) {
      Eigen::VectorXd k2;
      const Eigen::VectorXd trial = a + lambda * step;
      const Eigen::VectorXd Ft = projected(trial, &k2);
      if (Ft.allFinite() && measure(Ft, restricted) < current) {
        a = trial;
        F = Ft;
        ke2u = k2;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (restricted) break;
      // Kazdan-Warner type obstruction: continue in the l != 1 complement.
      restricted = true;
    }
  }

  diag.iterations = it;
  diag.restricted = restricted;
  double sup = 0.0, obstruction = 0.0;
  for (int j = 0; j < nc; ++j) {
    if (degree_of(j) == 1) {
      obstruction += F[j] * F[j];
      if (restricted) continue;
    }
    sup = std::max(sup, std::abs(F[j]));
  }
  diag.residual = sup;
  diag.obstruction = std::sqrt(obstruction);
  const Eigen::VectorXd u = Y * a;
  diag.nodal_residual =
      (grid.synthesize(lap.cwiseProduct(a)).array() + K.values.array() * (2.0 * u.array()).exp() - 1.0)
          .abs()
          .maxCoeff();
  for (int j = 0; j < nc; ++j) {
    const int l = degree_of(j);
    (l == 0 ? diag.u0_norm : l == 1 ? diag.u1_norm : diag.u2_norm) += a[j] * a[j];
  }
  diag.u0_norm = std::sqrt(diag.u0_norm);
  diag.u1_norm = std::sqrt(diag.u1_norm);
  diag.u2_norm = std::sqrt(diag.u2_norm);
  if (sup > options.tolerance) throw SolverError("uniformize: Newton iteration did not converge", sup);

  UniformizeResult out;
  out.u = ScalarField(K.grid, u);
  const GaugeResult gauge = center_gauge(out.u);
  out.u_gauged = gauge.u;
  out.b = gauge.b;
  out.diagnostics = diag;
  return out;
}

ComponentFields round_embedding_coeffs(int band_limit) {
  const double c = std::sqrt(4.0 * kPi / 3.0);
  ComponentFields out;
  for (auto& v : out) v = Eigen::VectorXd::Zero(harmonic_count(band_limit));
  out[0][harmonic_index(1, 1)] = c;
  out[1][harmonic_index(1, -1)] = c;
  out[2][harmonic_index(1, 0)] = c;
  return out;
}

ComponentFields initial_embedding_guess(const UniformizeResult& uni) {
  const SphereGrid& grid = *uni.u.grid;
  const Eigen::VectorXd uc = grid.analyze(uni.u_gauged.values);
  ComponentFields nodal;
  for (auto& v : nodal) v.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Eigen::Vector3d y = mobius_map(-uni.b, grid.unit_vector(i));
    const double th = std::acos(std::clamp(y.z(), -1.0, 1.0));
    const double ph = std::atan2(y.y(), y.x());
    const Eigen::Vector3d p = std::exp(grid.evaluate(uc, th, ph).value) * y;
    for (int k = 0; k < 3; ++k) nodal[k][i] = p[k];
  }
  ComponentFields c;
  for (int k = 0; k < 3; ++k) c[k] = grid.analyze(nodal[k]);
  return c;
}

namespace {

// Pins translations (zero l = 0 coefficients) and rotations (symmetric l = 1 block).
void pin_gauge(ComponentFields& c) {
  for (auto& v : c) v[0] = 0.0;
  const int ix = harmonic_index(1, 1), iy = harmonic_index(1, -1), iz = harmonic_index(1, 0);
  Eigen::Matrix3d M;
  for (int k = 0; k < 3; ++k) M.row(k) << c[k][ix], c[k][iy], c[k][iz];
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0) U.col(2) *= -1.0;
  const Eigen::Matrix3d R = U * V.transpose();
  ComponentFields rotated;
  for (int k = 0; k < 3; ++k) rotated[k] = R(0, k) * c[0] + R(1, k) * c[1] + R(2, k) * c[2];
  c = std::move(rotated);
}

struct Frame {
  std::array<Eigen::VectorXd, 3> dt;  // d/dtheta of each component
  std::array<Eigen::VectorXd, 3> dp;  // (d/dphi)/sin(theta)
};

Frame frame_of(const SphereGrid& grid, const ComponentFields& c) {
  Frame f;
  for (int k = 0; k < 3; ++k) {
    f.dt[k] = grid.synthesize(c[k], D::kTheta);
    f.dp[k] = grid.synthesize(c[k], D::kPhiOverSin);
  }
  return f;
}

class MetricMatch {
 public:
  MetricMatch(const SphereGrid& grid, const std::vector<Eigen::Matrix2d>& h) : grid_(grid), h_(h) {
    sw_ = grid.weights().cwiseSqrt();
    const int nc = grid.n_coeffs();
    precond_.resize(nc);
    for (int j = 0; j < nc; ++j) precond_[j] = 1.0 / std::max(1, degree_of(j));
  }

  int nodes() const { return grid_.size(); }

  // Weighted residual (E, sqrt2 F, G) blocks and the sup of the raw mismatch.
  Eigen::VectorXd residual(const Frame& f, double* sup) const {
    const int n = nodes();
    Eigen::VectorXd r(3 * n);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double E = 0, F = 0, G = 0;
      for (int k = 0; k < 3; ++k) {
        E += f.dt[k][i] * f.dt[k][i];
        F += f.dt[k][i] * f.dp[k][i];
        G += f.dp[k][i] * f.dp[k][i];
      }
      const double dE = E - h_[i](0, 0), dF = F - h_[i](0, 1), dG = G - h_[i](1, 1);
      worst = std::max({worst, std::abs(dE), std::abs(dF), std::abs(dG)});
      r[i] = sw_[i] * dE;
      r[n + i] = std::numbers::sqrt2 * sw_[i] * dF;
      r[2 * n + i] = sw_[i] * dG;
    }
    if (sup) *sup = worst;
    return r;
  }

  // J P z for coefficient perturbation z.
  Eigen::VectorXd apply(const Frame& f, const ComponentFields& z) const {
    const int n = nodes();
    Frame d;
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd pz = precond_.cwiseProduct(z[k]);
      d.dt[k] = grid_.synthesize(pz, D::kTheta);
      d.dp[k] = grid_.synthesize(pz, D::kPhiOverSin);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * n);
    for (int k = 0; k < 3; ++k) {
      out.segment(0, n).array() += 2.0 * f.dt[k].array() * d.dt[k].array();
      out.segment(n, n).array() += f.dt[k].array() * d.dp[k].array() + d.dt[k].array() * f.dp[k].array();
      out.segment(2 * n, n).array() += 2.0 * f.dp[k].array() * d.dp[k].array();
    }
    out.segment(0, n).array() *= sw_.array();
    out.segment(n, n).array() *= std::numbers::sqrt2 * sw_.array();
    out.segment(2 * n, n).array() *= sw_.array();
    return out;
  }

  // P J^T r.
  ComponentFields adjoint(const Frame& f, const Eigen::VectorXd& r) const {
    const int n = nodes();
    const Eigen::ArrayXd rE = r.segment(0, n).array() * sw_.array();
    const Eigen::ArrayXd rF = r.segment(n, n).array() * std::numbers::sqrt2 * sw_.array();
    const Eigen::ArrayXd rG = r.segment(2 * n, n).array() * sw_.array();
    ComponentFields out;
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd gt = (2.0 * rE * f.dt[k].array() + rF * f.dp[k].array()).matrix();
      const Eigen::VectorXd gp = (rF * f.dt[k].array() + 2.0 * rG * f.dp[k].array()).matrix();
      out[k] = precond_.cwiseProduct(grid_.synthesize_adjoint(gt, D::kTheta) +
                                     grid_.synthesize_adjoint(gp, D::kPhiOverSin));
    }
    return out;
  }

  const Eigen::VectorXd& preconditioner() const { return precond_; }

 private:
  const SphereGrid& grid_;
  const std::vector<Eigen::Matrix2d>& h_;
  Eigen::VectorXd sw_;
  Eigen::VectorXd precond_;
};

double dot(const ComponentFields& a, const ComponentFields& b) {
  return a[0].dot(b[0]) + a[1].dot(b[1]) + a[2].dot(b[2]);
}

}  // namespace

EmbeddingSolution solve_embedding(const GridPtr& grid_ptr, const std::vector<Eigen::Matrix2d>& h,
                                  const ComponentFields& initial_coeffs, const EmbeddingSolveOptions& options) {
  const SphereGrid& grid = *grid_ptr;
  if (static_cast<int>(h.size()) != grid.size()) throw std::invalid_argument("solve_embedding: metric size mismatch");
  const MetricMatch match(grid, h);

  ComponentFields c = initial_coeffs;
  pin_gauge(c);
  Frame f = frame_of(grid, c);
  double sup = 0.0;
  Eigen::VectorXd r = match.residual(f, &sup);
  double best = sup;
  int it = 0;
  for (; it < options.max_iterations && sup > std::min(options.target, options.tolerance); ++it) {
    // CGLS on min |J P z + r|.
    ComponentFields z;
    for (auto& v : z) v = Eigen::VectorXd::Zero(grid.n_coeffs());
    Eigen::VectorXd res = -r;
    ComponentFields s = match.adjoint(f, res);
    ComponentFields p = s;
    double gamma = dot(s, s);
    const double gamma0 = gamma;
    for (int k = 0; k < options.max_inner_iterations && gamma > 1e-24 * gamma0; ++k) {
      const Eigen::VectorXd q = match.apply(f, p);
      const double qq = q.squaredNorm();
      if (!(qq > 0.0)) break;
      const double alpha = gamma / qq;
      for (int j = 0; j < 3; ++j) z[j] += alpha * p[j];
      res -= alpha * q;
      s = match.adjoint(f, res);
      const double gnew = dot(s, s);
      const double beta = gnew / gamma;
      gamma = gnew;
      for (int j = 0; j < 3; ++j) p[j] = s[j] + beta * p[j];
    }
    ComponentFields step;
    for (int j = 0; j < 3; ++j) step[j] = match.preconditioner().cwiseProduct(z[j]);

    const double current = r.norm();
    bool accepted = false;
    double lambda = 1.0;
    for (int halving = 0; halving < 30; ++halving, lambda *= 0.5) {
      ComponentFields trial = c;
      for (int j = 0; j < 3; ++j) trial[j] += lambda * step[j];
      const Frame ft = frame_of(grid, trial);
      double st = 0.0;
      const Eigen::VectorXd rt = match.residual(ft, &st);
      if (rt.allFinite() && rt.norm() < current) {
        c = std::move(trial);
        pin_gauge(c);
        f = frame_of(grid, c);
        r = match.residual(f, &sup);
        best = std::min(best, sup);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (sup > options.tolerance) throw SolverError("solve_embedding: metric mismatch above tolerance", best);

  EmbeddingSolution out;
  out.iterations = it;
  out.residual = sup;
  for (int k = 0; k < 3; ++k) out.nodal[k] = grid.synthesize(c[k]);
  out.coeffs = std::move(c);
  return out;
}

ComponentFields embed_axisymmetric(const AxisymmetricProfile& profile, const GridPtr& grid_ptr) {
  const SphereGrid& grid = *grid_ptr;
  std::vector<double> gx, gw;
  gauss_legendre(12, gx, gw);

  auto slope2 = [&](double th) {
    const double G = profile.G(th);
    const double dR = profile.dG(th) / (2.0 * std::sqrt(G));
    const double d = profile.E(th) - dR * dR;
    if (d < -1e-10 * std::max(1.0, profile.E(th)))
      throw DomainError("embed_axisymmetric: profile is not embeddable as a surface of revolution");
    return std::sqrt(std::max(0.0, d));
  };
  auto height = [&](double a, double b) {
    // Composite Gauss-Legendre on [a, b].
    const int panels = 24;
    double s = 0.0;
    const double hp = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * hp;
      for (std::size_t k = 0; k < gx.size(); ++k) s += 0.5 * hp * gw[k] * slope2(lo + 0.5 * hp * (gx[k] + 1.0));
    }
    return s;
  };

  std::vector<double> z(grid.n_theta());
  double prev_theta = 0.0, acc = 0.0;
  for (int p = 0; p < grid.n_theta(); ++p) {
    acc += height(prev_theta, grid.theta(p));
    prev_theta = grid.theta(p);
    z[p] = acc;
  }
  const double z_total = acc + height(prev_theta, kPi);
  const double z_mid = 0.5 * z_total;

  ComponentFields out;
  for (auto& v : out) v.resize(grid.size());
  for (int p = 0; p < grid.n_theta(); ++p) {
    const double R = std::sqrt(profile.G(grid.theta(p)));
    for (int q = 0; q < grid.n_phi(); ++q) {
      const int i = p * grid.n_phi() + q;
      out[0][i] = R * std::cos(grid.phi(q));
      out[1][i] = R * std::sin(grid.phi(q));
      out[2][i] = z_mid - z[p];
    }
  }
  return out;
}

double aligned_distance(const ComponentFields& a, const ComponentFields& b) {
  const int n = static_cast<int>(a[0].size());
  Eigen::Matrix3Xd A(3, n), B(3, n);
  for (int k = 0; k < 3; ++k) {
    A.row(k) = a[k].transpose();
    B.row(k) = b[k].transpose();
  }
  const Eigen::Vector3d ca = A.rowwise().mean(), cb = B.rowwise().mean();
  A.colwise() -= ca;
  B.colwise() -= cb;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(A * B.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  if ((U * svd.matrixV().transpose()).determinant() < 0) U.col(2) *= -1.0;
  const Eigen::Matrix3d R = U * svd.matrixV().transpose();
  return std::sqrt((A - R * B).colwise().squaredNorm().mean());
}

namespace {

bool is_axisymmetric(const SphereGrid& grid, const std::vector<Eigen::Matrix2d>& h, double tol) {
  double scale = 0.0;
  for (const auto& m : h) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  for (int p = 0; p < grid.n_theta(); ++p) {
    const Eigen::Matrix2d& ref = h[p * grid.n_phi()];
    for (int q = 0; q < grid.n_phi(); ++q) {
      const Eigen::Matrix2d& m = h[p * grid.n_phi() + q];
      if (std::abs(m(0, 1)) > tol * scale) return false;
      if ((m - ref).cwiseAbs().maxCoeff() > tol * scale) return false;
    }
  }
  return true;
}

ComponentFields axisymmetric_image(const GridPtr& grid, const std::vector<Eigen::Matrix2d>& h) {
  const int n = grid->size();
  Eigen::VectorXd e(n), g(n);
  for (int i = 0; i < n; ++i) {
    e[i] = h[i](0, 0);
    g[i] = h[i](1, 1);
  }
  const Eigen::VectorXd ec = grid->analyze(e), gc = grid->analyze(g);
  AxisymmetricProfile profile;
  profile.E = [grid, ec](double th) { return grid->evaluate(ec, th, 0.0).value; };
  // h22 is the metric on (d/dphi)/sin(theta), so G = h22 sin^2.
  profile.G = [grid, gc](double th) {
    const double s = std::sin(th);
    return grid->evaluate(gc, th, 0.0).value * s * s;
  };
  profile.dG = [grid, gc](double th) {
    const auto pv = grid->evaluate(gc, th, 0.0);
    const double s = std::sin(th), c = std::cos(th);
    return pv.d_theta * s * s + 2.0 * pv.value * s * c;
  };
  ComponentFields img = embed_axisymmetric(profile, grid);
  // Same translation gauge as the general solver: zero l = 0 coefficient.
  for (auto& v : img) v.array() -= grid->analyze(v)[0] / std::sqrt(4.0 * kPi);
  return img;
}

}  // namespace

IsometricEmbedding embed(const Immersion& s, const FundamentalData& fd, const EmbedOptions& options) {
  const GridPtr& grid = s.grid;
  const int n = grid->size();
  const FundamentalData hat = fundamental_forms_hat(s);
  const BestFitSphere bfs = best_fit_sphere(hat, s);

  IsometricEmbedding e;
  e.grid = grid;
  e.r0 = bfs.r0;
  e.best_fit_center = bfs.center;
  e.r_source = fd.r_min;
  const double r2 = e.r0 * e.r0;

  std::vector<Eigen::Matrix2d> hn(n);
  for (int i = 0; i < n; ++i) hn[i] = fd.h[i] / r2;
  if (fd.K.minCoeff() <= 0.0) throw DomainError("embed: Gauss curvature is not positive");
  e.uniformization = uniformize(ScalarField(grid, fd.K * r2), options.uniformize);

  ComponentFields normalized;
  if (options.axisymmetric_shortcut && is_axisymmetric(*grid, hn, options.axisymmetry_tolerance)) {
    e.axisymmetric = true;
    normalized = axisymmetric_image(grid, hn);
    if (options.cross_validate) {
      const EmbeddingSolution general =
          solve_embedding(grid, hn, initial_embedding_guess(e.uniformization), options.solve);
      e.cross_validation = aligned_distance(normalized, general.nodal);
      e.solver_iterations = general.iterations;
    }
  } else {
    const EmbeddingSolution sol = solve_embedding(grid, hn, initial_embedding_guess(e.uniformization), options.solve);
    normalized = sol.nodal;
    e.solver_iterations = sol.iterations;
  }

  Immersion image;
  image.grid = grid;
  for (int k = 0; k < 3; ++k) {
    e.image[k] = e.r0 * normalized[k];
    image.y[k] = e.image[k];
  }
  e.image_forms = fundamental_forms_hat(image);
  e.H0 = e.image_forms.H;
  e.support.resize(n);
  for (int i = 0; i < n; ++i) e.support[i] = image.position(i).dot(e.image_forms.euclidean_normal[i]);
  if (e.support.minCoeff() <= 0.0) throw SolverError("embed: image is not star-shaped about its centre", 0.0);
  e.area = e.image_forms.area;
  e.volume = e.image_forms.integrate(e.support) / 3.0;
  for (int i = 0; i < n; ++i) {
    e.metric_residual = std::max(e.metric_residual, (e.image_forms.h[i] - fd.h[i]).cwiseAbs().maxCoeff() / r2);
    e.h0_deviation = std::max(e.h0_deviation, std::abs(e.H0[i] - 2.0 / e.r0));
    e.support_deviation = std::max(e.support_deviation, std::abs(e.support[i] - e.r0));
  }
  return e;
}

MinkowskiResiduals minkowski_residuals(const IsometricEmbedding& e) {
  const FundamentalData& f = e.image_forms;
  const double intH = f.integrate(e.H0);
  const double intKX = f.integrate(f.K.cwiseProduct(e.support));
  const double intHX = f.integrate(e.H0.cwiseProduct(e.support));
  MinkowskiResiduals m;
  m.rho1 = std::abs(intH - 2.0 * intKX) / intH;
  m.rho2 = std::abs(2.0 * e.area - intHX) / (2.0 * e.area);
  m.claim_residual =
      std::abs(intH - 4.0 * kPi * e.r0 - e.area / e.r0) * std::pow(e.r_source, 2.0 * e.tau - 1.0);
  return m;
}

namespace {

// Lat-long mesh including both poles: rows 0..nt, columns 0..2nt-1.
std::vector<Eigen::Vector3d> image_mesh(const IsometricEmbedding& e, int nt) {
  const SphereGrid& grid = *e.grid;
  std::vector<double> th(nt + 1), ph(2 * nt);
  for (int i = 0; i <= nt; ++i) th[i] = kPi * i / nt;
  for (int j = 0; j < 2 * nt; ++j) ph[j] = kPi * j / nt;
  std::array<Eigen::VectorXd, 3> v;
  for (int k = 0; k < 3; ++k) v[k] = grid.synthesize_on(grid.analyze(e.image[k]), th, ph);
  std::vector<Eigen::Vector3d> pts(v[0].size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {v[0][i], v[1][i], v[2][i]};
  return pts;
}

double tetrahedral_volume(const IsometricEmbedding& e, int nt) {
  const auto pts = image_mesh(e, nt);
  const int np = 2 * nt;
  auto P = [&](int i, int j) -> const Eigen::Vector3d& { return pts[i * np + (j % np)]; };
  double v = 0.0;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const auto &a = P(i, j), &b = P(i + 1, j), &c = P(i + 1, j + 1), &d = P(i, j + 1);
      v += a.dot(b.cross(c)) + a.dot(c.cross(d));
    }
  return v / 6.0;
}

}  // namespace

VolumeCheck check_volume(const IsometricEmbedding& e, int n_theta) {
  VolumeCheck c;
  c.divergence = e.volume;
  const double coarse = tetrahedral_volume(e, n_theta);
  const double fine = tetrahedral_volume(e, 2 * n_theta);
  c.tetrahedra = (4.0 * fine - coarse) / 3.0;
  c.relative = std::abs(c.tetrahedra - c.divergence) / std::abs(c.divergence);
  return c;
}

void write_embedding_csv(std::ostream& out, const IsometricEmbedding& e) {
  out << "theta,phi,x,y,z,H0,support\n";
  char buf[256];
  for (int i = 0; i < e.grid->size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.grid->theta_of(i),
                  e.grid->phi_of(i), e.image[0][i], e.image[1][i], e.image[2][i], e.H0[i], e.support[i]);
    out << buf;
  }
}

void write_embedding_obj(std::ostream& out, const IsometricEmbedding& e, int n_theta) {
  const auto pts = image_mesh(e, n_theta);
  const int np = 2 * n_theta;
  char buf[160];
  auto vertex = [&](const Eigen::Vector3d& p) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  };
  // 1-based indices: north pole, interior rows, south pole.
  vertex(pts[0]);
  for (int i = 1; i < n_theta; ++i)
    for (int j = 0; j < np; ++j) vertex(pts[i * np + j]);
  vertex(pts[n_theta * np]);
  const int south = 2 + (n_theta - 1) * np;
  auto idx = [&](int i, int j) { return 2 + (i - 1) * np + (j % np); };
  for (int j = 0; j < np; ++j) out << "f 1 " << idx(1, j) << ' ' << idx(1, j + 1) << '\n';
  for (int i = 1; i < n_theta - 1; ++i)
    for (int j = 0; j < np; ++j) {
      out << "f " << idx(i, j) << ' ' << idx(i + 1, j) << ' ' << idx(i + 1, j + 1) << '\n';
      out << "f " << idx(i, j) << ' ' << idx(i + 1, j + 1) << ' ' << idx(i, j + 1) << '\n';
    }
  for (int j = 0; j < np; ++j)
    out << "f " << idx(n_theta - 1, j) << ' ' << south << ' ' << idx(n_theta - 1, j + 1) << '\n';
}

}  // namespace qlm
