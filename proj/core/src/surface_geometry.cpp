#include "qlm/surface_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "qlm/errors.hpp"

namespace qlm {

using D = SphereGrid::Derivative;

namespace {

struct NodalGradient {
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi_sin;
};

NodalGradient gradient(const SphereGrid& grid, const Eigen::VectorXd& nodal) {
  const Eigen::VectorXd c = grid.analyze(nodal);
  return {grid.synthesize(c, D::kTheta), grid.synthesize(c, D::kPhiOverSin)};
}

void check_outside(const AFMetric& metric, const Immersion& s) {
  const double excl = metric.exclusion_radius();
  for (int i = 0; i < s.grid->size(); ++i)
    if (!(s.position(i).norm() > excl))
      throw DomainError("immersion: node inside the exclusion radius of " + metric.family_name());
}

// Matrix G(k, i) = Gamma^k_il t^l.
Eigen::Matrix3d contract_gamma(const Christoffel& c, const Eigen::Vector3d& t) {
  Eigen::Matrix3d G;
  for (int k = 0; k < 3; ++k) G.row(k) = (c.gamma[k] * t).transpose();
  return G;
}

double graph_diameter(const SphereGrid& grid, const Immersion& s, const std::vector<Eigen::Matrix3d>& g) {
  const int nt = grid.n_theta(), np = grid.n_phi(), n = grid.size();
  auto edge = [&](int a, int b) {
    const Eigen::Vector3d d = s.position(b) - s.position(a);
    return std::sqrt(d.dot(0.5 * (g[a] + g[b]) * d));
  };
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  auto connect = [&](int a, int b) {
    if (a == b) return;
    const double w = edge(a, b);
    adj[a].push_back({b, w});
    adj[b].push_back({a, w});
  };
  for (int p = 0; p < nt; ++p) {
    for (int q = 0; q < np; ++q) {
      const int a = p * np + q;
      for (int dp = 0; dp <= 2; ++dp) {
        for (int dq = -2; dq <= 2; ++dq) {
          if (dp == 0 && dq <= 0) continue;
          if (std::gcd(dp, std::abs(dq)) != 1) continue;
          const int pp = p + dp;
          if (pp >= nt) continue;
          connect(a, pp * np + ((q + dq) % np + np) % np);
        }
      }
    }
  }
  // Paths across the poles.
  for (int row : {0, nt - 1})
    for (int q = 0; q < np; ++q)
      for (int r = q + 2; r < np; ++r) connect(row * np + q, row * np + r);

  auto sweep = [&](int source, int& farthest) {
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (auto [v, w] : adj[u]) {
        if (d + w < dist[v]) {
          dist[v] = d + w;
          pq.push({dist[v], v});
        }
      }
    }
    farthest = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    return dist[farthest];
  };
  int far1 = 0, far2 = 0;
  sweep(0, far1);
  const double d1 = sweep(far1, far2);
  return std::max(d1, sweep(far2, far1));
}

}  // namespace

std::array<Eigen::VectorXd, 3> Immersion::coefficients() const {
  return {grid->analyze(y[0]), grid->analyze(y[1]), grid->analyze(y[2])};
}

Eigen::Vector3d Immersion::evaluate(const std::array<Eigen::VectorXd, 3>& coeffs, double theta, double phi) const {
  return {grid->evaluate(coeffs[0], theta, phi).value, grid->evaluate(coeffs[1], theta, phi).value,
          grid->evaluate(coeffs[2], theta, phi).value};
}

Immersion immerse_radial(const Eigen::Vector3d& center, const ScalarField& R, const AFMetric& metric) {
  if (!R.grid) throw std::invalid_argument("immerse_radial: field has no grid");
  if (R.values.minCoeff() <= 0.0) throw DomainError("immerse_radial: radius must be positive");
  Immersion s;
  s.grid = R.grid;
  for (auto& c : s.y) c.resize(R.grid->size());
  for (int i = 0; i < R.grid->size(); ++i) {
    const Eigen::Vector3d p = center + R.values[i] * R.grid->unit_vector(i);
    for (int k = 0; k < 3; ++k) s.y[k][i] = p[k];
  }
  s.radial = RadialForm{center, R};
  check_outside(metric, s);
  return s;
}

Immersion coordinate_sphere(int band_limit, double r, const Eigen::Vector3d& center, const AFMetric& metric) {
  auto grid = SphereGrid::build(band_limit);
  return immerse_radial(center, ScalarField::constant(grid, r), metric);
}

double FundamentalData::integrate(const Eigen::VectorXd& f) const {
  return grid->weights().dot(area_element.cwiseProduct(f));
}

Eigen::Vector2d FundamentalData::principal_curvatures(int node) const {
  // Symmetric form: eigenvalues of h^{-1/2} A h^{-1/2}.
  const Eigen::LLT<Eigen::Matrix2d> llt(h[node]);
  const Eigen::Matrix2d L = llt.matrixL();
  const Eigen::Matrix2d Li = L.inverse();
  const Eigen::Matrix2d S = Li * A[node] * Li.transpose();
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(S).eigenvalues();
}

Eigen::Matrix3d FundamentalData::lift(int node, const Eigen::Matrix2d& M) const {
  const Eigen::Matrix2d hi = h[node].inverse();
  return frame[node] * (hi * M * hi) * frame[node].transpose();
}

FundamentalData fundamental_forms(const Immersion& s, const AFMetric& ambient) {
  const SphereGrid& grid = *s.grid;
  const int n = grid.size();
  const bool flat = ambient.family == MetricFamily::kEuclidean;
  if (!flat) check_outside(ambient, s);

  FundamentalData fd;
  fd.grid = s.grid;
  fd.euclidean = flat;
  fd.frame.resize(n);
  fd.h.resize(n);
  fd.A.resize(n);
  fd.A_ring.resize(n);
  fd.normal.resize(n);
  fd.euclidean_normal.resize(n);
  fd.area_element.resize(n);
  fd.H.resize(n);
  fd.K.resize(n);
  fd.norm_A.resize(n);
  fd.norm_A_ring.resize(n);
  fd.norm_grad_A_ring.resize(n);
  fd.trace_A_ring.resize(n);

  std::array<NodalGradient, 3> dy;
  for (int k = 0; k < 3; ++k) dy[k] = gradient(grid, s.y[k]);

  std::vector<Eigen::Matrix3d> g(n, Eigen::Matrix3d::Identity());
  std::vector<Christoffel> gamma(flat ? 0 : n);
  std::vector<double> ambient_sectional(n, 0.0);
  std::array<Eigen::VectorXd, 3> nu;
  for (auto& c : nu) c.resize(n);

  for (int i = 0; i < n; ++i) {
    Eigen::Matrix<double, 3, 2> t;
    for (int k = 0; k < 3; ++k) {
      t(k, 0) = dy[k].d_theta[i];
      t(k, 1) = dy[k].d_phi_sin[i];
    }
    fd.frame[i] = t;
    if (!flat) {
      const MetricJet jet = evaluate_jet(ambient, s.position(i));
      g[i] = jet.g;
      gamma[i] = christoffel(jet);
      ambient_sectional[i] = sectional_curvature(jet, riemann(jet), t.col(0), t.col(1));
    }
    fd.h[i] = t.transpose() * g[i] * t;
    const double det = fd.h[i].determinant();
    if (!(det > 0.0) || !std::isfinite(det)) throw DomainError("fundamental_forms: degenerate induced metric");
    fd.area_element[i] = std::sqrt(det);
    const Eigen::Vector3d N = t.col(0).cross(t.col(1));
    fd.euclidean_normal[i] = N.normalized();
    const Eigen::Vector3d up = g[i].ldlt().solve(N);
    fd.normal[i] = up / std::sqrt(N.dot(up));
    for (int k = 0; k < 3; ++k) nu[k][i] = fd.normal[i][k];
  }

  std::array<NodalGradient, 3> dnu;
  for (int k = 0; k < 3; ++k) dnu[k] = gradient(grid, nu[k]);

  // Ambient lift of the trace-free part, differentiated below for grad A_ring.
  std::array<Eigen::VectorXd, 6> T;
  for (auto& c : T) c.resize(n);
  const int pidx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

  for (int i = 0; i < n; ++i) {
    const auto& t = fd.frame[i];
    Eigen::Matrix<double, 3, 2> dn;
    for (int k = 0; k < 3; ++k) {
      dn(k, 0) = dnu[k].d_theta[i];
      dn(k, 1) = dnu[k].d_phi_sin[i];
    }
    if (!flat) {
      for (int a = 0; a < 2; ++a) dn.col(a) += contract_gamma(gamma[i], t.col(a)) * fd.normal[i];
    }
    Eigen::Matrix2d A = dn.transpose() * g[i] * t;
    A = 0.5 * (A + A.transpose());
    const Eigen::Matrix2d hi = fd.h[i].inverse();
    const double H = (hi * A).trace();
    const Eigen::Matrix2d Ar = A - 0.5 * H * fd.h[i];
    fd.A[i] = A;
    fd.A_ring[i] = Ar;
    fd.H[i] = H;
    fd.trace_A_ring[i] = (hi * Ar).trace();
    fd.norm_A[i] = std::sqrt(std::max(0.0, (hi * A * hi * A).trace()));
    fd.norm_A_ring[i] = std::sqrt(std::max(0.0, (hi * Ar * hi * Ar).trace()));
    fd.K[i] = A.determinant() / fd.h[i].determinant() + ambient_sectional[i];

    const Eigen::Matrix<double, 3, 2> gt = g[i] * t;
    const Eigen::Matrix3d Ti = gt * (hi * Ar * hi) * gt.transpose();
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) T[pidx[a][b]][i] = Ti(a, b);
  }

  std::array<NodalGradient, 6> dT;
  for (int c = 0; c < 6; ++c) dT[c] = gradient(grid, T[c]);
  for (int i = 0; i < n; ++i) {
    const auto& t = fd.frame[i];
    const Eigen::Matrix2d hi = fd.h[i].inverse();
    Eigen::Matrix3d Ti;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) Ti(a, b) = T[pidx[a][b]][i];
    std::array<Eigen::Matrix2d, 2> Dn;
    for (int a = 0; a < 2; ++a) {
      Eigen::Matrix3d dTi;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          dTi(p, q) = a == 0 ? dT[pidx[p][q]].d_theta[i] : dT[pidx[p][q]].d_phi_sin[i];
      if (!flat) {
        const Eigen::Matrix3d G = contract_gamma(gamma[i], t.col(a));
        dTi -= G.transpose() * Ti + Ti * G;
      }
      Dn[a] = t.transpose() * dTi * t;
    }
    double sq = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sq += hi(a, b) * (hi * Dn[a] * hi * Dn[b].transpose()).trace();
    fd.norm_grad_A_ring[i] = std::sqrt(std::max(0.0, sq));
  }

  fd.area = grid.weights().dot(fd.area_element);
  fd.r_min = std::numeric_limits<double>::infinity();
  fd.r_max = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = s.position(i).norm();
    fd.r_min = std::min(fd.r_min, r);
    fd.r_max = std::max(fd.r_max, r);
  }
  fd.diameter = graph_diameter(grid, s, g);
  return fd;
}

namespace {

double loglog_slope(const std::vector<double>& r, const std::vector<double>& v) {
  const std::size_t n = r.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(r[i]);
    my += std::log(v[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(r[i]) - mx) * (std::log(v[i]) - my);
    sxx += (std::log(r[i]) - mx) * (std::log(r[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

NearlyRoundReport nearly_round_diagnostics(std::span<const FundamentalData> family, double tau) {
  if (family.size() < 3) throw std::invalid_argument("nearly_round_diagnostics: need at least 3 surfaces");
  NearlyRoundReport rep;
  rep.area_ratio_min = std::numeric_limits<double>::infinity();
  double prev_r = 0.0;
  for (const FundamentalData& fd : family) {
    if (!(fd.r_min > prev_r)) throw std::invalid_argument("nearly_round_diagnostics: r_min must increase");
    prev_r = fd.r_min;
    NearlyRoundReport::Member m;
    m.r = fd.r_min;
    double sup = 0.0, supA = 0.0;
    for (int i = 0; i < fd.grid->size(); ++i) {
      sup = std::max(sup, fd.norm_A_ring[i] + m.r * fd.norm_grad_A_ring[i]);
      supA = std::max(supA, fd.norm_A[i]);
    }
    m.c_trace_free = std::pow(m.r, 1.0 + tau) * sup;
    m.radial_ratio = fd.r_max / fd.r_min;
    m.diameter_ratio = fd.diameter / m.r;
    m.area_ratio = fd.area / (m.r * m.r);
    m.c_second_form = m.r * supA;
    rep.c_trace_free = std::max(rep.c_trace_free, m.c_trace_free);
    rep.radial_ratio = std::max(rep.radial_ratio, m.radial_ratio);
    rep.diameter_ratio = std::max(rep.diameter_ratio, m.diameter_ratio);
    rep.area_ratio_max = std::max(rep.area_ratio_max, m.area_ratio);
    rep.area_ratio_min = std::min(rep.area_ratio_min, m.area_ratio);
    rep.c_second_form = std::max(rep.c_second_form, m.c_second_form);
    rep.members.push_back(m);
  }

  // A constant that keeps growing with r signals an unbounded family. Values
  // at roundoff level (exactly round spheres) carry no trend.
  auto trend = [&](auto pick, double floor) {
    std::vector<double> r, v;
    for (const auto& m : rep.members) {
      r.push_back(m.r);
      v.push_back(pick(m));
    }
    if (*std::min_element(v.begin(), v.end()) <= floor) return 0.0;
    return loglog_slope(r, v);
  };
  constexpr double kGrowth = 0.5;
  rep.trace_free_slope = trend([](const auto& m) { return m.c_trace_free; }, 1e-8);
  if (rep.trace_free_slope > kGrowth) rep.flags.push_back("trace_free_decay");
  if (trend([](const auto& m) { return m.radial_ratio; }, 0.0) > kGrowth) rep.flags.push_back("radial_ratio");
  if (trend([](const auto& m) { return m.diameter_ratio; }, 0.0) > kGrowth) rep.flags.push_back("diameter");
  if (trend([](const auto& m) { return m.area_ratio; }, 0.0) > kGrowth) rep.flags.push_back("area");
  if (trend([](const auto& m) { return m.c_second_form; }, 1e-8) > kGrowth) rep.flags.push_back("second_form");
  rep.bounded = rep.flags.empty();
  return rep;
}

BestFitSphere best_fit_sphere(const FundamentalData& hat, const Immersion& s) {
  if (!hat.euclidean) throw std::invalid_argument("best_fit_sphere: needs Euclidean fundamental data");
  const int n = hat.grid->size();
  if (hat.H.minCoeff() <= 0.0) throw DomainError("best_fit_sphere: mean curvature not positive");
  BestFitSphere out;
  out.r0 = 2.0 * hat.area / hat.integrate(hat.H);
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i)
    a += hat.grid->weight(i) * hat.area_element[i] * (s.position(i) - out.r0 * hat.euclidean_normal[i]);
  out.center = a / hat.area;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d k = hat.principal_curvatures(i);
    out.curvature_deviation =
        std::max({out.curvature_deviation, std::abs(k[0] - 1.0 / out.r0), std::abs(k[1] - 1.0 / out.r0)});
    out.position_deviation = std::max(
        out.position_deviation, (s.position(i) - out.center - out.r0 * hat.euclidean_normal[i]).norm());
  }
  return out;
}

namespace {

// Euclidean-orthonormal basis of the tangent plane, as coefficients in the parameter frame.
Eigen::Matrix2d euclidean_orthonormal(const Eigen::Matrix<double, 3, 2>& t) {
  const Eigen::Matrix2d e = t.transpose() * t;
  const Eigen::Matrix2d L = e.llt().matrixL();
  return L.transpose().inverse();
}

}  // namespace

double second_form_relation_residual(const Immersion& s, const AFMetric& metric) {
  const FundamentalData hat = fundamental_forms_hat(s);
  const FundamentalData fd = fundamental_forms(s, metric);
  const bool flat = metric.family == MetricFamily::kEuclidean;
  double worst = 0.0;
  for (int i = 0; i < s.grid->size(); ++i) {
    const Eigen::Matrix2d C = euclidean_orthonormal(hat.frame[i]);
    const Eigen::Vector3d n = hat.euclidean_normal[i];
    Eigen::Matrix2d rhs;
    if (flat) {
      rhs = fd.A[i];
    } else {
      const MetricJet jet = evaluate_jet(metric, s.position(i));
      const Christoffel c = christoffel(jet);
      const double grad_rho = std::sqrt(n.dot(jet.g.ldlt().solve(n)));
      const auto& t = hat.frame[i];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double gam = 0.0;
          for (int k = 0; k < 3; ++k) gam += n[k] * t.col(a).dot(c.gamma[k] * t.col(b));
          rhs(a, b) = grad_rho * fd.A[i](a, b) + gam;
        }
    }
    const Eigen::Matrix2d diff = C.transpose() * (hat.A[i] - rhs) * C;
    worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  return worst;
}

Eigen::Matrix3d distance_hessian(const FundamentalData& hat, int node) { return hat.lift(node, hat.A[node]); }

namespace {

// Signed distance from x to the band-limited surface, positive outside; the
// nearest point is found by Gauss-Newton in parameter space from (theta0, phi0).
double signed_distance(const Immersion& s, const std::array<Eigen::VectorXd, 3>& coeffs, const Eigen::Vector3d& x,
                       double theta0, double phi0) {
  const SphereGrid& grid = *s.grid;
  double th = theta0, ph = phi0;
  Eigen::Vector3d Y, Yt, Yp;
  for (int it = 0; it < 60; ++it) {
    for (int k = 0; k < 3; ++k) {
      const auto pv = grid.evaluate(coeffs[k], th, ph);
      Y[k] = pv.value;
      Yt[k] = pv.d_theta;
      Yp[k] = pv.d_phi;
    }
    Eigen::Matrix<double, 3, 2> J;
    J << Yt, Yp;
    const Eigen::Vector2d step = -(J.transpose() * J).ldlt().solve(J.transpose() * (Y - x));
    th += step[0];
    ph += step[1];
    if (step.norm() < 1e-15) break;
  }
  for (int k = 0; k < 3; ++k) {
    const auto pv = grid.evaluate(coeffs[k], th, ph);
    Y[k] = pv.value;
    Yt[k] = pv.d_theta;
    Yp[k] = pv.d_phi;
  }
  const Eigen::Vector3d d = x - Y;
  return d.dot(Yt.cross(Yp)) >= 0.0 ? d.norm() : -d.norm();
}

}  // namespace

DistanceHessianReport distance_hessian_residual(const Immersion& s, double fd_step_fraction) {
  const FundamentalData hat = fundamental_forms_hat(s);
  const int n = s.grid->size();
  DistanceHessianReport rep;
  for (int i = 0; i < n; ++i) {
    const Eigen::Matrix3d lhs = distance_hessian(hat, i);
    const Eigen::Vector3d nn = hat.euclidean_normal[i];
    const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - nn * nn.transpose();
    const Eigen::Matrix3d rhs = hat.lift(i, hat.A_ring[i]) + 0.5 * hat.H[i] * P;
    rep.algebraic = std::max(rep.algebraic, (lhs - rhs).cwiseAbs().maxCoeff());
  }

  const auto coeffs = s.coefficients();
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, s.position(i).norm());
  const double h = fd_step_fraction * hat.r_max;
  for (int k = 0; k < 8; ++k) {
    const int node = static_cast<int>((static_cast<long>(k) * n) / 8 + n / 16) % n;
    const Eigen::Vector3d p = s.position(node);
    const double th = s.grid->theta_of(node), ph = s.grid->phi_of(node);
    auto rho = [&](const Eigen::Vector3d& x) { return signed_distance(s, coeffs, x, th, ph); };
    Eigen::Matrix3d fd;
    for (int a = 0; a < 3; ++a) {
      const Eigen::Vector3d ea = h * Eigen::Vector3d::Unit(a);
      fd(a, a) = (rho(p + 2 * ea) - 2 * rho(p) + rho(p - 2 * ea)) / (4 * h * h);
      for (int b = a + 1; b < 3; ++b) {
        const Eigen::Vector3d eb = h * Eigen::Vector3d::Unit(b);
        fd(a, b) = fd(b, a) =
            (rho(p + ea + eb) - rho(p + ea - eb) - rho(p - ea + eb) + rho(p - ea - eb)) / (4 * h * h);
      }
    }
    rep.spot_check = std::max(rep.spot_check, (fd - distance_hessian(hat, node)).cwiseAbs().maxCoeff());
    ++rep.spot_nodes;
  }
  return rep;
}

double mean_curvature_expansion_residual(const Immersion& s, const AFMetric& metric) {
  const FundamentalData hat = fundamental_forms_hat(s);
  const FundamentalData fd = fundamental_forms(s, metric);
  const double tau = metric.decay_order();
  double worst = 0.0;
  for (int i = 0; i < s.grid->size(); ++i) {
    const MetricJet jet = evaluate_jet(metric, s.position(i));
    const Eigen::Vector3d n = hat.euclidean_normal[i];
    const Eigen::Matrix3d sigma = jet.g - Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d D2 = distance_hessian(hat, i);
    double third = 0.0, div_row = 0.0, trace_grad = 0.0;
    for (int k = 0; k < 3; ++k) {
      third += n[k] * n.dot(jet.dg[k] * n);
      div_row += jet.dg[k].row(k).dot(n);  // g_ij,i n_j
      trace_grad += n[k] * jet.dg[k].trace();
    }
    const double rhs = hat.H[i] + 0.5 * fd.H[i] * n.dot(sigma * n) + 0.5 * third -
                       (sigma.array() * D2.array()).sum() - div_row + 0.5 * trace_grad;
    worst = std::max(worst, std::abs(fd.H[i] - rhs));
  }
  return worst * std::pow(fd.r_min, 1.0 + 2.0 * tau);
}

IntegralIdentityReport integral_identity_residual(const Immersion& s, const AFMetric& metric) {
  const FundamentalData hat = fundamental_forms_hat(s);
  const FundamentalData fd = fundamental_forms(s, metric);
  const double tau = metric.decay_order();
  const int n = s.grid->size();
  Eigen::VectorXd flux(n), hess(n), ibp_l(n), ibp_r(n);
  for (int i = 0; i < n; ++i) {
    const MetricJet jet = evaluate_jet(metric, s.position(i));
    const Eigen::Vector3d nn = hat.euclidean_normal[i];
    const Eigen::Matrix3d sigma = jet.g - Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d D2 = distance_hessian(hat, i);
    double f = 0.0, third = 0.0, div = 0.0;
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += jet.dg[j](k, k) - jet.dg[k](k, j);  // g_ii,j - g_ij,i
      f += v * nn[j];
      third += nn[j] * nn.dot(jet.dg[j] * nn);
      div += jet.dg[j].row(j).dot(nn);  // sigma_st,t n_s
    }
    const double sD2 = (sigma.array() * D2.array()).sum();
    flux[i] = f;
    hess[i] = sD2;
    ibp_l[i] = third;
    ibp_r[i] = -hat.H[i] * nn.dot(sigma * nn) + div + sD2;
  }
  IntegralIdentityReport rep;
  rep.lhs = fd.integrate(fd.H) - fd.integrate(hat.H);
  rep.rhs = 0.5 * hat.integrate(flux) - 0.5 * hat.integrate(hess);
  rep.scaled_residual = std::abs(rep.lhs - rep.rhs) * std::pow(fd.r_min, 2.0 * tau - 1.0);
  rep.ibp_lhs = hat.integrate(ibp_l);
  rep.ibp_rhs = hat.integrate(ibp_r);
  rep.ibp_residual = std::abs(rep.ibp_lhs - rep.ibp_rhs);
  return rep;
}

void write_immersion_csv(std::ostream& out, const Immersion& s) {
  out << "theta,phi,y1,y2,y3\n";
  char buf[160];
  for (int i = 0; i < s.grid->size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.grid->theta_of(i), s.grid->phi_of(i),
                  s.y[0][i], s.y[1][i], s.y[2][i]);
    out << buf;
  }
}

}  // namespace qlm
