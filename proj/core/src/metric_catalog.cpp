#include "qlm/metric_catalog.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "qlm/errors.hpp"
#include "qlm/harmonics.hpp"
#include "qlm/jet.hpp"
#include "qlm/sphere_spectral.hpp"

namespace qlm {

AFMetric AFMetric::euclidean() { return {}; }

AFMetric AFMetric::schwarzschild_isotropic(double m) {
  AFMetric g;
  g.family = MetricFamily::kSchwarzschildIsotropic;
  g.mass = m;
  g.validate();
  return g;
}

AFMetric AFMetric::schwarzschild_standard(double m) {
  AFMetric g;
  g.family = MetricFamily::kSchwarzschildStandard;
  g.mass = m;
  g.validate();
  return g;
}

AFMetric AFMetric::kerr_slice(double m, double a) {
  AFMetric g;
  g.family = MetricFamily::kKerrSlice;
  g.mass = m;
  g.spin = a;
  g.validate();
  return g;
}

AFMetric AFMetric::conformal_perturbed(double m, double eps, int l, int m_order, double tau_extra) {
  AFMetric g;
  g.family = MetricFamily::kConformalPerturbed;
  g.mass = m;
  g.epsilon = eps;
  g.degree = l;
  g.order = m_order;
  g.tau_extra = tau_extra;
  g.validate();
  return g;
}

void AFMetric::validate() const {
  if (family != MetricFamily::kEuclidean && !(mass >= 0.0))
    throw ConfigError("metric: mass must be non-negative");
  switch (family) {
    case MetricFamily::kKerrSlice:
      if (!(std::abs(spin) < mass)) throw ConfigError("kerr_slice: requires |a| < m");
      break;
    case MetricFamily::kConformalPerturbed:
      if (degree < 1) throw ConfigError("conformal_perturbed: requires l >= 1");
      if (std::abs(order) > degree) throw ConfigError("conformal_perturbed: requires |m_order| <= l");
      if (!(tau_extra > 0.5)) throw ConfigError("conformal_perturbed: requires tau_extra > 1/2");
      break;
    default:
      break;
  }
}

double AFMetric::decay_order() const {
  if (family == MetricFamily::kConformalPerturbed) return std::min(1.0, tau_extra);
  return 1.0;
}

double AFMetric::exclusion_radius() const {
  switch (family) {
    case MetricFamily::kEuclidean:
      return 0.0;
    case MetricFamily::kSchwarzschildIsotropic:
      return mass;  // horizon at m/2
    case MetricFamily::kSchwarzschildStandard:
      return 4.0 * mass;
    case MetricFamily::kKerrSlice:
      return 2.0 * (mass + std::sqrt(mass * mass - spin * spin));
    case MetricFamily::kConformalPerturbed:
      // The harmonic term must not be able to drive phi to zero either.
      return std::max(mass, 2.0 * std::pow(2.0 * std::abs(epsilon) * degree + 1e-300, 1.0 / tau_extra));
  }
  return 0.0;
}

std::string AFMetric::family_name() const {
  switch (family) {
    case MetricFamily::kEuclidean:
      return "euclidean";
    case MetricFamily::kSchwarzschildIsotropic:
      return "schwarzschild_isotropic";
    case MetricFamily::kSchwarzschildStandard:
      return "schwarzschild_standard";
    case MetricFamily::kKerrSlice:
      return "kerr_slice";
    case MetricFamily::kConformalPerturbed:
      return "conformal_perturbed";
  }
  return "unknown";
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("metric: bad numeric value for '" + key + "': '" + text + "'");
  }
}

}  // namespace

std::string AFMetric::to_string() const {
  std::string s = family_name();
  auto add = [&](const char* k, double v) { s += std::string(" ") + k + "=" + format_number(v); };
  switch (family) {
    case MetricFamily::kEuclidean:
      break;
    case MetricFamily::kSchwarzschildIsotropic:
    case MetricFamily::kSchwarzschildStandard:
      add("m", mass);
      break;
    case MetricFamily::kKerrSlice:
      add("m", mass);
      add("a", spin);
      break;
    case MetricFamily::kConformalPerturbed:
      add("m", mass);
      add("eps", epsilon);
      add("l", degree);
      add("m_order", order);
      add("tau_extra", tau_extra);
      break;
  }
  if (!rotation.isZero()) {
    s += " rot=" + format_number(rotation.x()) + "," + format_number(rotation.y()) + "," +
         format_number(rotation.z());
  }
  return s;
}

AFMetric AFMetric::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string name;
  if (!(in >> name)) throw ConfigError("metric: empty specification");
  std::map<std::string, std::string> kv;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("metric: expected key=value, got '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto take = [&](const std::string& key, double fallback, bool required) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw ConfigError("metric: missing parameter '" + key + "' for " + name);
      return fallback;
    }
    const double v = parse_number(key, it->second);
    kv.erase(it);
    return v;
  };
  auto take_int = [&](const std::string& key, double fallback, bool required) {
    const double v = take(key, fallback, required);
    if (v != std::floor(v)) throw ConfigError("metric: '" + key + "' must be an integer");
    return static_cast<int>(v);
  };

  AFMetric g;
  if (name == "euclidean") {
    g.family = MetricFamily::kEuclidean;
  } else if (name == "schwarzschild_isotropic") {
    g.family = MetricFamily::kSchwarzschildIsotropic;
    g.mass = take("m", 0, true);
  } else if (name == "schwarzschild_standard") {
    g.family = MetricFamily::kSchwarzschildStandard;
    g.mass = take("m", 0, true);
  } else if (name == "kerr_slice") {
    g.family = MetricFamily::kKerrSlice;
    g.mass = take("m", 0, true);
    g.spin = take("a", 0, true);
  } else if (name == "conformal_perturbed") {
    g.family = MetricFamily::kConformalPerturbed;
    g.mass = take("m", 0, true);
    g.epsilon = take("eps", 0, true);
    g.degree = take_int("l", 0, true);
    g.order = take_int("m_order", 0, false);
    g.tau_extra = take("tau_extra", 1.0, false);
  } else {
    throw ConfigError("metric: unknown family '" + name + "'");
  }
  if (auto it = kv.find("rot"); it != kv.end()) {
    std::istringstream parts(it->second);
    std::string c;
    int i = 0;
    while (std::getline(parts, c, ',')) {
      if (i >= 3) throw ConfigError("metric: rot takes three components");
      g.rotation[i++] = parse_number("rot", c);
    }
    if (i != 3) throw ConfigError("metric: rot takes three components");
    kv.erase(it);
  }
  if (!kv.empty()) throw ConfigError("metric: unknown parameter '" + kv.begin()->first + "' for " + name);
  g.validate();
  return g;
}

Eigen::Matrix3d AFMetric::chart_rotation() const {
  const double angle = rotation.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, rotation / angle).toRotationMatrix();
}

namespace {

// Metric components (00, 01, 02, 11, 12, 22) in the family's own chart.
template <class T>
std::array<T, 6> components(const AFMetric& g, const T& x, const T& y, const T& z) {
  using std::sqrt;
  using std::pow;
  const T r2 = x * x + y * y + z * z;
  const T r = sqrt(r2);
  const std::array<T, 3> X{x, y, z};
  std::array<T, 6> out;
  auto fill_conformal = [&](const T& phi) {
    const T p2 = phi * phi;
    const T p4 = p2 * p2;
    out = {p4, T(0.0), T(0.0), p4, T(0.0), p4};
  };
  switch (g.family) {
    case MetricFamily::kEuclidean:
      out = {T(1.0), T(0.0), T(0.0), T(1.0), T(0.0), T(1.0)};
      break;
    case MetricFamily::kSchwarzschildIsotropic:
      fill_conformal(T(1.0) + g.mass * 0.5 / r);
      break;
    case MetricFamily::kConformalPerturbed: {
      const T harmonic = real_ylm(g.degree, g.order, x, y, z);
      T phi = T(1.0) + g.mass * 0.5 / r + g.epsilon * harmonic * pow(r, -g.tau_extra);
      if (value_of(phi) <= 0.0) throw DomainError("conformal_perturbed: conformal factor not positive");
      fill_conformal(phi);
      break;
    }
    case MetricFamily::kSchwarzschildStandard: {
      const T f = 2.0 * g.mass / ((r - 2.0 * g.mass) * r2);
      int p = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j, ++p) out[p] = (i == j ? T(1.0) : T(0.0)) + f * X[i] * X[j];
      break;
    }
    case MetricFamily::kKerrSlice: {
      const double m = g.mass, a = g.spin;
      const T c2 = z * z / r2;
      const T sigma = r2 + a * a * c2;
      const T delta = r2 - 2.0 * m * r + a * a;
      const T iso = sigma / r2;
      const T radial = (sigma / delta - iso) / r2;
      const T azim = a * a * (r2 + 2.0 * m * r + a * a * c2) / (sigma * r2 * r2);
      const std::array<T, 3> W{-y, x, T(0.0)};
      int p = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j, ++p)
          out[p] = (i == j ? iso : T(0.0)) + radial * X[i] * X[j] + azim * W[i] * W[j];
      break;
    }
  }
  return out;
}

}  // namespace

MetricJet evaluate_jet(const AFMetric& metric, const SpacePoint& xp) {
  const double excl = metric.exclusion_radius();
  if (!(xp.norm() > excl))
    throw DomainError("evaluate_jet: point inside exclusion radius of " + metric.family_name());

  const Eigen::Matrix3d Q = metric.chart_rotation();
  // x = Q x' with x' the seeded variables.
  std::array<Jet, 3> xv;
  for (int i = 0; i < 3; ++i) xv[i] = Jet::variable(xp[i], i);
  std::array<Jet, 3> xs;
  for (int a = 0; a < 3; ++a) xs[a] = Q(a, 0) * xv[0] + Q(a, 1) * xv[1] + Q(a, 2) * xv[2];
  const std::array<Jet, 6> c = components(metric, xs[0], xs[1], xs[2]);

  const int pidx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  // g'_ij = Q_ai Q_bj g_ab
  std::array<std::array<Jet, 3>, 3> gp;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Jet s(0.0);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const double q = Q(a, i) * Q(b, j);
          if (q != 0.0) s += q * c[pidx[a][b]];
        }
      gp[i][j] = s;
    }

  MetricJet jet;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Jet& e = gp[i][j];
      jet.g(i, j) = e.v;
      for (int k = 0; k < 3; ++k) {
        jet.dg[k](i, j) = e.d[k];
        for (int l = 0; l < 3; ++l) jet.ddg[k][l](i, j) = e.hess(k, l);
      }
    }
  return jet;
}

Christoffel christoffel(const MetricJet& jet) {
  const Eigen::Matrix3d ginv = jet.g.inverse();
  Christoffel c;
  // first kind: [ij,l] = 1/2 (d_j g_il + d_i g_jl - d_l g_ij)
  for (int k = 0; k < 3; ++k) c.gamma[k].setZero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) {
        const double first = 0.5 * (jet.dg[j](i, l) + jet.dg[i](j, l) - jet.dg[l](i, j));
        for (int k = 0; k < 3; ++k) c.gamma[k](i, j) += ginv(k, l) * first;
      }
  return c;
}

RiemannTensor riemann(const MetricJet& jet) {
  const Eigen::Matrix3d ginv = jet.g.inverse();
  const Christoffel c = christoffel(jet);
  // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
  std::array<Eigen::Matrix3d, 3> dginv;
  for (int m = 0; m < 3; ++m) dginv[m] = -ginv * jet.dg[m] * ginv;

  // dgamma[m][k](i,j) = d_m Gamma^k_ij
  std::array<std::array<Eigen::Matrix3d, 3>, 3> dgamma;
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k) dgamma[m][k].setZero();
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          const double first = 0.5 * (jet.dg[j](i, l) + jet.dg[i](j, l) - jet.dg[l](i, j));
          const double dfirst =
              0.5 * (jet.ddg[m][j](i, l) + jet.ddg[m][i](j, l) - jet.ddg[m][l](i, j));
          for (int k = 0; k < 3; ++k)
            dgamma[m][k](i, j) += dginv[m](k, l) * first + ginv(k, l) * dfirst;
        }

  // R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj
  std::array<double, 81> up{};
  auto U = [&](int i, int j, int k, int l) -> double& { return up[((i * 3 + j) * 3 + k) * 3 + l]; };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = dgamma[k][i](l, j) - dgamma[l][i](k, j);
          for (int m = 0; m < 3; ++m) v += c.gamma[i](k, m) * c.gamma[m](l, j) - c.gamma[i](l, m) * c.gamma[m](k, j);
          U(i, j, k, l) = v;
        }
  RiemannTensor rm;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0;
          for (int m = 0; m < 3; ++m) v += jet.g(i, m) * U(m, j, k, l);
          rm(i, j, k, l) = v;
        }
  return rm;
}

double scalar_curvature(const MetricJet& jet) {
  const Eigen::Matrix3d ginv = jet.g.inverse();
  const RiemannTensor rm = riemann(jet);
  // R = g^{ik} g^{jl} R_ijkl
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += ginv(i, k) * ginv(j, l) * rm(i, j, k, l);
  return s;
}

double scalar_curvature(const AFMetric& metric, const SpacePoint& x) {
  return scalar_curvature(evaluate_jet(metric, x));
}

double sectional_curvature(const MetricJet& jet, const RiemannTensor& rm, const Eigen::Vector3d& X,
                           const Eigen::Vector3d& Y) {
  double num = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) num += rm(i, j, k, l) * X[i] * Y[j] * X[k] * Y[l];
  const double xx = X.dot(jet.g * X), yy = Y.dot(jet.g * Y), xy = X.dot(jet.g * Y);
  return num / (xx * yy - xy * xy);
}

double adm_flux_density(const MetricJet& jet, const Eigen::Vector3d& nu) {
  double s = 0.0;
  for (int j = 0; j < 3; ++j) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += jet.dg[i](i, j) - jet.dg[j](i, i);
    s += v * nu[j];
  }
  return s;
}

namespace {

double flux_at(const AFMetric& metric, double r, const SphereGrid& grid) {
  double s = 0.0;
  for (int n = 0; n < grid.size(); ++n) {
    const Eigen::Vector3d w = grid.unit_vector(n);
    s += grid.weight(n) * adm_flux_density(evaluate_jet(metric, r * w), w);
  }
  return s * r * r / (16.0 * std::numbers::pi);
}

}  // namespace

FluxResult adm_surface_integral(const AFMetric& metric, double r, int band_limit, double tolerance) {
  if (!(r > metric.exclusion_radius())) throw DomainError("adm_surface_integral: radius inside exclusion radius");
  const SphereGrid coarse(band_limit);
  const SphereGrid fine(2 * band_limit);
  FluxResult out;
  out.value = flux_at(metric, r, coarse);
  out.refinement_change = std::abs(flux_at(metric, r, fine) - out.value);
  out.underresolved = out.refinement_change > tolerance * std::max(1.0, std::abs(out.value));
  return out;
}

AdmEstimate richardson_extrapolate(std::span<const double> radii, std::span<const double> values) {
  if (radii.size() < 3 || radii.size() != values.size())
    throw std::invalid_argument("richardson_extrapolate: need >= 3 (radius, value) pairs");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("richardson_extrapolate: radii must increase");

  AdmEstimate est;
  est.radii.assign(radii.begin(), radii.end());
  est.fluxes.assign(values.begin(), values.end());

  // c0 + c1 r^-p through three points; returns false when no tail model fits.
  auto fit3 = [](double r1, double r2, double r3, double f1, double f2, double f3, double& c0, double& p) {
    const double d12 = f1 - f2, d23 = f2 - f3;
    const double scale = std::max({std::abs(f1), std::abs(f2), std::abs(f3), 1.0});
    if (std::abs(d12) <= 1e-14 * scale && std::abs(d23) <= 1e-14 * scale) {
      c0 = f3;
      p = 0.0;
      return true;
    }
    if (d12 * d23 <= 0.0) return false;
    const double target = d12 / d23;
    auto ratio = [&](double q) {
      return (std::pow(r1, -q) - std::pow(r2, -q)) / (std::pow(r2, -q) - std::pow(r3, -q));
    };
    double lo = 1e-3, hi = 20.0;
    double flo = ratio(lo) - target, fhi = ratio(hi) - target;
    if (flo * fhi > 0.0) return false;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = ratio(mid) - target;
      if ((fm < 0) == (flo < 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    p = 0.5 * (lo + hi);
    const double c1 = d23 / (std::pow(r2, -p) - std::pow(r3, -p));
    c0 = f3 - c1 * std::pow(r3, -p);
    return true;
  };

  const std::size_t n = radii.size();
  double c0 = 0.0, p = 0.0;
  if (!fit3(radii[n - 3], radii[n - 2], radii[n - 1], values[n - 3], values[n - 2], values[n - 1], c0, p)) {
    est.non_monotone = true;
    est.value = values[n - 1];
    est.error = std::abs(values[n - 1] - values[n - 2]);
    return est;
  }
  est.value = c0;
  est.fitted_order = p;
  if (n >= 4) {
    double c0_prev = 0.0, p_prev = 0.0;
    if (fit3(radii[n - 4], radii[n - 3], radii[n - 2], values[n - 4], values[n - 3], values[n - 2], c0_prev, p_prev))
      est.error = std::abs(c0 - c0_prev);
    else
      est.error = std::abs(c0 - values[n - 1]);
  } else {
    est.error = std::abs(c0 - values[n - 1]);
  }
  return est;
}

AdmEstimate adm_mass(const AFMetric& metric, std::span<const double> radii, int band_limit) {
  if (radii.size() < 3) throw std::invalid_argument("adm_mass: schedule needs at least 3 radii");
  std::vector<double> flux;
  bool underresolved = false;
  for (double r : radii) {
    const FluxResult f = adm_surface_integral(metric, r, band_limit);
    flux.push_back(f.value);
    underresolved = underresolved || f.underresolved;
  }
  AdmEstimate est = richardson_extrapolate(radii, flux);
  est.underresolved = underresolved;
  return est;
}

}  // namespace qlm
