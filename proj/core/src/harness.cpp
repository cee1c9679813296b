#include "qlm/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <future>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "qlm/errors.hpp"
#include "qlm/weyl_embedding.hpp"

#ifndef QLM_VERSION
#define QLM_VERSION "0.0.0"
#endif

namespace qlm {

using ojson = nlohmann::ordered_json;

const char* library_version() { return QLM_VERSION; }

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_number(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(std::string(key) + ": not a number: '" + t + "'");
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  const double v = to_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(std::string(key) + ": expected an integer");
  return static_cast<int>(v);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shortest text that reads back to the same double.
std::string shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Eigen::Vector3d to_vector(std::string_view key, std::string_view text) {
  Eigen::Vector3d c;
  std::string t(text);
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::string part;
  int k = 0;
  while (in >> part) {
    if (k == 3) throw ConfigError(std::string(key) + ": expected three components");
    c[k++] = to_number(key, part);
  }
  if (k != 3) throw ConfigError(std::string(key) + ": expected three components");
  return c;
}

std::vector<double> to_list(std::string_view key, std::string_view text) {
  std::string t(text);
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<double> out;
  for (std::string part; in >> part;) out.push_back(to_number(key, part));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Families

FamilySpec FamilySpec::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string name;
  if (!(in >> name)) throw ConfigError("family: empty specification");
  FamilySpec f;
  if (name == "coordinate-spheres") f.kind = FamilyKind::kCoordinateSpheres;
  else if (name == "radial-perturbed") f.kind = FamilyKind::kRadialPerturbed;
  else if (name == "axisym-kerr") f.kind = FamilyKind::kAxisymKerr;
  else throw ConfigError("family: unknown family '" + name + "'");

  bool amplitude = false;
  for (std::string tok; in >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("family: expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
    if (key == "center" && f.kind != FamilyKind::kAxisymKerr) {
      f.center = to_vector("family center", value);
    } else if (f.kind == FamilyKind::kRadialPerturbed && key == "amplitude") {
      f.amplitude = to_number("family amplitude", value);
      amplitude = true;
    } else if (f.kind == FamilyKind::kRadialPerturbed && key == "l") {
      f.degree = to_int("family l", value);
    } else if (f.kind == FamilyKind::kRadialPerturbed && key == "m") {
      f.order = to_int("family m", value);
    } else if (f.kind == FamilyKind::kRadialPerturbed && key == "decay") {
      f.decay = to_number("family decay", value);
    } else {
      throw ConfigError("family: unknown parameter '" + key + "' for " + name);
    }
  }
  if (f.kind == FamilyKind::kRadialPerturbed) {
    if (!amplitude) throw ConfigError("family: radial-perturbed needs amplitude=");
    if (f.degree < 0 || std::abs(f.order) > f.degree) throw ConfigError("family: need 0 <= |m| <= l");
  }
  return f;
}

std::string FamilySpec::to_string() const {
  const std::string c = "center=" + shortest(center.x()) + "," + shortest(center.y()) + "," + shortest(center.z());
  switch (kind) {
    case FamilyKind::kCoordinateSpheres: return "coordinate-spheres " + c;
    case FamilyKind::kRadialPerturbed:
      return "radial-perturbed amplitude=" + shortest(amplitude) + " l=" + std::to_string(degree) +
             " m=" + std::to_string(order) + " decay=" + shortest(decay) + " " + c;
    case FamilyKind::kAxisymKerr: return "axisym-kerr";
  }
  return {};
}

Immersion make_surface(const FamilySpec& family, double r, int band_limit, const AFMetric& metric) {
  switch (family.kind) {
    case FamilyKind::kAxisymKerr: return coordinate_sphere(band_limit, r, Eigen::Vector3d::Zero(), metric);
    case FamilyKind::kCoordinateSpheres: return coordinate_sphere(band_limit, r, family.center, metric);
    case FamilyKind::kRadialPerturbed: {
      auto grid = SphereGrid::build(band_limit);
      const double a = family.amplitude * std::pow(r, -family.decay);
      const ScalarField R = ScalarField::from_function(grid, [&](const Eigen::Vector3d& w) {
        return r * (1.0 + a * real_ylm(family.degree, family.order, w.x(), w.y(), w.z()));
      });
      return immerse_radial(family.center, R, metric);
    }
  }
  throw ConfigError("unknown family");
}

// ---------------------------------------------------------------------------
// Configuration

std::map<std::string, double> StudyConfig::default_tolerances() {
  return {
      {"bounded_slope", 0.5},           // largest log-log growth of a family constant
      {"cross_validation", 1e-7},       // shortcut vs general embedding, relative to r0
      {"distance_hessian", 1e-10},
      {"distance_hessian_spot", 1e-5},  // finite-difference spot check
      {"embedding", 1e-8},              // metric-match residual
      {"gauss_bonnet", 1e-8},
      {"ibp", 1e-10},                   // relative integration-by-parts residual
      {"kerr_spread", 0.2},             // tau^3 |A_ring| stability across the sweep
      {"mass_order", 1e-10},            // m_H - m_BY
      {"minkowski", 1e-6},
      {"rate_residual", 0.05},
      {"refinement_floor", 1e-12},
      {"resolution", 1e-2},             // relative change allowed under band-limit doubling
      {"resolution_constant", 2.5e-2},  // same for node-sampled sup-norm constants
      {"second_form_relation", 1e-6},   // r times the second-form residual
      {"volume", 1e-6},
  };
}

void StudyConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in), value = trim(value_in);
  if (key == "metric") {
    metric = AFMetric::parse(value);
  } else if (key == "family") {
    family = FamilySpec::parse(value);
  } else if (key == "radii") {
    radii = to_list(key, value);
  } else if (key == "band_limit") {
    band_limit = to_int(key, value);
  } else if (key == "format") {
    if (value != "csv" && value != "json") throw ConfigError("format: expected csv or json");
    format = value;
  } else if (key == "out") {
    if (value.empty()) throw ConfigError("out: empty path");
    out = value;
  } else if (key == "seed") {
    const double v = to_number(key, value);
    if (v < 0 || v != std::floor(v) || v > 9.007199254740992e15)
      throw ConfigError("seed: expected a non-negative integer");
    seed = static_cast<std::uint64_t>(v);
  } else if (key == "inject_failure") {
    inject_failure = to_number(key, value);
    if (inject_failure < 0.0 || inject_failure > 1.0) throw ConfigError("inject_failure: expected a probability");
  } else if (key.rfind("tolerance.", 0) == 0) {
    const std::string name = key.substr(10);
    auto it = tolerances.find(name);
    if (it == tolerances.end()) throw ConfigError("unknown tolerance '" + name + "'");
    it->second = to_number(key, value);
    if (!(it->second >= 0.0)) throw ConfigError(key + ": must be non-negative");
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

void StudyConfig::validate() const {
  metric.validate();
  if (radii.size() < 3) throw ConfigError("radii: need at least 3 entries");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ConfigError("radii: schedule must be strictly increasing");
  if (!(radii.front() > 0.0)) throw ConfigError("radii: must be positive");
  if (band_limit < 8) throw ConfigError("band_limit: must be at least 8");
  if (band_limit > 128) throw ConfigError("band_limit: at most 128 supported");
  if (family.kind == FamilyKind::kAxisymKerr && metric.family != MetricFamily::kKerrSlice)
    throw ConfigError("family: axisym-kerr needs a kerr_slice metric");
  if (radii.front() <= metric.exclusion_radius() + std::abs(family.amplitude) * radii.front() + family.center.norm())
    throw ConfigError("radii: first surface reaches the exclusion radius of the metric");
}

std::vector<std::pair<std::string, std::string>> StudyConfig::echo() const {
  std::string r;
  for (std::size_t i = 0; i < radii.size(); ++i) r += (i ? "," : "") + shortest(radii[i]);
  std::vector<std::pair<std::string, std::string>> kv = {
      {"metric", metric.to_string()},
      {"family", family.to_string()},
      {"radii", r},
      {"band_limit", std::to_string(band_limit)},
      {"seed", std::to_string(seed)},
      {"inject_failure", shortest(inject_failure)},
  };
  return kv;
}

StudyConfig StudyConfig::parse(std::istream& in) {
  StudyConfig c;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    try {
      c.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return c;
}

StudyConfig StudyConfig::parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

// ---------------------------------------------------------------------------
// Rates

RateFit fit_rate(std::span<const double> r, std::span<const double> m, double m_inf, double residual_threshold) {
  RateFit fit;
  fit.m_inf = m_inf;
  fit.points = static_cast<int>(r.size());
  fit.slope = fit.intercept = fit.residual = kNaN;
  if (r.size() != m.size()) throw std::invalid_argument("fit_rate: size mismatch");
  // Masses are assembled from quantities of size r, so roundoff grows like r eps.
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(m_inf));
  bool degenerate = r.size() < 3;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (!(r[i] > 0.0) || !std::isfinite(m[i]) || !(std::abs(m[i] - m_inf) > noise * std::max(1.0, r[i])))
      degenerate = true;
  if (degenerate) {
    fit.flagged = true;
    return fit;
  }
  const int n = fit.points;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::log(r[i]);
    y[i] = std::log(std::abs(m[i] - m_inf));
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  fit.intercept = beta[0];
  fit.slope = beta[1];
  fit.residual = std::sqrt((X * beta - y).squaredNorm() / n);
  fit.fittable = true;
  fit.flagged = fit.residual > residual_threshold;
  return fit;
}

// ---------------------------------------------------------------------------
// Mass runs

namespace {

std::vector<bool> injection_mask(const StudyConfig& c) {
  std::mt19937_64 rng(c.seed);
  std::vector<bool> mask(c.radii.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    // 53-bit uniform draw; avoids library-dependent distribution algorithms.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    mask[i] = u < c.inject_failure;
  }
  return mask;
}

}  // namespace

bool MassReport::has_solver_failure() const {
  for (const auto& row : rows)
    if (row.status == EmbeddingStatus::kSolverFailure) return true;
  return false;
}

MassReport run_masses(const StudyConfig& config) {
  config.validate();
  MassReport report;
  report.config = config;
  report.injected = injection_mask(config);
  std::vector<std::future<MassValues>> jobs;
  for (double r : config.radii)
    jobs.push_back(std::async(std::launch::async, [&config, r] {
      return assemble_mass_row(make_surface(config.family, r, config.band_limit, config.metric), r, config.metric);
    }));
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    MassValues row = jobs[i].get();
    if (report.injected[i]) {
      row.brown_york.reset();
      row.status = EmbeddingStatus::kSolverFailure;
      row.failure = "injected failure";
    }
    report.rows.push_back(std::move(row));
  }

  const double tol = config.tolerance("rate_residual");
  std::vector<double> r, mh, rb, mb;
  for (const auto& row : report.rows) {
    r.push_back(row.r_label);
    mh.push_back(row.hawking);
    if (row.brown_york) {
      rb.push_back(row.r_label);
      mb.push_back(*row.brown_york);
    }
  }
  const double m_inf = config.metric.adm_mass_exact();
  report.hawking_rate = fit_rate(r, mh, m_inf, tol);
  report.brown_york_rate = fit_rate(rb, mb, m_inf, tol);
  return report;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

struct SurfaceMeasures {
  double r = 0.0;
  FundamentalData fd;
  double gauss_bonnet = 0.0;
  double second_form = 0.0;
  double hessian = 0.0;
  double hessian_spot = 0.0;
  double mce = 0.0;
  double integral = 0.0;
  double ibp = 0.0;
  double tau3_ring = 0.0;
  double tau2_h = 0.0;
  bool embedded = false;
  bool axisymmetric = false;
  double metric_residual = 0.0;
  double rho1 = 0.0, rho2 = 0.0, claim = 0.0;
  double volume = 0.0;
  double h0_scaled = 0.0;
  double support_scaled = 0.0;
  double uniformization = 0.0;
  double cross_validation = -1.0;
  double hawking = 0.0;
  std::optional<double> brown_york;
};

SurfaceMeasures measure(const StudyConfig& c, double r, int L, bool cross_validate, bool inject) {
  const AFMetric& g = c.metric;
  const double tau = g.decay_order();
  const Immersion s = make_surface(c.family, r, L, g);
  SurfaceMeasures m;
  m.fd = fundamental_forms(s, g);
  const FundamentalData& fd = m.fd;
  m.r = fd.r_min;
  m.gauss_bonnet = std::abs(fd.integrate(fd.K) - 4.0 * kPi);
  m.second_form = second_form_relation_residual(s, g) * fd.r_min;
  const DistanceHessianReport dh = distance_hessian_residual(s);
  m.hessian = dh.algebraic;
  m.hessian_spot = dh.spot_check;
  m.mce = mean_curvature_expansion_residual(s, g);
  const IntegralIdentityReport ii = integral_identity_residual(s, g);
  m.integral = ii.scaled_residual;
  m.ibp = ii.ibp_residual / std::max(1.0, std::abs(ii.ibp_lhs));
  m.tau3_ring = std::pow(r, 3) * fd.norm_A_ring.maxCoeff();
  m.tau2_h = r * r * (fd.H.array() - 2.0 / r).abs().maxCoeff();
  m.hawking = hawking_mass(fd);
  if (inject || fd.K.minCoeff() <= 0.0) return m;

  EmbedOptions opts;
  opts.cross_validate = cross_validate;
  try {
    IsometricEmbedding e = embed(s, fd, opts);
    e.tau = tau;
    m.embedded = true;
    m.axisymmetric = e.axisymmetric;
    m.metric_residual = e.metric_residual;
    const MinkowskiResiduals mk = minkowski_residuals(e);
    m.rho1 = mk.rho1;
    m.rho2 = mk.rho2;
    m.claim = mk.claim_residual;
    m.volume = check_volume(e).relative;
    m.h0_scaled = e.h0_deviation * std::pow(e.r0, 1.0 + tau);
    m.support_scaled = e.support_deviation * std::pow(e.r0, tau - 1.0);
    const auto& d = e.uniformization.diagnostics;
    const double u = std::hypot(d.u0_norm, d.u1_norm, d.u2_norm);
    m.uniformization = d.k_deviation > 0.0 ? u / d.k_deviation : 0.0;
    if (e.cross_validation >= 0.0) m.cross_validation = e.cross_validation / e.r0;
    m.brown_york = brown_york_mass(fd, e);
  } catch (const DomainError&) {
  } catch (const SolverError&) {
  }
  return m;
}

struct Sweep {
  std::vector<SurfaceMeasures> members;
};

double loglog_growth(const std::vector<double>& r, const std::vector<double>& v, double floor) {
  // Constants at roundoff level carry no trend.
  if (v.empty() || *std::min_element(v.begin(), v.end()) <= floor) return 0.0;
  const RateFit f = fit_rate(r, v, 0.0, std::numeric_limits<double>::infinity());
  return f.fittable ? f.slope : 0.0;
}

template <class F>
double sup_of(const Sweep& s, F pick) {
  double v = 0.0;
  for (const auto& m : s.members) v = std::max(v, pick(m));
  return v;
}

}  // namespace

bool VerifyReport::all_passed() const {
  for (const auto& c : checks)
    if (std::string_view(c.verdict()) != "pass") return false;
  return true;
}

VerifyReport run_verify(const StudyConfig& config) {
  config.validate();
  VerifyReport report;
  report.config = config;
  const std::vector<bool> injected = injection_mask(config);
  const int L = config.band_limit;

  std::vector<std::future<SurfaceMeasures>> coarse, fine;
  for (std::size_t i = 0; i < config.radii.size(); ++i) {
    const double r = config.radii[i];
    const bool cv = i == 0;
    const bool inj = injected[i];
    coarse.push_back(
        std::async(std::launch::async, [&config, r, L, cv, inj] { return measure(config, r, L, cv, inj); }));
    fine.push_back(
        std::async(std::launch::async, [&config, r, L, cv, inj] { return measure(config, r, 2 * L, cv, inj); }));
  }
  Sweep sc, sf;
  for (auto& f : coarse) sc.members.push_back(f.get());
  for (auto& f : fine) sf.members.push_back(f.get());

  const double res_tol = config.tolerance("resolution");
  const double res_const = config.tolerance("resolution_constant");
  // A value is resolved when the doubling moves it by less than a tenth of
  // its tolerance (or 1% of itself when larger). Family constants at roundoff
  // level (below 100 x floor) are not compared.
  auto add = [&](const std::string& name, double measured, double refined, double tol,
                 std::optional<double> constant = {}, std::optional<double> constant_refined = {},
                 double constant_floor = 0.0) {
    Check c;
    c.name = name;
    c.measured = measured;
    c.refined = refined;
    c.tolerance = tol;
    c.constant = constant;
    c.constant_refined = constant_refined;
    c.passed = measured <= tol;
    const double scale = std::max(std::abs(refined), 10.0 * tol);
    c.underresolved = std::abs(measured - refined) > res_tol * scale;
    if (constant && constant_refined) {
      const double cs = std::max(std::abs(*constant), std::abs(*constant_refined));
      if (cs > 100.0 * constant_floor)
        c.underresolved = c.underresolved || std::abs(*constant - *constant_refined) > res_const * cs;
    }
    report.checks.push_back(std::move(c));
  };

  auto sup_check = [&](const std::string& name, double tol, auto pick) {
    add(name, sup_of(sc, pick), sup_of(sf, pick), tol);
  };
  const double slope_tol = config.tolerance("bounded_slope");
  auto bounded_check = [&](const std::string& name, auto pick, double floor) {
    auto eval = [&](const Sweep& s, double& constant) {
      std::vector<double> r, v;
      for (const auto& m : s.members) {
        r.push_back(m.r);
        v.push_back(pick(m));
      }
      constant = *std::max_element(v.begin(), v.end());
      return loglog_growth(r, v, floor);
    };
    double c0 = 0.0, c1 = 0.0;
    const double g0 = eval(sc, c0), g1 = eval(sf, c1);
    add(name, g0, g1, slope_tol, c0, c1, floor);
  };

  sup_check("gauss_bonnet", config.tolerance("gauss_bonnet"), [](const auto& m) { return m.gauss_bonnet; });
  sup_check("second_form_relation", config.tolerance("second_form_relation"),
            [](const auto& m) { return m.second_form; });
  {
    // Residuals must drop tenfold under the doubling unless already at the floor.
    const double floor = config.tolerance("refinement_floor");
    const double a = sup_of(sc, [](const auto& m) { return m.second_form; });
    const double b = sup_of(sf, [](const auto& m) { return m.second_form; });
    Check c{"second_form_relation.refinement", b, std::max(a / 10.0, floor), b, {}, {}, false, false};
    c.passed = c.measured <= c.tolerance;
    report.checks.push_back(c);
    const double ia = sup_of(sc, [](const auto& m) { return m.ibp; });
    const double ib = sup_of(sf, [](const auto& m) { return m.ibp; });
    Check d{"ibp.refinement", ib, std::max(ia / 10.0, floor), ib, {}, {}, false, false};
    d.passed = d.measured <= d.tolerance;
    report.checks.push_back(d);
  }
  sup_check("ibp", config.tolerance("ibp"), [](const auto& m) { return m.ibp; });
  sup_check("distance_hessian.algebraic", config.tolerance("distance_hessian"),
            [](const auto& m) { return m.hessian; });
  sup_check("distance_hessian.spot_check", config.tolerance("distance_hessian_spot"),
            [](const auto& m) { return m.hessian_spot; });
  bounded_check("mean_curvature_expansion.growth", [](const auto& m) { return m.mce; }, 1e-8);
  bounded_check("integral_identity.growth", [](const auto& m) { return m.integral; }, 1e-8);

  {
    const double tau = config.metric.decay_order();
    std::vector<FundamentalData> fc, ff;
    for (const auto& m : sc.members) fc.push_back(m.fd);
    for (const auto& m : sf.members) ff.push_back(m.fd);
    const NearlyRoundReport a = nearly_round_diagnostics(fc, tau), b = nearly_round_diagnostics(ff, tau);
    auto growth = [&](const NearlyRoundReport& rep, auto pick, double floor) {
      std::vector<double> r, v;
      for (const auto& m : rep.members) {
        r.push_back(m.r);
        v.push_back(pick(m));
      }
      return loglog_growth(r, v, floor);
    };
    auto nr = [&](const std::string& name, auto pick, double constant_a, double constant_b, double floor) {
      add("nearly_round." + name, growth(a, pick, floor), growth(b, pick, floor), slope_tol, constant_a, constant_b,
          floor);
    };
    nr("c_trace_free", [](const auto& m) { return m.c_trace_free; }, a.c_trace_free, b.c_trace_free, 1e-8);
    nr("radial_ratio", [](const auto& m) { return m.radial_ratio; }, a.radial_ratio, b.radial_ratio, 0.0);
    nr("diameter_ratio", [](const auto& m) { return m.diameter_ratio; }, a.diameter_ratio, b.diameter_ratio, 0.0);
    nr("area_ratio", [](const auto& m) { return m.area_ratio; }, a.area_ratio_max, b.area_ratio_max, 0.0);
    nr("c_second_form", [](const auto& m) { return m.c_second_form; }, a.c_second_form, b.c_second_form, 1e-8);
  }

  if (config.family.kind == FamilyKind::kAxisymKerr) {
    auto spread = [](const Sweep& s) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const auto& m : s.members) {
        lo = std::min(lo, m.tau3_ring);
        hi = std::max(hi, m.tau3_ring);
      }
      return lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity();
    };
    auto sup3 = [](const auto& m) { return m.tau3_ring; };
    add("kerr.tau3_ring_A.spread", spread(sc), spread(sf), config.tolerance("kerr_spread"), sup_of(sc, sup3),
        sup_of(sf, sup3), 1e-8);
    bounded_check("kerr.tau2_H.growth", [](const auto& m) { return m.tau2_h; }, 1e-8);
  }

  // Embedding and mass checks over the surfaces that embedded at both levels.
  Sweep ec, ef;
  int failures = 0;
  for (std::size_t i = 0; i < sc.members.size(); ++i) {
    if (sc.members[i].embedded && sf.members[i].embedded) {
      ec.members.push_back(sc.members[i]);
      ef.members.push_back(sf.members[i]);
    } else {
      ++failures;
    }
  }
  add("embedding.failures", failures, failures, 0.0);
  if (!ec.members.empty()) {
    auto esup = [&](const std::string& name, double tol, auto pick) {
      add(name, sup_of(ec, pick), sup_of(ef, pick), tol);
    };
    esup("embedding.metric_residual", config.tolerance("embedding"), [](const auto& m) { return m.metric_residual; });
    esup("minkowski.rho1", config.tolerance("minkowski"), [](const auto& m) { return m.rho1; });
    esup("minkowski.rho2", config.tolerance("minkowski"), [](const auto& m) { return m.rho2; });
    esup("volume.relative", config.tolerance("volume"), [](const auto& m) { return m.volume; });
    if (ec.members.front().cross_validation >= 0.0)
      add("embedding.cross_validation", ec.members.front().cross_validation, ef.members.front().cross_validation,
          config.tolerance("cross_validation"));
    if (ec.members.size() >= 3) {
      auto eb = [&](const std::string& name, auto pick) {
        auto eval = [&](const Sweep& s, double& constant) {
          std::vector<double> r, v;
          for (const auto& m : s.members) {
            r.push_back(m.r);
            v.push_back(pick(m));
          }
          constant = *std::max_element(v.begin(), v.end());
          return loglog_growth(r, v, 1e-8);
        };
        double c0 = 0.0, c1 = 0.0;
        const double g0 = eval(ec, c0), g1 = eval(ef, c1);
        add(name, g0, g1, slope_tol, c0, c1, 1e-8);
      };
      eb("embedding.h0_deviation.growth", [](const auto& m) { return m.h0_scaled; });
      eb("embedding.support_deviation.growth", [](const auto& m) { return m.support_scaled; });
      eb("minkowski.claim.growth", [](const auto& m) { return m.claim; });
      eb("uniformization.constant.growth", [](const auto& m) { return m.uniformization; });
    }
    const MetricFamily fam = config.metric.family;
    if (fam == MetricFamily::kSchwarzschildIsotropic || fam == MetricFamily::kSchwarzschildStandard ||
        fam == MetricFamily::kKerrSlice) {
      auto order = [](const auto& m) { return m.brown_york ? m.hawking - *m.brown_york : 0.0; };
      add("masses.hawking_minus_brown_york", sup_of(ec, order) > 0 ? sup_of(ec, order) : 0.0,
          sup_of(ef, order) > 0 ? sup_of(ef, order) : 0.0, config.tolerance("mass_order"));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

ojson metadata(const StudyConfig& c, const std::string& kind) {
  ojson meta;
  meta["report"] = kind;
  meta["version"] = library_version();
  ojson cfg = ojson::object();
  for (const auto& [k, v] : c.echo()) cfg[k] = v;
  meta["config"] = cfg;
  ojson tol = ojson::object();
  for (const auto& [k, v] : c.tolerances) tol[k] = v;
  meta["tolerances"] = tol;
  return meta;
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::string row_flags(const MassReport& rep, std::size_t i) {
  const MassValues& row = rep.rows[i];
  std::string f;
  auto push = [&](const std::string& s) { f += (f.empty() ? "" : ";") + s; };
  if (row.status != EmbeddingStatus::kOk) push(status_name(row.status));
  if (rep.injected[i]) push("injected");
  if (row.brown_york && row.hawking > *row.brown_york + rep.config.tolerance("mass_order"))
    push("hawking_above_brown_york");
  return f;
}

ojson rate_json(const std::optional<RateFit>& f) {
  if (!f) return nullptr;
  ojson j;
  j["slope"] = number_or_null(f->slope);
  j["intercept"] = number_or_null(f->intercept);
  j["residual"] = number_or_null(f->residual);
  j["m_inf"] = f->m_inf;
  j["points"] = f->points;
  j["fittable"] = f->fittable;
  j["flagged"] = f->flagged;
  return j;
}

}  // namespace

void write_masses_csv(std::ostream& out, const MassReport& report) {
  out << "r,area,hawking,brown_york,adm_reference,embed_residual,flags\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const MassValues& row = report.rows[i];
    out << fmt(row.r_label) << ',' << fmt(row.area) << ',' << fmt(row.hawking) << ','
        << (row.brown_york ? fmt(*row.brown_york) : "") << ',' << fmt(row.adm_reference) << ','
        << (row.status == EmbeddingStatus::kOk ? fmt(row.metric_residual) : "") << ',' << row_flags(report, i)
        << '\n';
  }
}

void write_masses_json(std::ostream& out, const MassReport& report) {
  ojson j;
  j["metadata"] = metadata(report.config, "masses");
  j["metadata"]["adm_reference"] = report.config.metric.adm_mass_exact();
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const MassValues& row = report.rows[i];
    ojson r;
    r["r"] = row.r_label;
    r["area"] = row.area;
    r["hawking"] = row.hawking;
    r["brown_york"] = row.brown_york ? ojson(*row.brown_york) : ojson(nullptr);
    r["adm_reference"] = row.adm_reference;
    r["embed_residual"] = row.status == EmbeddingStatus::kOk ? ojson(row.metric_residual) : ojson(nullptr);
    r["flags"] = row_flags(report, i);
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["rates"] = {{"hawking", rate_json(report.hawking_rate)}, {"brown_york", rate_json(report.brown_york_rate)}};
  out << j.dump(2) << '\n';
}

void write_verify_csv(std::ostream& out, const VerifyReport& report) {
  out << "check,measured,tolerance,refined,constant,constant_refined,verdict\n";
  for (const Check& c : report.checks)
    out << c.name << ',' << fmt(c.measured) << ',' << fmt(c.tolerance) << ',' << fmt(c.refined) << ','
        << (c.constant ? fmt(*c.constant) : "") << ',' << (c.constant_refined ? fmt(*c.constant_refined) : "") << ','
        << c.verdict() << '\n';
}

void write_verify_json(std::ostream& out, const VerifyReport& report) {
  ojson j;
  j["metadata"] = metadata(report.config, "verify");
  ojson rows = ojson::array();
  for (const Check& c : report.checks) {
    ojson r;
    r["check"] = c.name;
    r["measured"] = number_or_null(c.measured);
    r["tolerance"] = number_or_null(c.tolerance);
    r["refined"] = number_or_null(c.refined);
    r["constant"] = c.constant ? number_or_null(*c.constant) : ojson(nullptr);
    r["constant_refined"] = c.constant_refined ? number_or_null(*c.constant_refined) : ojson(nullptr);
    r["verdict"] = c.verdict();
    rows.push_back(r);
  }
  j["checks"] = rows;
  j["passed"] = report.all_passed();
  out << j.dump(2) << '\n';
}

void write_rates_csv(std::ostream& out, const MassReport& report) {
  out << "quantity,slope,intercept,residual,m_inf,points,verdict\n";
  auto line = [&](const char* name, const std::optional<RateFit>& f) {
    if (!f) return;
    const char* verdict = !f->fittable ? "not_fittable" : f->flagged ? "flagged" : "ok";
    out << name << ',' << fmt(f->slope) << ',' << fmt(f->intercept) << ',' << fmt(f->residual) << ','
        << fmt(f->m_inf) << ',' << f->points << ',' << verdict << '\n';
  };
  line("hawking", report.hawking_rate);
  line("brown_york", report.brown_york_rate);
}

void write_rates_json(std::ostream& out, const MassReport& report) {
  ojson j;
  j["metadata"] = metadata(report.config, "rate");
  j["rates"] = {{"hawking", rate_json(report.hawking_rate)}, {"brown_york", rate_json(report.brown_york_rate)}};
  out << j.dump(2) << '\n';
}

std::vector<std::pair<double, double>> read_mass_column(std::istream& in, const std::string& column) {
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("rate input: empty file");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  const auto names = split(header);
  const auto rcol = std::find(names.begin(), names.end(), "r");
  const auto vcol = std::find(names.begin(), names.end(), column);
  if (rcol == names.end() || vcol == names.end()) throw ConfigError("rate input: missing column '" + column + "'");
  const auto ri = static_cast<std::size_t>(rcol - names.begin()), vi = static_cast<std::size_t>(vcol - names.begin());
  std::vector<std::pair<double, double>> out;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() <= std::max(ri, vi) || trim(cells[vi]).empty()) continue;
    out.emplace_back(to_number("r", cells[ri]), to_number(column, cells[vi]));
  }
  return out;
}

}  // namespace qlm
