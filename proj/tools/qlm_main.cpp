// Command-line driver: qlm <masses|verify|embed|adm|rate> CONFIG [options]
//
// Exit status: 0 ok, 1 a check failed, 2 configuration error, 3 solver failure.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "qlm/errors.hpp"
#include "qlm/harness.hpp"
#include "qlm/weyl_embedding.hpp"

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfigError = 2, kSolverFailure = 3 };

struct Common {
  std::string config_path;
  std::string format;
  std::string out;
  int band_limit = 0;
  std::vector<std::string> overrides;
};

void log(const std::string& msg) { std::cerr << "[qlm] " << msg << '\n'; }

qlm::StudyConfig load(const Common& opt) {
  qlm::StudyConfig c;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw qlm::ConfigError("cannot read config file '" + opt.config_path + "'");
    c = qlm::StudyConfig::parse(in);
  }
  for (const std::string& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw qlm::ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opt.format.empty()) c.set("format", opt.format);
  if (!opt.out.empty()) c.set("out", opt.out);
  if (opt.band_limit != 0) c.set("band_limit", std::to_string(opt.band_limit));
  return c;
}

// Writes to the configured path, or standard output for "-".
template <class F>
void emit(const qlm::StudyConfig& c, F&& write) {
  if (c.out == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw qlm::ConfigError("cannot write '" + c.out + "'");
  write(f);
  log("wrote " + c.out);
}

void add_common(CLI::App* cmd, Common& opt, bool config_required = true) {
  auto* path = cmd->add_option("config", opt.config_path, "study configuration file");
  if (config_required) path->required();
  cmd->add_option("--format", opt.format, "report format: csv or json");
  cmd->add_option("--out", opt.out, "output path, '-' for standard output");
  cmd->add_option("--band-limit,-L", opt.band_limit, "spherical-harmonic band limit (>= 8)");
  cmd->add_option("--set", opt.overrides, "override a configuration key: key=value")->take_all();
}

int run_masses(const Common& opt) {
  const qlm::StudyConfig c = load(opt);
  log("masses: " + c.metric.to_string() + " | " + c.family.to_string());
  const qlm::MassReport rep = qlm::run_masses(c);
  emit(c, [&](std::ostream& o) {
    if (c.format == "json") qlm::write_masses_json(o, rep);
    else qlm::write_masses_csv(o, rep);
  });
  for (const auto& row : rep.rows)
    if (row.status != qlm::EmbeddingStatus::kOk) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "r=%g", row.r_label);
      log(std::string(buf) + ": " + qlm::status_name(row.status) + " (" + row.failure + ")");
    }
  return rep.has_solver_failure() ? kSolverFailure : kOk;
}

int run_verify(const Common& opt) {
  const qlm::StudyConfig c = load(opt);
  log("verify: " + c.metric.to_string() + " | " + c.family.to_string() + " | L=" + std::to_string(c.band_limit) +
      " and " + std::to_string(2 * c.band_limit));
  const qlm::VerifyReport rep = qlm::run_verify(c);
  emit(c, [&](std::ostream& o) {
    if (c.format == "json") qlm::write_verify_json(o, rep);
    else qlm::write_verify_csv(o, rep);
  });
  int failed = 0;
  for (const auto& chk : rep.checks)
    if (!chk.passed || chk.underresolved) {
      ++failed;
      log(chk.name + ": " + chk.verdict());
    }
  log(std::to_string(rep.checks.size() - failed) + "/" + std::to_string(rep.checks.size()) + " checks passed");
  return rep.all_passed() ? kOk : kCheckFailed;
}

int run_embed(const Common& opt, double radius, const std::string& obj_path) {
  qlm::StudyConfig c = load(opt);
  c.validate();
  const double r = std::isnan(radius) ? c.radii.front() : radius;
  const qlm::Immersion s = qlm::make_surface(c.family, r, c.band_limit, c.metric);
  const qlm::FundamentalData fd = qlm::fundamental_forms(s, c.metric);
  qlm::EmbedOptions eo;
  eo.cross_validate = true;
  qlm::IsometricEmbedding e = qlm::embed(s, fd, eo);
  e.tau = c.metric.decay_order();
  const qlm::MinkowskiResiduals mk = qlm::minkowski_residuals(e);
  const qlm::VolumeCheck vol = qlm::check_volume(e);
  emit(c, [&](std::ostream& o) {
    if (c.format == "json") {
      nlohmann::ordered_json j;
      j["r"] = r;
      j["r0"] = e.r0;
      j["axisymmetric"] = e.axisymmetric;
      j["metric_residual"] = e.metric_residual;
      j["h0_deviation"] = e.h0_deviation;
      j["support_deviation"] = e.support_deviation;
      j["area"] = e.area;
      j["volume"] = e.volume;
      j["volume_tetrahedra"] = vol.tetrahedra;
      j["rho1"] = mk.rho1;
      j["rho2"] = mk.rho2;
      j["claim_residual"] = mk.claim_residual;
      j["cross_validation"] = e.cross_validation;
      j["solver_iterations"] = e.solver_iterations;
      o << j.dump(2) << '\n';
    } else {
      qlm::write_embedding_csv(o, e);
    }
  });
  if (!obj_path.empty()) {
    std::ofstream f(obj_path, std::ios::binary);
    if (!f) throw qlm::ConfigError("cannot write '" + obj_path + "'");
    qlm::write_embedding_obj(f, e);
    log("wrote " + obj_path);
  }
  return kOk;
}

int run_adm(const Common& opt) {
  qlm::StudyConfig c = load(opt);
  c.validate();
  const qlm::AdmEstimate est = qlm::adm_mass(c.metric, c.radii, c.band_limit);
  emit(c, [&](std::ostream& o) {
    char buf[128];
    if (c.format == "json") {
      nlohmann::ordered_json j;
      j["metric"] = c.metric.to_string();
      j["radii"] = est.radii;
      j["fluxes"] = est.fluxes;
      j["adm_mass"] = est.value;
      j["error"] = est.error;
      j["fitted_order"] = est.fitted_order;
      j["non_monotone"] = est.non_monotone;
      j["underresolved"] = est.underresolved;
      j["exact"] = c.metric.adm_mass_exact();
      o << j.dump(2) << '\n';
    } else {
      o << "r,flux\n";
      for (std::size_t i = 0; i < est.radii.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", est.radii[i], est.fluxes[i]);
        o << buf;
      }
      std::snprintf(buf, sizeof buf, "inf,%.17g\n", est.value);
      o << buf;
    }
  });
  char msg[160];
  std::snprintf(msg, sizeof msg, "adm mass %.12g +- %.3g (order %.3g)%s%s", est.value, est.error, est.fitted_order,
                est.non_monotone ? " non-monotone" : "", est.underresolved ? " underresolved" : "");
  log(msg);
  return est.underresolved ? kCheckFailed : kOk;
}

int run_rate(const Common& opt, const std::string& input, double m_inf) {
  qlm::StudyConfig c = load(opt);
  qlm::MassReport rep;
  rep.config = c;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) throw qlm::ConfigError("cannot read '" + input + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const double ref = std::isnan(m_inf) ? c.metric.adm_mass_exact() : m_inf;
    const double tol = c.tolerance("rate_residual");
    for (const char* col : {"hawking", "brown_york"}) {
      std::istringstream text(buf.str());
      std::vector<double> r, m;
      for (const auto& [x, y] : qlm::read_mass_column(text, col)) {
        r.push_back(x);
        m.push_back(y);
      }
      (std::string(col) == "hawking" ? rep.hawking_rate : rep.brown_york_rate) = qlm::fit_rate(r, m, ref, tol);
    }
  } else {
    rep = qlm::run_masses(c);
    if (!std::isnan(m_inf)) {
      log("--m-inf only applies together with --input");
    }
  }
  emit(c, [&](std::ostream& o) {
    if (c.format == "json") qlm::write_rates_json(o, rep);
    else qlm::write_rates_csv(o, rep);
  });
  const bool bad = (rep.hawking_rate && rep.hawking_rate->flagged) ||
                   (rep.brown_york_rate && rep.brown_york_rate->flagged);
  if (bad) log("rate fit flagged: not fittable or residual above tolerance.rate_residual");
  return bad ? kCheckFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-local mass laboratory for asymptotically flat 3-metrics"};
  app.set_version_flag("--version", qlm::library_version());
  app.require_subcommand(1);

  Common masses_opt, verify_opt, embed_opt, adm_opt, rate_opt;
  auto* masses = app.add_subcommand("masses", "Hawking and Brown-York masses along the radius schedule");
  add_common(masses, masses_opt);
  auto* verify = app.add_subcommand("verify", "identity, decay and embedding checks at L and 2L");
  add_common(verify, verify_opt);
  auto* embed = app.add_subcommand("embed", "isometric embedding of one family member");
  add_common(embed, embed_opt);
  double radius = std::nan("");
  std::string obj_path;
  embed->add_option("--radius", radius, "family radius (default: first scheduled radius)");
  embed->add_option("--obj", obj_path, "also write a triangle mesh");
  auto* adm = app.add_subcommand("adm", "extrapolated ADM mass from coordinate-sphere fluxes");
  add_common(adm, adm_opt);
  auto* rate = app.add_subcommand("rate", "log-log convergence rates of the mass columns");
  add_common(rate, rate_opt, false);
  std::string input;
  double m_inf = std::nan("");
  rate->add_option("--input", input, "fit an existing masses CSV instead of running the study");
  rate->add_option("--m-inf", m_inf, "limit value for --input (default: exact ADM mass of the metric)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*masses) return run_masses(masses_opt);
    if (*verify) return run_verify(verify_opt);
    if (*embed) return run_embed(embed_opt, radius, obj_path);
    if (*adm) return run_adm(adm_opt);
    if (*rate) {
      if (rate_opt.config_path.empty() && input.empty()) throw qlm::ConfigError("rate: need a config or --input");
      return run_rate(rate_opt, input, m_inf);
    }
  } catch (const qlm::ConfigError& e) {
    log(std::string("configuration error: ") + e.what());
    return kConfigError;
  } catch (const qlm::DomainError& e) {
    log(std::string("invalid geometry: ") + e.what());
    return kConfigError;
  } catch (const qlm::SolverError& e) {
    log(std::string("solver failure: ") + e.what());
    return kSolverFailure;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return kSolverFailure;
  }
  return kOk;
}
