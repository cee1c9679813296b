#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qlm/metric_catalog.hpp"
#include "qlm/quasilocal_mass.hpp"
#include "qlm/surface_geometry.hpp"

namespace qlm {

const char* library_version();

enum class FamilyKind { kCoordinateSpheres, kRadialPerturbed, kAxisymKerr };

/// Surface family indexed by a radius r.
///
///   coordinate-spheres [center=x,y,z]                    |x - c| = r
///   radial-perturbed amplitude=A l=L m=M decay=d [center=]
///                                                         R = r (1 + A r^-d Y_LM)
///   axisym-kerr                                           Boyer-Lindquist spheres of a Kerr slice
struct FamilySpec {
  FamilyKind kind = FamilyKind::kCoordinateSpheres;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double amplitude = 0.0;
  int degree = 2;
  int order = 0;
  double decay = 1.0;

  static FamilySpec parse(std::string_view text);
  std::string to_string() const;
};

Immersion make_surface(const FamilySpec& family, double r, int band_limit, const AFMetric& metric);

/// Study description read from "key = value" lines; '#' starts a comment.
///
/// Keys: metric, family, radii, band_limit, format (csv | json), out (path or
/// "-"), seed, inject_failure (per-row probability), tolerance.<name>.
struct StudyConfig {
  AFMetric metric = AFMetric::euclidean();
  FamilySpec family;
  std::vector<double> radii;
  int band_limit = 16;
  std::string format = "csv";
  std::string out = "-";
  std::uint64_t seed = 0;
  double inject_failure = 0.0;
  std::map<std::string, double> tolerances = default_tolerances();

  static std::map<std::string, double> default_tolerances();
  /// Throws ConfigError on an unknown key or malformed value.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError when the schedule or band limit is invalid.
  void validate() const;
  double tolerance(const std::string& name) const { return tolerances.at(name); }
  /// Canonical key/value echo, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;

  static StudyConfig parse(std::istream& in);
  static StudyConfig parse_text(std::string_view text);
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS deviation of log|m - m_inf| from the fitted line
  double m_inf = 0.0;
  int points = 0;
  bool fittable = false;
  bool flagged = false;  // not fittable, or residual above the threshold
};

/// Least-squares fit of log|m(r) - m_inf| against log r. Series with fewer
/// than three points or with a difference within 1e3 r eps of m_inf are not fittable.
RateFit fit_rate(std::span<const double> r, std::span<const double> m, double m_inf,
                 double residual_threshold = 0.05);

struct MassReport {
  StudyConfig config;
  std::vector<MassValues> rows;
  std::vector<bool> injected;
  std::optional<RateFit> hawking_rate;
  std::optional<RateFit> brown_york_rate;

  bool has_solver_failure() const;
};

/// One mass row per scheduled radius, computed concurrently and reported in
/// schedule order.
MassReport run_masses(const StudyConfig& config);

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  double refined = 0.0;        // same quantity at twice the band limit
  std::optional<double> constant;  // family constant behind a boundedness check
  std::optional<double> constant_refined;
  bool underresolved = false;
  bool passed = false;

  /// "fail" when both levels exceed the tolerance, else "underresolved" or "pass".
  const char* verdict() const {
    if (!passed && !(refined <= tolerance)) return "fail";
    return underresolved ? "underresolved" : passed ? "pass" : "fail";
  }
};

struct VerifyReport {
  StudyConfig config;
  std::vector<Check> checks;
  bool all_passed() const;
};

/// Identity, decay and embedding checks along the configured family at band
/// limits L and 2L. A check whose value moves by more than the resolution
/// tolerance under the doubling is reported as underresolved and fails.
VerifyReport run_verify(const StudyConfig& config);

void write_masses_csv(std::ostream& out, const MassReport& report);
void write_masses_json(std::ostream& out, const MassReport& report);
void write_verify_csv(std::ostream& out, const VerifyReport& report);
void write_verify_json(std::ostream& out, const VerifyReport& report);
void write_rates_csv(std::ostream& out, const MassReport& report);
void write_rates_json(std::ostream& out, const MassReport& report);

/// Reads (r, value) columns from a masses CSV report; empty cells are skipped.
std::vector<std::pair<double, double>> read_mass_column(std::istream& in, const std::string& column);

}  // namespace qlm
