#pragma once

// Scenario files: one flat text file drives a batch of tasks against one
// metric. Sections are [metric], [region], optional [tolerances] and
// [output], then one or more [task <kind>] sections executed in order.
// Lines are `key = value`; '#' starts a comment; no nesting and no quoting.
// The entire file validates before anything runs, so a bad scenario writes
// no artifacts at all.
//
//   [metric]            three coefficient expressions in x and y
//   a = -y              (alternative: `omega = <expr>` and `eps = <number>`
//   b = 0                for the tangential model a = omega (y - eps x^2),
//   c = 1                b = 0, c = -omega)
//
//   [region]            integration bounds and the portrait view box
//   x = -1.2 1.2
//   y = -0.4 1.3
//
//   [task classify-curve]   march the curve, classify every point
//   seed = 0 0              -> classification report CSV
//   arclength = 2
//   step = 0.02
//   file = curve.csv
//
//   [task trace]            one geodesic -> trace CSV (`samples` rows)
//   [task family]           launch the member family at a singular point
//                           -> manifest CSV with per-member fits
//   [task portrait]         family and/or individual launches plus curve
//                           polylines -> styled SVG with legend
//   [task verify]           run a named check suite -> text report
//
// Exit codes: 0 all tasks succeeded, 2 scenario error (nothing ran),
// 3 at least one task failed numerically (other tasks still ran; each
// artifact is written atomically, so failures never leave partial files).

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sigflow/families.hpp"
#include "sigflow/parallel.hpp"

namespace sigflow {

struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& what, int line_)
      : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + what
                                     : what),
        line(line_) {}
  int line = 0;
};

struct ClassifyCurveTask {
  Point seed;
  double arclength = 1.0;
  double step = 0.01;
};

struct TraceTask {
  Point at;
  Direction dir;
  double sense = 1.0;
  double t_max = 10.0;
  int samples = 100;
};

struct FamilyTask {
  Point at;
  FamilyParams params;
  double fit_lo = 0.0;  // 0: manifest default window [delta, 10 delta]
  double fit_hi = 0.0;
};

struct PortraitLaunch {
  Point at;
  Direction dir;
  double sense = 1.0;
};

struct PortraitCurve {
  Point seed;
  double arclength = 1.0;
  double step = 0.01;
};

struct PortraitTask {
  std::optional<Point> family_at;
  FamilyParams params;
  std::vector<PortraitLaunch> launches;
  std::vector<PortraitCurve> curves;
  double t_max = 50.0;
};

struct VerifyTask {
  std::string suite;
};

struct ScenarioTask {
  std::string kind;
  std::string file;  // artifact name, relative to the output directory
  int line = 0;
  std::variant<ClassifyCurveTask, TraceTask, FamilyTask, PortraitTask,
               VerifyTask>
      body;
};

struct Scenario {
  // Coefficients kept as source text (already validated); build_metric
  // reparses so a Scenario stays copyable and cheap.
  std::string a, b, c;
  bool form11 = false;
  std::string omega;
  double eps = 0.0;

  Box region;
  Tolerances tol;
  std::string out_dir;  // from [output]; may be empty
  std::vector<ScenarioTask> tasks;

  Metric build_metric() const;
};

// Both throw ScenarioError with a line-numbered message.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// A metric file is the [metric] section alone (a full scenario file also
// works); used by `classify`. Throws ScenarioError.
Metric load_metric(const std::string& path);

struct TaskOutcome {
  std::string kind;
  std::string file;
  bool ok = false;
  std::string detail;  // failure reason, or a one-line success note
};

struct RunReport {
  std::vector<TaskOutcome> outcomes;
  std::vector<std::string> artifacts;  // paths written, in task order
  int exit_code = 0;                   // 0 or 3; scenario errors throw first
};

struct RunOptions {
  std::string out_dir;            // overrides the scenario's [output] dir
  ExecPolicy policy;              // serial or parallel sweeps
  std::uint32_t seed = 20260819;  // verify-task randomness
};

RunReport run_scenario(const Scenario& sc, const RunOptions& opt = {});

}  // namespace sigflow
