// Command-line front end: run scenario files, classify single curve points,
// and run the named check suites. Exit codes: 0 success, 2 bad input
// (scenario or usage error; nothing ran), 3 numeric failure (some task or
// check failed; artifacts for the healthy tasks were still written).

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sigflow/io.hpp"
#include "sigflow/scenario.hpp"
#include "sigflow/verify.hpp"

namespace {

using namespace sigflow;

// --tol name=value, applied over the defaults (run: over the scenario's).
void apply_tol_overrides(const std::vector<std::string>& specs,
                         Tolerances& tol) {
  for (const auto& spec : specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("--tol expects name=value, got '" + spec + "'", 0);
    std::string key = spec.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(spec.substr(eq + 1), &used);
      if (used != spec.size() - eq - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ScenarioError("--tol " + key + ": bad number", 0);
    }
    if (!(value > 0.0))
      throw ScenarioError("--tol " + key + ": must be positive", 0);
    if (key == "on_discriminant")
      tol.on_discriminant = value;
    else if (key == "iso")
      tol.iso = value;
    else if (key == "tangency")
      tol.tangency = value;
    else if (key == "eigen_zero")
      tol.eigen_zero = value;
    else if (key == "eigen_boundary")
      tol.eigen_boundary = value;
    else if (key == "root_merge")
      tol.root_merge = value;
    else
      throw ScenarioError("--tol: unknown tolerance '" + key + "'", 0);
  }
}

Point parse_point_arg(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos)
    throw ScenarioError("--at expects x,y", 0);
  try {
    std::size_t ux = 0, uy = 0;
    double x = std::stod(text.substr(0, comma), &ux);
    double y = std::stod(text.substr(comma + 1), &uy);
    if (ux != comma || uy != text.size() - comma - 1)
      throw std::invalid_argument("");
    return {x, y};
  } catch (const std::exception&) {
    throw ScenarioError("--at: bad coordinates '" + text + "'", 0);
  }
}

int cmd_run(const std::string& path, const std::string& out_dir, bool serial,
            unsigned seed, const std::vector<std::string>& tols) {
  Scenario sc;
  try {
    sc = load_scenario(path);
    apply_tol_overrides(tols, sc.tol);
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "sigflow: %s: %s\n", path.c_str(), e.what());
    return 2;
  }
  RunOptions opt;
  opt.policy.parallel = !serial;
  opt.seed = seed;
  if (!out_dir.empty()) {
    opt.out_dir = out_dir;
  } else if (sc.out_dir.empty()) {
    if (const char* env = std::getenv("SIGFLOW_OUT"))
      if (env[0]) opt.out_dir = env;
  }
  RunReport rep = run_scenario(sc, opt);
  for (const auto& oc : rep.outcomes)
    std::printf("%-4s %-15s %-28s %s\n", oc.ok ? "ok" : "FAIL",
                oc.kind.c_str(), oc.file.c_str(), oc.detail.c_str());
  return rep.exit_code;
}

int cmd_classify(const std::string& metric_path, const std::string& at,
                 bool project, const std::string& out_path,
                 const std::vector<std::string>& tols) {
  Tolerances tol;
  Point q;
  std::optional<Metric> m;
  try {
    apply_tol_overrides(tols, tol);
    q = parse_point_arg(at);
    m = load_metric(metric_path);
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "sigflow: %s\n", e.what());
    return 2;
  }
  try {
    if (project) q = project_to_discriminant(*m, q);
    PointClassification r = classify(*m, q, tol);
    std::printf("point: %s %s\n", format_g17(r.q.x).c_str(),
                format_g17(r.q.y).c_str());
    std::printf("class: %s\n", to_string(r.cls));
    std::printf("K1: %s\n", format_g17(r.K1).c_str());
    std::printf("tangency: %s\n", to_string(r.tangency));
    std::string dirs;
    for (const auto& root : r.directions) {
      if (!dirs.empty()) dirs += ' ';
      dirs += root.dir.is_infinite() ? std::string("inf")
                                     : format_g17(root.dir.p);
      dirs += '*';
      dirs += std::to_string(root.multiplicity);
    }
    std::printf("directions: %s\n", dirs.c_str());
    if (r.lambda_at_p0)
      std::printf("lambda: %s %s\n", format_g17(r.lambda_at_p0->l1).c_str(),
                  format_g17(r.lambda_at_p0->l2).c_str());
    if (r.eps) {
      auto with_sign = [](double v) {
        std::string s = format_g17(v);
        if (!s.empty() && s[0] != '-') s.insert(s.begin(), '+');
        return s;
      };
      std::printf("spectrum: %s%si %s%si\n",
                  format_g17(r.eps->e1.real()).c_str(),
                  with_sign(r.eps->e1.imag()).c_str(),
                  format_g17(r.eps->e2.real()).c_str(),
                  with_sign(r.eps->e2.imag()).c_str());
    }
    if (!r.diagnostics.empty())
      std::printf("diagnostics: %s\n", r.diagnostics.c_str());
    if (!out_path.empty()) write_text_atomic(out_path, classification_csv({r}));
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sigflow: classify: %s\n", e.what());
    return 3;
  }
}

int cmd_verify(const std::string& suite, unsigned seed,
               const std::string& out_path) {
  std::vector<CheckResult> results;
  try {
    results = run_suite(suite, seed);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "sigflow: %s\n", e.what());
    return 2;
  }
  std::string report = format_report(results);
  std::fputs(report.c_str(), stdout);
  if (!out_path.empty()) {
    try {
      write_text_atomic(out_path, report);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "sigflow: %s\n", e.what());
      return 3;
    }
  }
  for (const auto& r : results)
    if (!r.pass) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodesic flows of signature-changing metrics"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  bool serial = false;
  unsigned seed = 20260819;
  std::vector<std::string> tols;

  auto* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory (overrides [output])");
  run->add_option("--tol", tols, "tolerance override name=value");
  run->add_option("--seed", seed, "seed for verify tasks");
  run->add_flag("--serial", serial, "disable parallel sweeps");

  std::string metric_path, at_text, classify_out;
  bool project = false;
  auto* cls = app.add_subcommand("classify", "classify one curve point");
  cls->add_option("--metric", metric_path, "metric file ([metric] section)")
      ->required();
  cls->add_option("--at", at_text, "point x,y on the discriminant curve")
      ->required();
  cls->add_flag("--project", project, "project the point onto the curve");
  cls->add_option("--out", classify_out, "also write a one-row report CSV");
  cls->add_option("--tol", tols, "tolerance override name=value");

  std::string suite, verify_out;
  auto* ver = app.add_subcommand("verify", "run a named check suite");
  ver->add_option("--suite", suite, "suite name (or 'all')")->required();
  ver->add_option("--seed", seed, "seed for randomized checks");
  ver->add_option("--out", verify_out, "also write the report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; any parse error is input error
  }

  if (run->parsed()) return cmd_run(scenario_path, out_dir, serial, seed, tols);
  if (cls->parsed())
    return cmd_classify(metric_path, at_text, project, classify_out, tols);
  return cmd_verify(suite, seed, verify_out);
}
