#include "sigflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "sigflow/io.hpp"
#include "sigflow/svg.hpp"
#include "sigflow/verify.hpp"

namespace sigflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

struct KeyValue {
  std::string key, value;
  int line = 0;
};

struct Section {
  std::string name;  // "metric", "region", "tolerances", "output", "task"
  std::string kind;  // task kind for task sections
  int line = 0;
  std::vector<KeyValue> entries;
};

double parse_number(const std::string& text, int line, const std::string& key) {
  const char* start = text.c_str();
  char* end = nullptr;
  double v = std::strtod(start, &end);
  if (end == start || *end != '\0' || !std::isfinite(v))
    throw ScenarioError("key '" + key + "' needs a finite number, got '" +
                            text + "'",
                        line);
  return v;
}

std::vector<double> parse_numbers(const std::string& text, int line,
                                  const std::string& key, std::size_t want) {
  auto toks = split_ws(text);
  if (want != 0 && toks.size() != want)
    throw ScenarioError("key '" + key + "' needs " + std::to_string(want) +
                            " numbers, got " + std::to_string(toks.size()),
                        line);
  std::vector<double> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(parse_number(t, line, key));
  return out;
}

Direction parse_direction(const std::string& text, int line,
                          const std::string& key) {
  if (text == "inf" || text == "Inf" || text == "INF")
    return Direction::infinity();
  return Direction::affine(parse_number(text, line, key));
}

// A tiny accessor over one section's entries with strict key accounting:
// every key must be consumed exactly as often as it appears.
class Keys {
 public:
  explicit Keys(const Section& s) : s_(s), used_(s.entries.size(), false) {}

  std::optional<std::string> take(const std::string& key) {
    std::optional<std::string> out;
    for (std::size_t i = 0; i < s_.entries.size(); ++i) {
      if (used_[i] || s_.entries[i].key != key) continue;
      if (out)
        throw ScenarioError("key '" + key + "' given twice",
                            s_.entries[i].line);
      used_[i] = true;
      out = s_.entries[i].value;
      line_ = s_.entries[i].line;
    }
    return out;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v)
      throw ScenarioError("section [" + s_.name +
                              (s_.kind.empty() ? "" : " " + s_.kind) +
                              "] is missing key '" + key + "'",
                          s_.line);
    return *v;
  }

  std::vector<KeyValue> take_all(const std::string& key) {
    std::vector<KeyValue> out;
    for (std::size_t i = 0; i < s_.entries.size(); ++i) {
      if (used_[i] || s_.entries[i].key != key) continue;
      used_[i] = true;
      out.push_back(s_.entries[i]);
    }
    return out;
  }

  // Line of the most recent take(); section header line before any.
  int line() const { return line_ ? line_ : s_.line; }

  void finish() const {
    for (std::size_t i = 0; i < s_.entries.size(); ++i)
      if (!used_[i])
        throw ScenarioError("unknown key '" + s_.entries[i].key + "'",
                            s_.entries[i].line);
  }

 private:
  const Section& s_;
  std::vector<bool> used_;
  int line_ = 0;
};

std::vector<Section> split_sections(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ScenarioError("unterminated section header", line_no);
      auto toks = split_ws(line.substr(1, line.size() - 2));
      if (toks.empty()) throw ScenarioError("empty section header", line_no);
      Section s;
      s.name = toks[0];
      s.line = line_no;
      if (s.name == "task") {
        if (toks.size() != 2)
          throw ScenarioError("task sections are [task <kind>]", line_no);
        s.kind = toks[1];
      } else if (toks.size() != 1) {
        throw ScenarioError("section [" + toks[0] + "] takes no arguments",
                            line_no);
      }
      sections.push_back(std::move(s));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("expected 'key = value' or a section header",
                          line_no);
    if (sections.empty())
      throw ScenarioError("key outside any section", line_no);
    KeyValue kv;
    kv.key = trim(line.substr(0, eq));
    kv.value = trim(line.substr(eq + 1));
    kv.line = line_no;
    if (kv.key.empty()) throw ScenarioError("empty key", line_no);
    sections.back().entries.push_back(std::move(kv));
  }
  return sections;
}

void validate_expression(const std::string& text, int line,
                         const std::string& key) {
  if (text.empty())
    throw ScenarioError("key '" + key + "' needs an expression", line);
  try {
    parse_expression(text);
  } catch (const ParseError& e) {
    throw ScenarioError("key '" + key + "': " + e.what() + " (offset " +
                            std::to_string(e.offset) + ")",
                        line);
  }
}

void parse_metric_section(const Section& s, Scenario& sc) {
  Keys keys(s);
  auto a = keys.take("a");
  int la = keys.line();
  auto b = keys.take("b");
  int lb = keys.line();
  auto c = keys.take("c");
  int lc = keys.line();
  auto omega = keys.take("omega");
  int lo = keys.line();
  auto eps = keys.take("eps");
  int le = keys.line();
  keys.finish();
  bool plain = a || b || c;
  bool tangential = omega || eps;
  if (plain && tangential)
    throw ScenarioError("[metric] mixes a/b/c with omega/eps", s.line);
  if (plain) {
    if (!a || !b || !c)
      throw ScenarioError("[metric] needs all three of a, b, c", s.line);
    validate_expression(*a, la, "a");
    validate_expression(*b, lb, "b");
    validate_expression(*c, lc, "c");
    sc.a = *a;
    sc.b = *b;
    sc.c = *c;
  } else if (tangential) {
    if (!omega || !eps)
      throw ScenarioError("[metric] needs both omega and eps", s.line);
    validate_expression(*omega, lo, "omega");
    sc.form11 = true;
    sc.omega = *omega;
    sc.eps = parse_number(*eps, le, "eps");
    try {
      (void)Metric::form11(parse_expression(sc.omega), sc.eps);
    } catch (const std::exception& e) {
      throw ScenarioError(std::string("[metric] ") + e.what(), s.line);
    }
  } else {
    throw ScenarioError("[metric] needs a/b/c or omega/eps", s.line);
  }
}

void parse_region_section(const Section& s, Scenario& sc) {
  Keys keys(s);
  auto xs = parse_numbers(keys.require("x"), keys.line(), "x", 2);
  auto ys = parse_numbers(keys.require("y"), keys.line(), "y", 2);
  keys.finish();
  if (!(xs[0] < xs[1]) || !(ys[0] < ys[1]))
    throw ScenarioError("[region] bounds must satisfy lo < hi", s.line);
  sc.region = Box{xs[0], xs[1], ys[0], ys[1]};
}

void parse_tolerances_section(const Section& s, Scenario& sc) {
  Keys keys(s);
  struct Slot {
    const char* key;
    double* field;
  } slots[] = {
      {"on_discriminant", &sc.tol.on_discriminant},
      {"iso", &sc.tol.iso},
      {"tangency", &sc.tol.tangency},
      {"eigen_zero", &sc.tol.eigen_zero},
      {"eigen_boundary", &sc.tol.eigen_boundary},
      {"root_merge", &sc.tol.root_merge},
  };
  for (auto& slot : slots) {
    if (auto v = keys.take(slot.key)) {
      double t = parse_number(*v, keys.line(), slot.key);
      if (!(t > 0.0))
        throw ScenarioError(std::string("tolerance '") + slot.key +
                                "' must be positive",
                            keys.line());
      *slot.field = t;
    }
  }
  keys.finish();
}

void parse_family_params(Keys& keys, FamilyParams& params) {
  if (auto v = keys.take("delta")) {
    params.delta = parse_number(*v, keys.line(), "delta");
    if (!(params.delta > 0.0))
      throw ScenarioError("delta must be positive", keys.line());
  }
  if (auto v = keys.take("range")) {
    params.range = parse_number(*v, keys.line(), "range");
    if (!(params.range > 0.0))
      throw ScenarioError("range must be positive", keys.line());
  }
  if (auto v = keys.take("leaves"))
    params.leaves = parse_numbers(*v, keys.line(), "leaves", 0);
  if (auto v = keys.take("phases"))
    params.phases = parse_numbers(*v, keys.line(), "phases", 0);
  if (auto v = keys.take("rtol")) {
    params.integrator.rtol = parse_number(*v, keys.line(), "rtol");
    if (!(params.integrator.rtol > 0.0))
      throw ScenarioError("rtol must be positive", keys.line());
  }
}

std::string parse_task_file(Keys& keys) {
  std::string file = keys.require("file");
  if (file.empty() || file.front() == '/' ||
      file.find("..") != std::string::npos)
    throw ScenarioError("task file must be a plain relative name",
                        keys.line());
  return file;
}

ScenarioTask parse_task_section(const Section& s) {
  ScenarioTask task;
  task.kind = s.kind;
  task.line = s.line;
  Keys keys(s);
  if (s.kind == "classify-curve") {
    ClassifyCurveTask t;
    auto seed = parse_numbers(keys.require("seed"), keys.line(), "seed", 2);
    t.seed = {seed[0], seed[1]};
    t.arclength =
        parse_number(keys.require("arclength"), keys.line(), "arclength");
    if (t.arclength == 0.0)
      throw ScenarioError("arclength must be nonzero", keys.line());
    if (auto v = keys.take("step")) {
      t.step = parse_number(*v, keys.line(), "step");
      if (!(t.step > 0.0))
        throw ScenarioError("step must be positive", keys.line());
    }
    task.file = parse_task_file(keys);
    task.body = t;
  } else if (s.kind == "trace") {
    TraceTask t;
    auto at = parse_numbers(keys.require("at"), keys.line(), "at", 2);
    t.at = {at[0], at[1]};
    t.dir = parse_direction(keys.require("dir"), keys.line(), "dir");
    if (auto v = keys.take("sense")) {
      t.sense = parse_number(*v, keys.line(), "sense");
      if (t.sense != 1.0 && t.sense != -1.0)
        throw ScenarioError("sense must be 1 or -1", keys.line());
    }
    if (auto v = keys.take("t_max")) {
      t.t_max = parse_number(*v, keys.line(), "t_max");
      if (!(t.t_max > 0.0))
        throw ScenarioError("t_max must be positive", keys.line());
    }
    if (auto v = keys.take("samples")) {
      t.samples = static_cast<int>(parse_number(*v, keys.line(), "samples"));
      if (t.samples < 2)
        throw ScenarioError("samples must be at least 2", keys.line());
    }
    task.file = parse_task_file(keys);
    task.body = t;
  } else if (s.kind == "family") {
    FamilyTask t;
    auto at = parse_numbers(keys.require("at"), keys.line(), "at", 2);
    t.at = {at[0], at[1]};
    parse_family_params(keys, t.params);
    auto lo = keys.take("fit_lo"), hi = keys.take("fit_hi");
    if (lo.has_value() != hi.has_value())
      throw ScenarioError("fit_lo and fit_hi come together", keys.line());
    if (lo) {
      t.fit_lo = parse_number(*lo, keys.line(), "fit_lo");
      t.fit_hi = parse_number(*hi, keys.line(), "fit_hi");
      if (!(t.fit_lo > 0.0) || !(t.fit_hi > t.fit_lo))
        throw ScenarioError("need 0 < fit_lo < fit_hi", keys.line());
    }
    task.file = parse_task_file(keys);
    task.body = t;
  } else if (s.kind == "portrait") {
    PortraitTask t;
    if (auto v = keys.take("family")) {
      auto at = parse_numbers(*v, keys.line(), "family", 2);
      t.family_at = Point{at[0], at[1]};
    }
    parse_family_params(keys, t.params);
    if (auto v = keys.take("t_max")) {
      t.t_max = parse_number(*v, keys.line(), "t_max");
      if (!(t.t_max > 0.0))
        throw ScenarioError("t_max must be positive", keys.line());
    }
    for (const auto& kv : keys.take_all("launch")) {
      auto toks = split_ws(kv.value);
      if (toks.size() != 4)
        throw ScenarioError("launch needs: x y dir sense", kv.line);
      PortraitLaunch l;
      l.at = {parse_number(toks[0], kv.line, "launch"),
              parse_number(toks[1], kv.line, "launch")};
      l.dir = parse_direction(toks[2], kv.line, "launch");
      l.sense = parse_number(toks[3], kv.line, "launch");
      if (l.sense != 1.0 && l.sense != -1.0)
        throw ScenarioError("launch sense must be 1 or -1", kv.line);
      t.launches.push_back(l);
    }
    for (const auto& kv : keys.take_all("curve")) {
      auto nums = parse_numbers(kv.value, kv.line, "curve", 4);
      if (nums[2] == 0.0 || !(nums[3] > 0.0))
        throw ScenarioError("curve needs: x y arclength step", kv.line);
      t.curves.push_back({{nums[0], nums[1]}, nums[2], nums[3]});
    }
    if (!t.family_at && t.launches.empty() && t.curves.empty())
      throw ScenarioError("portrait task draws nothing", s.line);
    task.file = parse_task_file(keys);
    task.body = t;
  } else if (s.kind == "verify") {
    VerifyTask t;
    t.suite = keys.require("suite");
    const auto& names = verify_suites();
    if (std::find(names.begin(), names.end(), t.suite) == names.end())
      throw ScenarioError("unknown suite '" + t.suite + "'", keys.line());
    task.file = parse_task_file(keys);
    task.body = t;
  } else {
    throw ScenarioError("unknown task kind '" + s.kind + "'", s.line);
  }
  keys.finish();
  return task;
}

}  // namespace

Metric Scenario::build_metric() const {
  if (form11) return Metric::form11(parse_expression(omega), eps);
  return Metric(parse_expression(a), parse_expression(b), parse_expression(c));
}

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  bool saw_metric = false, saw_region = false, saw_tol = false,
       saw_output = false;
  for (const auto& s : split_sections(text)) {
    if (s.name == "metric") {
      if (saw_metric) throw ScenarioError("second [metric] section", s.line);
      saw_metric = true;
      parse_metric_section(s, sc);
    } else if (s.name == "region") {
      if (saw_region) throw ScenarioError("second [region] section", s.line);
      saw_region = true;
      parse_region_section(s, sc);
    } else if (s.name == "tolerances") {
      if (saw_tol) throw ScenarioError("second [tolerances] section", s.line);
      saw_tol = true;
      parse_tolerances_section(s, sc);
    } else if (s.name == "output") {
      if (saw_output) throw ScenarioError("second [output] section", s.line);
      saw_output = true;
      Keys keys(s);
      sc.out_dir = keys.require("dir");
      keys.finish();
    } else if (s.name == "task") {
      sc.tasks.push_back(parse_task_section(s));
    } else {
      throw ScenarioError("unknown section [" + s.name + "]", s.line);
    }
  }
  if (!saw_metric) throw ScenarioError("no [metric] section", 0);
  if (!saw_region) throw ScenarioError("no [region] section", 0);
  if (sc.tasks.empty()) throw ScenarioError("no tasks", 0);
  std::set<std::string> files;
  for (const auto& t : sc.tasks)
    if (!files.insert(t.file).second)
      throw ScenarioError("two tasks write '" + t.file + "'", t.line);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ScenarioError(e.what(), 0);
  }
  return parse_scenario(text);
}

Metric load_metric(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ScenarioError(e.what(), 0);
  }
  Scenario sc;
  bool saw_metric = false;
  for (const auto& s : split_sections(text)) {
    if (s.name != "metric") continue;
    if (saw_metric) throw ScenarioError("second [metric] section", s.line);
    saw_metric = true;
    parse_metric_section(s, sc);
  }
  if (!saw_metric) throw ScenarioError("no [metric] section", 0);
  return sc.build_metric();
}

namespace {

struct TaskResult {
  std::string content;
  bool ok = true;
  std::string detail;
};

TaskResult run_classify_curve(const Metric& m, const Scenario& sc,
                              const ClassifyCurveTask& t,
                              const RunOptions& opt) {
  DiscriminantTraceOptions dopt;
  dopt.arclength = t.arclength;
  dopt.step = t.step;
  auto points = trace_discriminant(m, t.seed, dopt);
  auto rows = classify_batch(m, points, sc.tol, opt.policy);
  TaskResult r;
  r.content = classification_csv(rows);
  r.detail = std::to_string(rows.size()) + " points";
  return r;
}

TaskResult run_trace(const Metric& m, const Scenario& sc, const TraceTask& t) {
  IntegratorConfig cfg;
  cfg.sense = t.sense;
  cfg.t_max = t.t_max;
  cfg.bounds = sc.region;
  cfg.sample_dt = 0.0;
  for (int i = 1; i < t.samples; ++i)
    cfg.sample_times.push_back(t.t_max * i / (t.samples - 1));
  auto g = trace_geodesic(m, t.at, t.dir, t.sense, cfg);
  TaskResult r;
  r.content = trace_csv(g);
  r.detail = std::to_string(g.parent.samples.size()) + " samples, " +
             to_string(g.parent.stop);
  return r;
}

TaskResult run_family(const Metric& m, const FamilyTask& t) {
  auto fam = launch_family(m, t.at, t.params);
  auto manifest = family_manifest(fam, t.params.delta, t.fit_lo, t.fit_hi);
  TaskResult r;
  r.content = family_csv(manifest);
  r.detail = std::to_string(fam.size()) + " members";
  return r;
}

TaskResult run_portrait(const Metric& m, const Scenario& sc,
                        const PortraitTask& t) {
  PortraitBuilder svg(sc.region);
  for (const auto& c : t.curves) {
    DiscriminantTraceOptions dopt;
    dopt.arclength = c.arclength;
    dopt.step = c.step;
    svg.add_discriminant(trace_discriminant(m, c.seed, dopt));
  }
  if (t.family_at)
    for (const auto& g : launch_family(m, *t.family_at, t.params))
      svg.add_trace(g);
  for (const auto& l : t.launches) {
    IntegratorConfig cfg;
    cfg.sense = l.sense;
    cfg.t_max = t.t_max;
    cfg.bounds = sc.region;
    cfg.sample_dt = t.t_max / 400.0;
    cfg.sample_dx = (sc.region.xhi - sc.region.xlo) / 600.0;
    svg.add_trace(trace_geodesic(m, l.at, l.dir, l.sense, cfg));
  }
  svg.add_legend();
  TaskResult r;
  r.content = svg.str();
  r.detail = std::to_string(svg.trace_count()) + " traces";
  return r;
}

TaskResult run_verify(const VerifyTask& t, const RunOptions& opt) {
  auto results = run_suite(t.suite, opt.seed);
  TaskResult r;
  r.content = format_report(results);
  std::size_t passed = 0;
  for (const auto& c : results) passed += c.pass ? 1 : 0;
  r.ok = passed == results.size();
  r.detail = std::to_string(passed) + "/" + std::to_string(results.size()) +
             " checks passed";
  return r;
}

}  // namespace

RunReport run_scenario(const Scenario& sc, const RunOptions& opt) {
  Metric m = sc.build_metric();
  std::string dir = !opt.out_dir.empty()
                        ? opt.out_dir
                        : (!sc.out_dir.empty() ? sc.out_dir : ".");
  RunReport rep;
  for (const auto& task : sc.tasks) {
    TaskOutcome oc;
    oc.kind = task.kind;
    oc.file = task.file;
    try {
      TaskResult res;
      if (auto* t = std::get_if<ClassifyCurveTask>(&task.body))
        res = run_classify_curve(m, sc, *t, opt);
      else if (auto* t = std::get_if<TraceTask>(&task.body))
        res = run_trace(m, sc, *t);
      else if (auto* t = std::get_if<FamilyTask>(&task.body))
        res = run_family(m, *t);
      else if (auto* t = std::get_if<PortraitTask>(&task.body))
        res = run_portrait(m, sc, *t);
      else
        res = run_verify(std::get<VerifyTask>(task.body), opt);
      write_text_atomic(dir + "/" + task.file, res.content);
      rep.artifacts.push_back(dir + "/" + task.file);
      oc.ok = res.ok;
      oc.detail = res.detail;
    } catch (const std::exception& e) {
      oc.ok = false;
      oc.detail = e.what();
    }
    rep.outcomes.push_back(std::move(oc));
  }
  for (const auto& oc : rep.outcomes)
    if (!oc.ok) rep.exit_code = 3;
  return rep;
}

}  // namespace sigflow
