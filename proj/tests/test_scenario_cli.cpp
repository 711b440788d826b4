#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sigflow/io.hpp"
#include "sigflow/scenario.hpp"
#include "sigflow/svg.hpp"
#include "sigflow/verify.hpp"

using namespace sigflow;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("sigflow-test-" + std::to_string(rd()) + "-" +
            std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

const char* kE1Header =
    "[metric]\n"
    "a = -y\n"
    "b = 0\n"
    "c = 1\n"
    "\n"
    "[region]\n"
    "x = -1.5 1.5\n"
    "y = -1 1.5\n"
    "\n";

}  // namespace

TEST_CASE("scenario parser rejects bad input with line numbers") {
  auto fails_with = [](const std::string& text, const char* fragment) {
    try {
      parse_scenario(text);
      FAIL_CHECK("no error for: ", fragment);
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };

  fails_with("[region]\nx = 0 1\ny = 0 1\n[task trace]\nat = 0 0\ndir = 0\n"
             "file = t.csv\n",
             "no [metric]");
  fails_with(std::string(kE1Header), "no tasks");
  fails_with("[metric]\na = -y +\nb = 0\nc = 1\n", "offset");
  fails_with("[metric]\na = -y\nb = 0\n", "all three");
  fails_with("[metric]\nomega = -1\n", "both omega and eps");
  fails_with("[metric]\na = -y\nomega = -1\nb = 0\nc = 1\neps = 1\n", "mixes");
  fails_with(std::string(kE1Header) + "[task warp]\nfile = w.csv\n",
             "unknown task kind");
  fails_with(std::string(kE1Header) + "[task trace]\nat = 0 0.5\ndir = 0\n"
             "file = t.csv\nwhat = 3\n",
             "unknown key 'what'");
  fails_with(std::string(kE1Header) + "[task trace]\nat = 0 0.5\ndir = 0\n"
             "file = ../t.csv\n",
             "plain relative name");
  fails_with(std::string(kE1Header) +
             "[task trace]\nat = 0 0.5\ndir = 0\nfile = t.csv\n"
             "[task trace]\nat = 0 0.6\ndir = 0\nfile = t.csv\n",
             "two tasks write");
  fails_with("[metric]\na = -y\nb = 0\nc = 1\n[region]\nx = 1 -1\ny = 0 1\n"
             "[task trace]\nat = 0 0.5\ndir = 0\nfile = t.csv\n",
             "lo < hi");
  fails_with(std::string(kE1Header) +
             "[task family]\nat = 0 0\nfit_lo = 1e-3\nfile = f.csv\n",
             "come together");
  fails_with(std::string(kE1Header) + "[task verify]\nsuite = bogus\n"
             "file = r.txt\n",
             "unknown suite");
  fails_with(std::string(kE1Header) + "[task portrait]\nfile = p.svg\n",
             "draws nothing");

  // the line number points at the offending line
  try {
    parse_scenario("[metric]\na = -y\nb = 0\nc = 1 +\n");
    FAIL_CHECK("no error");
  } catch (const ScenarioError& e) {
    CHECK(e.line == 4);
  }
}

TEST_CASE("tolerance section and overrides reach the classifier") {
  Scenario sc = parse_scenario(std::string(kE1Header) +
                               "[tolerances]\niso = 1e-7\n"
                               "eigen_zero = 2e-5\n"
                               "[task trace]\nat = 0 0.5\ndir = 0\n"
                               "file = t.csv\n");
  CHECK(sc.tol.iso == 1e-7);
  CHECK(sc.tol.eigen_zero == 2e-5);
  CHECK(sc.tol.on_discriminant == 1e-9);  // untouched default
}

TEST_CASE("classify-curve task: constant curvature column on the model line") {
  TempDir dir;
  Scenario sc = parse_scenario(std::string(kE1Header) +
                               "[task classify-curve]\nseed = -1 0\n"
                               "arclength = 2\nstep = 0.1\n"
                               "file = curve.csv\n");
  RunOptions opt;
  opt.out_dir = dir.str();
  RunReport rep = run_scenario(sc, opt);
  REQUIRE(rep.exit_code == 0);
  REQUIRE(rep.artifacts.size() == 1);

  auto lines = split(read_text(rep.artifacts[0]), '\n');
  REQUIRE(lines.size() >= 22);  // header + 21 points + trailing empty
  CHECK(lines[0] ==
        "x,y,class,K1,tangency,directions,lambda1,lambda2,"
        "eps1_re,eps1_im,eps2_re,eps2_im,diagnostics");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split(lines[i], ',');
    REQUIRE(cols.size() == 13);
    CHECK(cols[2] == "Z");
    CHECK(cols[3] == "0.25");
  }
}

TEST_CASE("trace task: sample count and byte-identical reruns") {
  TempDir a, b;
  Scenario sc = parse_scenario(std::string(kE1Header) +
                               "[task trace]\nat = -0.5 0.5\ndir = 0.1\n"
                               "sense = -1\nt_max = 2\nsamples = 100\n"
                               "file = trace.csv\n");
  RunOptions oa, ob;
  oa.out_dir = a.str();
  ob.out_dir = b.str();
  RunReport ra = run_scenario(sc, oa);
  RunReport rb = run_scenario(sc, ob);
  REQUIRE(ra.exit_code == 0);

  std::string ca = read_text(a.str() + "/trace.csv");
  std::string cb = read_text(b.str() + "/trace.csv");
  CHECK(ca == cb);

  auto lines = split(ca, '\n');
  REQUIRE(lines.back().empty());
  CHECK(lines.size() == 102);  // header + 100 samples + trailing newline
  CHECK(lines[0] == "t,x,y,p,chart,Delta,F,causal,event");
  // the slope column of an affine-chart sample parses back exactly
  auto cols = split(lines[1], ',');
  REQUIRE(cols.size() == 9);
  CHECK(cols[4] == "affine");
}

TEST_CASE("family task: manifest rows carry the asymptotic coefficients") {
  TempDir dir;
  Scenario sc = parse_scenario(
      "[metric]\nomega = -1\neps = -1\n\n"
      "[region]\nx = -0.6 0.6\ny = -0.5 0.5\n\n"
      "[task family]\nat = 0 0\nrange = 0.5\nfile = members.csv\n");
  RunOptions opt;
  opt.out_dir = dir.str();
  RunReport rep = run_scenario(sc, opt);
  REQUIRE(rep.exit_code == 0);

  auto lines = split(read_text(dir.str() + "/members.csv"), '\n');
  CHECK(lines[0] ==
        "member,label,leaf,phase,fit_model,fit_value,fit_std_error,fit_n,"
        "timelike,spacelike,isotropic,majority,stop");
  int rows = 0, separatrix = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    ++rows;
    auto cols = split(lines[i], ',');
    REQUIRE(cols.size() == 13);
    if (cols[1].find("separatrix") != std::string::npos) {
      ++separatrix;
      // the isotropic member's quadratic coefficient
      CHECK(std::abs(std::stod(cols[5]) - (-0.3904)) <= 1e-3);
      CHECK(cols[11] == "isotropic");
    }
  }
  CHECK(rows == 12);
  CHECK(separatrix == 2);
}

TEST_CASE("portrait task: styled SVG with legend") {
  TempDir dir;
  Scenario sc = parse_scenario(std::string(kE1Header) +
                               "[task portrait]\nfamily = 0 0\n"
                               "range = 1.15\ncurve = -1.15 0 2.3 0.02\n"
                               "launch = -0.5 0.8 0.3 1\n"
                               "file = portrait.svg\n");
  RunOptions opt;
  opt.out_dir = dir.str();
  RunReport rep = run_scenario(sc, opt);
  REQUIRE(rep.exit_code == 0);

  std::string svg = read_text(dir.str() + "/portrait.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("viewBox=\"0 0 900") != std::string::npos);
  auto count = [&](const char* needle) {
    int n = 0;
    std::string s(needle);
    for (auto at = svg.find(s); at != std::string::npos;
         at = svg.find(s, at + s.size()))
      ++n;
    return n;
  };
  CHECK(count("<g class=\"trace\">") == 7);  // 6 members + 1 launch
  CHECK(count("<g class=\"legend\">") == 1);
  CHECK(count("<g class=\"curve\">") == 1);
  CHECK(count("<polyline class=\"timelike\"") >= 1);
  CHECK(count("<polyline class=\"spacelike\"") >= 1);
  CHECK(count("<polyline class=\"isotropic\"") >= 1);
  CHECK(count("class=\"discriminant\"") >= 2);  // style row + legend + curve
  CHECK(count(">isotropic</text>") == 1);
}

TEST_CASE("verify task writes a report and fails the run on a failed check") {
  TempDir dir;
  Scenario sc = parse_scenario(std::string(kE1Header) +
                               "[task verify]\nsuite = identities\n"
                               "file = report.txt\n");
  RunOptions opt;
  opt.out_dir = dir.str();
  RunReport rep = run_scenario(sc, opt);
  CHECK(rep.exit_code == 0);
  std::string report = read_text(dir.str() + "/report.txt");
  CHECK(report.find("PASS identities/lifted-cubic-factorization") !=
        std::string::npos);
  CHECK(report.find("2/2 checks passed") != std::string::npos);
}

TEST_CASE("task isolation: a failing task leaves other artifacts intact") {
  TempDir dir;
  // the first launch point is the singular point itself: the task fails,
  // the second one still runs and writes
  Scenario sc = parse_scenario(std::string(kE1Header) +
                               "[task trace]\nat = 0 0\ndir = 0\n"
                               "file = bad.csv\n"
                               "[task classify-curve]\nseed = 0 0\n"
                               "arclength = 0.5\nstep = 0.1\n"
                               "file = good.csv\n");
  RunOptions opt;
  opt.out_dir = dir.str();
  RunReport rep = run_scenario(sc, opt);
  CHECK(rep.exit_code == 3);
  REQUIRE(rep.outcomes.size() == 2);
  CHECK_FALSE(rep.outcomes[0].ok);
  CHECK(rep.outcomes[0].detail.find("singular") != std::string::npos);
  CHECK(rep.outcomes[1].ok);
  CHECK_FALSE(fs::exists(dir.path / "bad.csv"));
  CHECK(fs::exists(dir.path / "good.csv"));
}

TEST_CASE("metric files load standalone or embedded in a scenario") {
  TempDir dir;
  write_text_atomic(dir.str() + "/only.metric", "[metric]\na = -y\nb = 0\nc = 1\n");
  Metric m1 = load_metric(dir.str() + "/only.metric");
  CHECK(discriminant(m1, {0.3, 0.0}) == 0.0);

  write_text_atomic(dir.str() + "/full.scn",
                    std::string(kE1Header) +
                        "[task trace]\nat = 0 0.5\ndir = 0\nfile = t.csv\n");
  Metric m2 = load_metric(dir.str() + "/full.scn");
  CHECK(discriminant(m2, {0.0, 0.25}) == -0.25);

  CHECK_THROWS_AS(load_metric(dir.str() + "/nope.metric"), ScenarioError);
}

TEST_CASE("shipped scenario files match the embedded figure set") {
  fs::path root(SIGFLOW_SCENARIO_DIR);
  for (const auto& fig : figure_scenarios()) {
    fs::path file = root / (fig.name + ".scn");
    REQUIRE_MESSAGE(fs::exists(file), file.string());
    CHECK(read_text(file.string()) == fig.text);
    // and each one parses to a single portrait task
    Scenario sc = parse_scenario(fig.text);
    REQUIRE(sc.tasks.size() == 1);
    CHECK(sc.tasks[0].kind == "portrait");
    CHECK(sc.out_dir == "out");
  }
}

TEST_CASE("atomic writes replace, never append, and create directories") {
  TempDir dir;
  std::string path = dir.str() + "/nested/deep/file.txt";
  write_text_atomic(path, "first version, long enough to notice\n");
  write_text_atomic(path, "second\n");
  CHECK(read_text(path) == "second\n");
  CHECK_FALSE(fs::exists(path + ".tmp"));
}

TEST_CASE("csv float formatting survives a round trip") {
  double values[] = {0.1, -0.39038820320226802, 1.0 / 3.0, 1e-300, 0.0, -0.0};
  for (double v : values) {
    std::string s = format_g17(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_g17(-0.0) == "0");
}
