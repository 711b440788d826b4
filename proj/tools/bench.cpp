// Compares the parallel batch sweeps against the serial reference: same
// inputs, timed, results byte-compared through the CSV emitters. The
// parallel path must be bit-identical; speedup is informational (on a
// single-core build or without OpenMP it hovers around 1.0).

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sigflow/io.hpp"
#include "sigflow/parallel.hpp"

using namespace sigflow;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel sweep benchmark"};
  int n_points = 400;
  int n_traces = 200;
  app.add_option("--points", n_points, "classification sweep size");
  app.add_option("--traces", n_traces, "trace batch size");
  CLI11_PARSE(app, argc, argv);

  std::printf("openmp: %s\n", openmp_enabled() ? "yes" : "no");

  // Classification sweep along the parabolic discriminant line of
  // ds^2 = dy^2 - y dx^2 (every point classifies as Z).
  Metric m(parse_expression("-y"), parse_expression("0"),
           parse_expression("1"));
  std::vector<Point> points;
  points.reserve(n_points);
  for (int i = 0; i < n_points; ++i)
    points.push_back({-1.0 + 2.0 * i / (n_points - 1.0), 0.0});

  auto t0 = Clock::now();
  auto serial = classify_batch_serial(m, points);
  double ts = seconds_since(t0);
  t0 = Clock::now();
  auto parallel = classify_batch(m, points, {}, {true});
  double tp = seconds_since(t0);
  bool same = classification_csv(serial) == classification_csv(parallel);
  std::printf("classify %5d points: serial %.3fs parallel %.3fs (x%.2f) %s\n",
              n_points, ts, tp, tp > 0.0 ? ts / tp : 0.0,
              same ? "identical" : "MISMATCH");

  // Trace batch: geodesics crossing the curve from the Lorentzian side.
  std::vector<TraceRequest> reqs;
  reqs.reserve(n_traces);
  for (int i = 0; i < n_traces; ++i) {
    TraceRequest r;
    r.q = {-0.8 + 1.6 * i / (n_traces - 1.0), 0.5};
    r.dir = Direction::affine(-0.4 + 0.8 * i / (n_traces - 1.0));
    r.sense = -1.0;
    r.cfg.t_max = 3.0;
    r.cfg.bounds = Box{-2.0, 2.0, -1.0, 1.5};
    reqs.push_back(r);
  }
  t0 = Clock::now();
  auto gs = trace_batch_serial(m, reqs);
  ts = seconds_since(t0);
  t0 = Clock::now();
  auto gp = trace_batch(m, reqs, {true});
  tp = seconds_since(t0);
  bool tsame = gs.size() == gp.size();
  for (std::size_t i = 0; tsame && i < gs.size(); ++i)
    tsame = trace_csv(gs[i]) == trace_csv(gp[i]);
  std::printf("trace    %5d launches: serial %.3fs parallel %.3fs (x%.2f) %s\n",
              n_traces, ts, tp, tp > 0.0 ? ts / tp : 0.0,
              tsame ? "identical" : "MISMATCH");

  return same && tsame ? 0 : 1;
}
