#pragma once

// Batch fronts for the embarrassingly parallel sweeps: classifying many
// curve points and launching many independent geodesic traces. Each item is
// computed independently and written into its own slot with no reductions,
// so the parallel path is bit-identical to the serial reference kept here
// for testing; the benchmark tool compares the two.

#include <vector>

#include "sigflow/flow.hpp"
#include "sigflow/singular.hpp"

namespace sigflow {

struct ExecPolicy {
  bool parallel = true;  // ignored when compiled without OpenMP
};

// True when the library was compiled with OpenMP support.
bool openmp_enabled();

std::vector<PointClassification> classify_batch_serial(
    const Metric& m, const std::vector<Point>& points,
    const Tolerances& tol = {});

// First exception raised by any item is rethrown after the sweep finishes.
std::vector<PointClassification> classify_batch(const Metric& m,
                                                const std::vector<Point>& points,
                                                const Tolerances& tol = {},
                                                ExecPolicy policy = {});

struct TraceRequest {
  Point q;
  Direction dir;
  double sense = 1.0;
  IntegratorConfig cfg;
};

std::vector<GeodesicTrace> trace_batch_serial(
    const Metric& m, const std::vector<TraceRequest>& requests);

std::vector<GeodesicTrace> trace_batch(const Metric& m,
                                       const std::vector<TraceRequest>& requests,
                                       ExecPolicy policy = {});

}  // namespace sigflow
