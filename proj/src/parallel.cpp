#include "sigflow/parallel.hpp"

#include <exception>

namespace sigflow {

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace {

// Runs fn(i) for i in [0, n), parallel when requested and compiled in.
// Exceptions are parked per item and the first one rethrown at the end, so
// a bad item cannot terminate() a worker thread.
template <class Fn>
void sweep(std::size_t n, bool parallel, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#ifdef _OPENMP
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
  }
#else
  (void)parallel;
#endif
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<PointClassification> classify_batch_serial(
    const Metric& m, const std::vector<Point>& points, const Tolerances& tol) {
  std::vector<PointClassification> out(points.size());
  sweep(points.size(), false, [&](std::size_t i) {
    out[i] = classify(m, points[i], tol);
  });
  return out;
}

std::vector<PointClassification> classify_batch(const Metric& m,
                                                const std::vector<Point>& points,
                                                const Tolerances& tol,
                                                ExecPolicy policy) {
  std::vector<PointClassification> out(points.size());
  sweep(points.size(), policy.parallel, [&](std::size_t i) {
    out[i] = classify(m, points[i], tol);
  });
  return out;
}

std::vector<GeodesicTrace> trace_batch_serial(
    const Metric& m, const std::vector<TraceRequest>& requests) {
  std::vector<GeodesicTrace> out(requests.size());
  sweep(requests.size(), false, [&](std::size_t i) {
    const auto& r = requests[i];
    out[i] = trace_geodesic(m, r.q, r.dir, r.sense, r.cfg);
  });
  return out;
}

std::vector<GeodesicTrace> trace_batch(const Metric& m,
                                       const std::vector<TraceRequest>& requests,
                                       ExecPolicy policy) {
  std::vector<GeodesicTrace> out(requests.size());
  sweep(requests.size(), policy.parallel, [&](std::size_t i) {
    const auto& r = requests[i];
    out[i] = trace_geodesic(m, r.q, r.dir, r.sense, r.cfg);
  });
  return out;
}

}  // namespace sigflow
