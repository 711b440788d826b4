#pragma once

// Classification of singular points of the geodesic flow on the discriminant
// curve. The direction field lifted to the surface of admissible (direction,
// point) pairs degenerates over Delta = 0; its behaviour at a curve point q
// is governed by the cubic M(q, p), the curvature invariant K1 = Delta^2 K,
// and the tangency between the isotropic double root and the curve.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "sigflow/metric.hpp"

namespace sigflow {

// Cubic p-component of the lifted field at a fixed point: M = sum mu_i p^i.
struct CubicM {
  double mu[4] = {0, 0, 0, 0};

  double eval(double p) const {
    return ((mu[3] * p + mu[2]) * p + mu[1]) * p + mu[0];
  }
  double deriv(double p) const {
    return (3.0 * mu[3] * p + 2.0 * mu[2]) * p + mu[1];
  }
  // Inverse-slope chart: coefficients reverse and the sign flips.
  double eval_inverted(double s) const {
    return -(((mu[0] * s + mu[1]) * s + mu[2]) * s + mu[3]);
  }
  double deriv_inverted(double s) const {
    return -((3.0 * mu[0] * s + 2.0 * mu[1]) * s + mu[2]);
  }
  double scale() const;
};

CubicM cubic_M(const Metric& m, const Point& q);

// Roots of cubic_M over RP^1 with multiplicities, the isotropic double root
// deflated first, remaining quadratic solved stably. Roots closer than the
// merge band are combined. Sorted ascending, vertical root last.
std::vector<DirectionRoot> admissible_directions(const Metric& m, const Point& q,
                                                 const Tolerances& tol = {});

// Max relative residual of the on-curve identity
//   M(q,p) = (1/3) (p - p0) (2 (Delta_x + p Delta_y) + M_p(q,p))
// over the given slope samples. q must lie on the discriminant curve and the
// isotropic double root must be finite.
double check_factorization(const Metric& m, const Point& q,
                           const std::vector<double>& p_samples,
                           const Tolerances& tol = {});

struct LambdaPair {
  double l1 = 0.0;  // 2 (Delta_x + p Delta_y)
  double l2 = 0.0;  // M_p at the root
};

// Linearization eigenvalues of the lifted field at (q, d) transverse to the
// fibre direction (the third eigenvalue is identically zero and omitted).
LambdaPair lambda_spectrum(const Metric& m, const Point& q, const Direction& d);

struct SpectrumPair {
  std::complex<double> e1, e2;  // ordered: larger real part first, then +Im

  bool is_real(double band = 1e-9) const {
    return std::abs(e1.imag()) <= band && std::abs(e2.imag()) <= band;
  }
};

struct SpectrumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Eigenvalues of the direction field restricted to the isotropic surface at
// the tangential point (q, p0). Errors on transverse points. Computed by
// solving F = 0 for one coordinate and differencing the reduced planar field
// (central differences with one Richardson step).
SpectrumPair epsilon_spectrum(const Metric& m, const Point& q,
                              const Tolerances& tol = {});

enum class Tangency { Transverse, OrderOne, Identical, Higher };

const char* to_string(Tangency t);

// Transverse: the isotropic double root is transverse to the curve at q.
// Identical: tangent at every sampled point of the curve near q.
// OrderOne: tangent at q with both restricted eigenvalues nonzero.
// Higher: tangent at q only, with a degenerate restricted spectrum.
Tangency tangency_verdict(const Metric& m, const Point& q,
                          const Tolerances& tol = {});

enum class SingularClass { C1, C2, C3, Ds, Dn, Df, Z, NonGeneric };

const char* to_string(SingularClass c);

struct PointClassification {
  Point q;
  SingularClass cls = SingularClass::NonGeneric;
  double K1 = 0.0;
  Tangency tangency = Tangency::Higher;
  std::vector<DirectionRoot> directions;
  std::optional<LambdaPair> lambda_at_p0;
  std::optional<SpectrumPair> eps;
  std::string diagnostics;
};

// Full decision tree at a discriminant point with nonvanishing curve
// gradient. Degenerate or inconsistent data comes back NonGeneric with the
// reason in diagnostics; the function only throws if q is off the curve.
PointClassification classify(const Metric& m, const Point& q,
                             const Tolerances& tol = {});

struct ResonanceRelation {
  int s1 = 0, s2 = 0, s3 = 0;
  int target = 0;  // 0 -> e1, 1 -> e2, 2 -> the unit eigenvalue
  double residual = 0.0;
  bool real_part_only = false;
};

struct ResonanceReport {
  SpectrumPair spectrum;
  int order_bound = 0;
  double tol = 0.0;
  std::vector<ResonanceRelation> relations;
};

// Exhaustive scan of s1 e1 + s2 e2 + s3 = target over nonnegative integer
// triples with 1 <= s1+s2+s3 <= order_bound, identity relations excluded.
// For complex spectra, relations holding only in the real part are reported
// with the real_part_only flag.
ResonanceReport resonance_scan(const SpectrumPair& sp, int order_bound,
                               double tol = 1e-9);

}  // namespace sigflow
