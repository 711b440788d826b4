#pragma once

// Geodesic families launched from classified discriminant points, the
// least-squares fits that measure their asymptotic shape, and the invariant
// first-integral surface check used by the normal-form machinery.
//
// Launch recipes per class (q the classified point, delta the planar offset):
//   Z        seeds x = qx +- delta on the parabolic members
//            y = qy + x^2/4 + leaf x^4, p = x/2 + 4 leaf x^3 (coordinates
//            relative to q, metric presented in the flat normal form).
//   C1/C2/C3 isotropic members seeded on {F = 0} at distance delta on the
//            Lorentzian side, leaf = tangential offset in delta^(3/2) units;
//            each simple non-isotropic root of the direction cubic adds one
//            two-sided crossing member assembled from paired launches along
//            the transverse eigenvector.
//   Ds       generic members on the unstable fan: x = qx +- delta,
//            p = e1 x, u = 1 + leaf |p|^(1/e1); the isotropic separatrix
//            pair sits on p = e2 x, u = 1  (e1 > 0 > e2 the restricted
//            spectrum; form (y - eps x^2)-quadratic metrics only).
//   Dn/Df    seeds on a circle of radius delta in the (x, p) plane, leaves
//            u = 1 + leaf with leaf the transverse offset at the seed (it
//            grows ~ r^(1/Re e1) with the in-leaf radius r when traced
//            outward, hence the tiny class defaults); Dn adds the
//            exceptional pair seeded on the weak eigendirection p = e2 x
//            and traced inward, where convergence onto the weak manifold
//            scrubs the seeding error.
//
// Members are integrated away from q (inward for the Dn exceptional pair)
// until they leave the box q +- range. Each member's census drops samples
// within 2 delta of q and uses the family isotropy band 1e-8.

#include <array>
#include <cstdint>
#include <vector>

#include "sigflow/flow.hpp"

namespace sigflow {

enum class FitModel { PowerExponent, QuadraticPlusQuartic, QuadraticCoefficient };

const char* to_string(FitModel f);

struct FitResult {
  FitModel model = FitModel::PowerExponent;
  double value = 0.0;      // exponent, quartic coefficient, or k of y = k x^2
  double std_error = 0.0;
  double intercept = 0.0;  // log-log intercept (power fits only)
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual_rms = 0.0;
  long n = 0;
};

struct FamilyParams {
  // Tight integrator defaults: isotropic members must hold |F| <= 1e-8 over
  // spans of order the box size, and drift scales with the local error.
  FamilyParams() {
    integrator.rtol = 1e-12;
    integrator.atol = 1e-16;
  }

  double delta = 1e-3;   // planar launch offset from q
  double range = 1.2;    // stop when leaving the box q +- range
  std::vector<double> leaves;   // leaf grid; empty -> class default
  std::vector<double> phases;   // Dn/Df circle angles (radians); empty -> default
  // Template for member integrations; sense/stops/cadence set per member.
  IntegratorConfig integrator;
};

// Classifies q and launches the outgoing family. Throws std::invalid_argument
// for NonGeneric points (diagnostics included), for D-class launches on
// metrics without the quadratic-discriminant form, and for seeds that fall
// outside the integrable region.
std::vector<GeodesicTrace> launch_family(const Metric& m, const Point& q,
                                         const FamilyParams& params = {});

// Log-log slope of |second| against |first| over first in [lo, hi].
// Throws when fewer than 20 samples land in the window.
FitResult fit_power_law(const std::vector<std::array<double, 2>>& samples,
                        double lo, double hi);

// Power law |y - y*| ~ |x - x*|^value with (x*, y*) the trace sample nearest
// the member's base point.
FitResult fit_exponent(const GeodesicTrace& g, double lo, double hi);

// Least squares for y - qy - (x - qx)^2/4 = value * (x - qx)^4 over
// |x - qx| in [delta, 10 delta]; the flat-normal-form deviation fit.
FitResult fit_quartic_deviation(const GeodesicTrace& g, double delta);

// Least squares for y - qy = value * (x - qx)^2 over |x - qx| in [lo, hi].
FitResult fit_quadratic_coefficient(const GeodesicTrace& g, double lo,
                                    double hi);

struct MemberCensus {
  std::size_t member = 0;  // index into the family vector
  CausalCensus counts;
  CausalType majority = CausalType::Isotropic;
};

// Per-member causal census, band 1e-8, samples within 2 delta of the base
// point excluded.
std::vector<MemberCensus> causal_census(const std::vector<GeodesicTrace>& family,
                                        double delta);

// Max |directional derivative of G along the linear field| / (|grad||field|)
// over pseudo-random points of the invariant surface
//   G = c1 |s1|^(l3/l1) + c2 |s2|^(l3/l2) + c3 s3 = 0
// for the field (l1 s1, l2 s2, l3 s3). The c3 = 0 surface needs opposite
// signs on c1, c2; throws when no surface points exist.
double power_surface_defect(const std::array<double, 3>& lambda,
                            const std::array<double, 3>& c, int samples,
                            std::uint32_t seed);

// Complex-pair variant: field (al s1 + be s2, al s2 - be s1, s3) with
// invariant surface c1 (s1^2 + s2^2)^(1/(2 al)) + c3 s3 = 0.
double power_surface_defect_complex(double al, double be, double c1, double c3,
                                    int samples, std::uint32_t seed);

// Blow-up launches seeded near the exceptional plane u = 0 collapse into the
// base point's arrest zone instead of escaping: returns the max planar
// distance from the origin reached before u leaves [0, 1/2) or the budget
// runs out. Small return = no geodesic leaves q along the exceptional fiber.
double exceptional_plane_escape(const Metric& m, double p0, double u0,
                                double t_budget);

// Largest |dx/dt| a straight horizontal-line solution y = y0 can carry while
// keeping the second extremal-equation residual below residual_tol at every
// grid point of [x_lo, x_hi] (metrics with b = 0 along the line; throws
// otherwise). a_y = 0 anywhere on the line returns +infinity.
double line_restriction_bound(const Metric& m, double y0, double x_lo,
                              double x_hi, double residual_tol);

}  // namespace sigflow
