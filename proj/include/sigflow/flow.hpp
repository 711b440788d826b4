#pragma once

// Lifted geodesic fields on the projectivized tangent bundle, the tangential
// blow-up, the natural-parametrization (action-extremal) system, and an
// adaptive embedded Runge-Kutta integrator with projective chart switching.
//
// Slope charts: a direction is stored as w = p (affine, dy/dx) or w = q = 1/p
// (inverted). The integrator switches charts when the active coordinate
// leaves its comfort zone (|p| > threshold, resp. |q| > 1/threshold), keeping
// the underlying projective element fixed. The lifted field picks up a scalar
// rescale under the switch, so the trace parameter is the flow parameter of
// the active chart's field, concatenated monotonically.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sigflow/metric.hpp"
#include "sigflow/singular.hpp"

namespace sigflow {

enum class SlopeChart { Affine, Inverted };

const char* to_string(SlopeChart c);

struct LiftedState {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;  // slope p (Affine) or inverse slope q = 1/p (Inverted)
  SlopeChart chart = SlopeChart::Affine;

  Direction direction() const;
  // Chart choice: affine while |p| <= threshold, inverted otherwise.
  static LiftedState make(double x, double y, const Direction& d,
                          double threshold = 1.0);
};

// Velocity of the isotropic direction field, tangent to {F = 0}:
// affine (F/2 normalization) (1/2 F_p, p/2 F_p, -1/2 (F_x + p F_y));
// inverted chart uses G(x,y,s) = a s^2 + 2 b s + c with s = q.
std::array<double, 3> field_isotropic(const Metric& m, const LiftedState& s);

// Velocity of the lifted geodesic field: affine (2*Delta, 2p*Delta, M(p));
// inverted chart is the q-rescaled transform (2q*Delta, 2*Delta, -q^3 M(1/q)).
std::array<double, 3> field_lifted(const Metric& m, const LiftedState& s);

// Tangential blow-up y = eps x^2 + u p^2 for metrics in normal form (11).
struct BlowUpState {
  double x = 0.0;
  double p = 0.0;
  double u = 0.0;
};

// Requires m.has_form11(); throws std::invalid_argument when |p| is too small
// to divide by (the exceptional plane p = 0).
BlowUpState blowup(const Metric& m, double x, double y, double p);

// Exact inverse; returns (x, y, p).
std::array<double, 3> blowdown(const Metric& m, const BlowUpState& s);

// Field (2*omega*u*p, p*M1 - 2*eps*x*omega, (u-1)*2u*N1) with
// M1 = p(u p w_y + w_x)(1-u) + w(2-u), N1 = u p^2 w_y + p w_x + w,
// omega and partials evaluated at (x, eps x^2 + u p^2). Requires form (11).
std::array<double, 3> field_blowup(const Metric& m, const BlowUpState& s);

struct Box {
  double xlo = -1e300, xhi = 1e300;
  double ylo = -1e300, yhi = 1e300;
  bool contains(double x, double y) const {
    return x >= xlo && x <= xhi && y >= ylo && y <= yhi;
  }
};

struct IntegratorConfig {
  double rtol = 1e-9;
  double atol = 1e-12;
  double t_max = 1e4;    // parameter budget (always integrated forward)
  double h_init = 0.0;   // 0: automatic
  double h_max = 0.0;    // 0: t_max / 10
  long max_steps = 2000000;
  double sample_dt = 0.01;           // uniform output grid; <= 0: events only
  std::vector<double> sample_times;  // overrides the uniform grid if nonempty
  double sample_dx = 0.0;  // extra samples every |dx| of planar x (0: off)
  double switch_threshold = 1.0;     // affine chart comfort zone |p| <= this
  double arrest_band = 1e-10;        // stop when ||velocity|| drops below
  double sense = 1.0;                // +1 along the field, -1 against it
  std::optional<Box> bounds;         // stop on leaving the region
  // Stop at a zero crossing of this function (bisected to full precision).
  std::function<double(double, const LiftedState&)> stop_event;
  // Stop at the first accepted step end where this returns true.
  std::function<bool(double, const LiftedState&)> stop;
};

enum class StopReason {
  ParameterBudget,
  MaxSteps,
  StepUnderflow,
  Arrest,
  LeftRegion,
  StopEvent,
  StopPredicate,
};

const char* to_string(StopReason r);

enum class EventKind { ChartSwitch, DiscriminantCross, Arrest };

const char* to_string(EventKind k);

struct TraceEvent {
  EventKind kind = EventKind::ChartSwitch;
  double t = 0.0;
  LiftedState state;
  std::string note;
};

struct TraceSample {
  double t = 0.0;
  double x = 0.0, y = 0.0, w = 0.0;
  SlopeChart chart = SlopeChart::Affine;
  double Delta = 0.0;
  double F = 0.0;
  CausalType causal = CausalType::Isotropic;
  int event = -1;  // index into Trace::events, -1 for plain samples
};

struct Trace {
  std::vector<TraceSample> samples;
  std::vector<TraceEvent> events;
  StopReason stop = StopReason::ParameterBudget;
  double t_end = 0.0;
  LiftedState last;
  long steps = 0;
  std::string note;  // diagnostics for StepUnderflow etc.
};

Trace integrate_lifted(const Metric& m, const LiftedState& s0,
                       const IntegratorConfig& cfg = {});
Trace integrate_isotropic(const Metric& m, const LiftedState& s0,
                          const IntegratorConfig& cfg = {});

struct BlowUpConfig {
  double rtol = 1e-9;
  double atol = 1e-12;
  double t_max = 1e4;
  double h_init = 0.0;
  double h_max = 0.0;
  long max_steps = 2000000;
  double sample_dt = 0.01;
  double sense = 1.0;
  double arrest_band = 1e-10;
  double stop_radius = 0.0;  // stop when hypot(x, p) >= this (0: off)
  std::function<bool(double, const BlowUpState&)> stop;
};

struct BlowUpSample {
  double t = 0.0;
  double x = 0.0, p = 0.0, u = 0.0;
  double theta = 0.0;  // unwound polar angle of (x, p)
};

struct BlowUpTrace {
  std::vector<BlowUpSample> samples;
  StopReason stop = StopReason::ParameterBudget;
  double t_end = 0.0;
  BlowUpState last;
  long steps = 0;
  double winding = 0.0;  // net (x, p) turns, signed
};

BlowUpTrace integrate_blowup(const Metric& m, const BlowUpState& s0,
                             const BlowUpConfig& cfg = {});

// Natural parametrization: extremals of the action functional.
struct NaturalState {
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0;
};

// Solves [[a,b],[b,c]] (xdd, ydd) = (R1/2, R2/2) with
// R1 = (c_x - 2 b_y) vy^2 - 2 a_y vx vy - a_x vx^2,
// R2 = (a_y - 2 b_x) vx^2 - 2 c_x vx vy - c_y vy^2.
// No degeneracy guard here; el_integrate owns the discriminant floor.
std::array<double, 4> el_field(const Metric& m, const NaturalState& s);

struct NaturalConfig {
  double rtol = 1e-9;
  double atol = 1e-12;
  double t_max = 1.0;
  double h_init = 0.0;
  double h_max = 0.0;
  long max_steps = 2000000;
  double sample_dt = 0.0;
  std::vector<double> sample_times;
  double sense = 1.0;
  double delta_floor = 1e-10;  // |Delta| arrest band (relative to coeff scale)
  std::function<bool(double, const NaturalState&)> stop;
};

struct NaturalSample {
  double t = 0.0;
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0;
  double Delta = 0.0;
};

struct NaturalTrace {
  std::vector<NaturalSample> samples;
  StopReason stop = StopReason::ParameterBudget;
  double t_end = 0.0;
  NaturalState last;
  long steps = 0;
  std::string note;
};

NaturalTrace el_integrate(const Metric& m, const NaturalState& s0,
                          const NaturalConfig& cfg = {});

struct CausalCensus {
  long timelike = 0;
  long spacelike = 0;
  long isotropic = 0;
  CausalType majority() const;
  long total() const { return timelike + spacelike + isotropic; }
};

// A geodesic as seen in the plane: projection of a lifted trace plus the
// family bookkeeping used by launch_family and the portrait tasks.
struct GeodesicTrace {
  std::vector<Point> planar;
  Trace parent;
  Point base{0.0, 0.0};         // launch point (family members: the singular point)
  std::optional<double> leaf;   // one-parameter family coordinate
  std::optional<double> phase;  // second coordinate for node/focus families
  CausalCensus census;
  SingularClass origin = SingularClass::NonGeneric;
  bool has_origin = false;  // true when launched from a classified point
  std::string label;
};

// Integrates field_lifted from a regular point of the lifted field and
// projects. Throws std::invalid_argument when (q0, dir) is a singular point
// of the lifted field (those launches belong to the families module).
GeodesicTrace trace_geodesic(const Metric& m, const Point& q0,
                             const Direction& dir, double sense,
                             const IntegratorConfig& cfg = {});

}  // namespace sigflow
