#pragma once

// Signature-changing metric ds^2 = a dx^2 + 2b dxdy + c dy^2 on a plane domain,
// its discriminant Delta = ac - b^2, and pointwise causal structure.
//
// Directions through a point are elements of RP^1: either an affine slope
// p = dy/dx or the vertical direction (tag Infinity). The quadratic
// F(x,y,p) = c p^2 + 2 b p + a is ds^2 along slope p per unit dx^2; its sign
// is the causal type (timelike > 0, spacelike < 0, isotropic = 0).

#include <optional>
#include <stdexcept>
#include <vector>

#include "sigflow/expr.hpp"

namespace sigflow {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class DirChart { Affine, Infinity };

struct Direction {
  DirChart tag = DirChart::Affine;
  double p = 0.0;  // slope dy/dx; meaningless when tag == Infinity

  static Direction affine(double p) { return {DirChart::Affine, p}; }
  static Direction infinity() { return {DirChart::Infinity, 0.0}; }
  bool is_infinite() const { return tag == DirChart::Infinity; }
};

// Distance on RP^1 measured in whichever chart holds both directions with
// coordinate magnitude <= 1 (slope chart near 0, inverse-slope chart near
// infinity). Directions living in disjoint chart regions are far apart.
double direction_distance(const Direction& u, const Direction& v);

enum class CausalType { Timelike, Spacelike, Isotropic };

const char* to_string(CausalType t);

struct DirectionRoot {
  Direction dir;
  int multiplicity = 1;
};

// One metric coefficient with its partials through order two, all exact.
struct CoeffDerivs {
  ExprPtr f, fx, fy, fxx, fxy, fyy;

  explicit CoeffDerivs(ExprPtr e);
  CoeffDerivs() = default;
};

class Metric {
 public:
  Metric(ExprPtr a, ExprPtr b, ExprPtr c);

  // ds^2 = omega * ((y - eps x^2) dx^2 - dy^2), the local model of a
  // tangential discriminant point; omega(0,0) must be negative for the
  // Lorentzian domain to be y > eps x^2.
  static Metric form11(ExprPtr omega, double eps);

  const CoeffDerivs& a() const { return a_; }
  const CoeffDerivs& b() const { return b_; }
  const CoeffDerivs& c() const { return c_; }

  bool has_form11() const { return static_cast<bool>(omega_.f); }
  const CoeffDerivs& omega() const;
  double eps() const;

  double a_at(const Point& q) const { return a_.f->eval(q.x, q.y); }
  double b_at(const Point& q) const { return b_.f->eval(q.x, q.y); }
  double c_at(const Point& q) const { return c_.f->eval(q.x, q.y); }

 private:
  CoeffDerivs a_, b_, c_;
  CoeffDerivs omega_;  // empty unless built by form11
  double eps_ = 0.0;
};

struct DiscriminantValue {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

double discriminant(const Metric& m, const Point& q);
DiscriminantValue discriminant_with_gradient(const Metric& m, const Point& q);

// F(q, p); for the vertical direction returns the leading coefficient c(q).
double F_value(const Metric& m, const Point& q, const Direction& d);

// F and its first partials at a slope-chart state.
struct FJet {
  double F = 0.0, Fx = 0.0, Fy = 0.0, Fp = 0.0;
};

FJet f_jet(const Metric& m, double x, double y, double p);

// Same jet in the inverse-slope chart: G(x,y,s) = a s^2 + 2 b s + c.
FJet g_jet(const Metric& m, double x, double y, double s);

// Scale used to make F-residual and isotropy bands relative.
double F_scale(const Metric& m, const Point& q, const Direction& d);

struct Tolerances {
  double on_discriminant = 1e-9;  // |Delta| band for "point is on the curve"
  double iso = 1e-9;              // |F| band for "direction is isotropic"
  double tangency = 1e-8;         // |F_x + p0 F_y| band at the double root
  double eigen_zero = 1e-5;       // spectrum component treated as zero
  double eigen_boundary = 1e-6;   // |disc| band for a double eigenvalue
  double root_merge = 1e-6;       // RP^1 chart distance merging cubic roots
};

CausalType causal_type(const Metric& m, const Point& q, const Direction& d,
                       double tol_iso = 1e-9);

// Real roots of F(q, .) = 0 over RP^1, with multiplicity. Vertical root iff
// c(q) vanishes. Lorentzian points get two roots, discriminant points one
// double root, Riemannian points none.
std::vector<DirectionRoot> isotropic_directions(const Metric& m, const Point& q,
                                                double tol = 1e-9);

// Delta^2 * (Gaussian curvature), via the Brioschi determinant difference.
// Stays finite and smooth across the discriminant curve.
double brioschi_K1(const Metric& m, const Point& q);

struct DiscriminantTraceOptions {
  double arclength = 1.0;   // total length to march (split evenly both ways? no: forward)
  double step = 0.01;       // arclength step between output points
  double tol = 1e-10;       // |Delta| bound enforced at every output point
  double grad_floor = 1e-8; // minimum |grad Delta|; below this the trace fails
};

struct DegenerateDiscriminantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Predictor-corrector march along Delta = 0 starting from the projection of
// seed onto the curve. Positive arclength follows the tangent
// (-Delta_y, Delta_x); negative arclength follows the opposite sense.
std::vector<Point> trace_discriminant(const Metric& m, const Point& seed,
                                      const DiscriminantTraceOptions& opt = {});

// Newton projection of q onto Delta = 0 (used by tracing and diagnostics).
Point project_to_discriminant(const Metric& m, const Point& q,
                              double tol = 1e-12, int max_iter = 50);

}  // namespace sigflow
