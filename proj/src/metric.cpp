#include "sigflow/metric.hpp"

#include <algorithm>
#include <cmath>

namespace sigflow {

const char* to_string(CausalType t) {
  switch (t) {
    case CausalType::Timelike: return "timelike";
    case CausalType::Spacelike: return "spacelike";
    case CausalType::Isotropic: return "isotropic";
  }
  return "?";
}

double direction_distance(const Direction& u, const Direction& v) {
  const double big = 1e300;
  double pu = u.is_infinite() ? big : u.p;
  double pv = v.is_infinite() ? big : v.p;
  double d_affine = big, d_inverse = big;
  if (std::abs(pu) <= 1.0 + 1e-12 && std::abs(pv) <= 1.0 + 1e-12)
    d_affine = std::abs(pu - pv);
  double qu = u.is_infinite() ? 0.0 : (std::abs(pu) >= 1e-300 ? 1.0 / pu : big);
  double qv = v.is_infinite() ? 0.0 : (std::abs(pv) >= 1e-300 ? 1.0 / pv : big);
  if (std::abs(qu) <= 1.0 + 1e-12 && std::abs(qv) <= 1.0 + 1e-12)
    d_inverse = std::abs(qu - qv);
  return std::min(d_affine, d_inverse);
}

CoeffDerivs::CoeffDerivs(ExprPtr e) : f(std::move(e)) {
  fx = f->diff(Var::X);
  fy = f->diff(Var::Y);
  fxx = fx->diff(Var::X);
  fxy = fx->diff(Var::Y);
  fyy = fy->diff(Var::Y);
}

Metric::Metric(ExprPtr a, ExprPtr b, ExprPtr c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {}

Metric Metric::form11(ExprPtr omega, double eps) {
  // r = y - eps x^2; a = omega r, b = 0, c = -omega
  ExprPtr r = Expr::sub(Expr::variable(Var::Y),
                        Expr::mul(Expr::constant(eps),
                                  Expr::pow(Expr::variable(Var::X), 2)));
  Metric m(Expr::mul(omega, r), Expr::constant(0.0), Expr::neg(omega));
  m.omega_ = CoeffDerivs(omega);
  m.eps_ = eps;
  return m;
}

const CoeffDerivs& Metric::omega() const {
  if (!has_form11())
    throw std::logic_error("metric was not built from the tangential local model");
  return omega_;
}

double Metric::eps() const {
  if (!has_form11())
    throw std::logic_error("metric was not built from the tangential local model");
  return eps_;
}

double discriminant(const Metric& m, const Point& q) {
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  return a * c - b * b;
}

DiscriminantValue discriminant_with_gradient(const Metric& m, const Point& q) {
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  double ax = m.a().fx->eval(q.x, q.y), ay = m.a().fy->eval(q.x, q.y);
  double bx = m.b().fx->eval(q.x, q.y), by = m.b().fy->eval(q.x, q.y);
  double cx = m.c().fx->eval(q.x, q.y), cy = m.c().fy->eval(q.x, q.y);
  DiscriminantValue d;
  d.value = a * c - b * b;
  d.dx = ax * c + a * cx - 2.0 * b * bx;
  d.dy = ay * c + a * cy - 2.0 * b * by;
  return d;
}

double F_value(const Metric& m, const Point& q, const Direction& d) {
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  if (d.is_infinite()) return c;
  return c * d.p * d.p + 2.0 * b * d.p + a;
}

FJet f_jet(const Metric& m, double x, double y, double p) {
  double a = m.a().f->eval(x, y), b = m.b().f->eval(x, y), c = m.c().f->eval(x, y);
  double ax = m.a().fx->eval(x, y), ay = m.a().fy->eval(x, y);
  double bx = m.b().fx->eval(x, y), by = m.b().fy->eval(x, y);
  double cx = m.c().fx->eval(x, y), cy = m.c().fy->eval(x, y);
  FJet j;
  j.F = c * p * p + 2.0 * b * p + a;
  j.Fx = cx * p * p + 2.0 * bx * p + ax;
  j.Fy = cy * p * p + 2.0 * by * p + ay;
  j.Fp = 2.0 * c * p + 2.0 * b;
  return j;
}

FJet g_jet(const Metric& m, double x, double y, double s) {
  double a = m.a().f->eval(x, y), b = m.b().f->eval(x, y), c = m.c().f->eval(x, y);
  double ax = m.a().fx->eval(x, y), ay = m.a().fy->eval(x, y);
  double bx = m.b().fx->eval(x, y), by = m.b().fy->eval(x, y);
  double cx = m.c().fx->eval(x, y), cy = m.c().fy->eval(x, y);
  FJet j;
  j.F = a * s * s + 2.0 * b * s + c;
  j.Fx = ax * s * s + 2.0 * bx * s + cx;
  j.Fy = ay * s * s + 2.0 * by * s + cy;
  j.Fp = 2.0 * a * s + 2.0 * b;
  return j;
}

double F_scale(const Metric& m, const Point& q, const Direction& d) {
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  double p = d.is_infinite() ? 1.0 : d.p;
  double s = std::abs(c) * p * p + 2.0 * std::abs(b) * std::abs(p) + std::abs(a);
  return std::max(s, 1.0);
}

CausalType causal_type(const Metric& m, const Point& q, const Direction& d,
                       double tol_iso) {
  double f = F_value(m, q, d);
  double band = tol_iso * F_scale(m, q, d);
  if (f > band) return CausalType::Timelike;
  if (f < -band) return CausalType::Spacelike;
  return CausalType::Isotropic;
}

std::vector<DirectionRoot> isotropic_directions(const Metric& m, const Point& q,
                                                double tol) {
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1.0});
  std::vector<DirectionRoot> roots;

  if (std::abs(c) <= tol * scale) {
    // c = 0: one root escapes to the vertical direction.
    if (std::abs(b) <= tol * scale) {
      // c = b = 0 forces Delta = 0 with a double vertical root (if a != 0
      // the only isotropic direction is vertical, counted twice).
      roots.push_back({Direction::infinity(), 2});
      return roots;
    }
    roots.push_back({Direction::affine(-a / (2.0 * b)), 1});
    roots.push_back({Direction::infinity(), 1});
    std::swap(roots[0], roots[1]);  // order by decreasing |root|: vertical first
    return roots;
  }

  double disc = b * b - a * c;  // -Delta
  double disc_band = tol * scale * scale;
  if (disc < -disc_band) return roots;  // Riemannian: no real isotropic direction
  if (disc <= disc_band) {
    roots.push_back({Direction::affine(-b / c), 2});
    return roots;
  }
  double s = std::sqrt(disc);
  // Stable quadratic: avoid cancellation in -b +- s.
  double u = -(b + (b >= 0.0 ? s : -s));
  double r1, r2;
  if (u == 0.0) {  // b == 0
    r1 = s / c;
    r2 = -s / c;
  } else {
    r1 = u / c;
    r2 = a / u;
  }
  if (r1 > r2) std::swap(r1, r2);
  roots.push_back({Direction::affine(r1), 1});
  roots.push_back({Direction::affine(r2), 1});
  return roots;
}

namespace {

double det3(const double m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

double brioschi_K1(const Metric& m, const Point& q) {
  double x = q.x, y = q.y;
  double E = m.a().f->eval(x, y);
  double F = m.b().f->eval(x, y);
  double G = m.c().f->eval(x, y);
  double Ex = m.a().fx->eval(x, y), Ey = m.a().fy->eval(x, y);
  double Fx = m.b().fx->eval(x, y), Fy = m.b().fy->eval(x, y);
  double Gx = m.c().fx->eval(x, y), Gy = m.c().fy->eval(x, y);
  double Eyy = m.a().fyy->eval(x, y);
  double Fxy = m.b().fxy->eval(x, y);
  double Gxx = m.c().fxx->eval(x, y);

  double A[3][3] = {
      {-0.5 * Eyy + Fxy - 0.5 * Gxx, 0.5 * Ex, Fx - 0.5 * Ey},
      {Fy - 0.5 * Gx, E, F},
      {0.5 * Gy, F, G},
  };
  double B[3][3] = {
      {0.0, 0.5 * Ey, 0.5 * Gx},
      {0.5 * Ey, E, F},
      {0.5 * Gx, F, G},
  };
  return det3(A) - det3(B);
}

Point project_to_discriminant(const Metric& m, const Point& q, double tol,
                              int max_iter) {
  Point p = q;
  for (int i = 0; i < max_iter; ++i) {
    DiscriminantValue d = discriminant_with_gradient(m, p);
    double g2 = d.dx * d.dx + d.dy * d.dy;
    if (g2 < 1e-16)
      throw DegenerateDiscriminantError(
          "gradient of the discriminant vanished during projection");
    if (std::abs(d.value) <= tol) return p;
    p.x -= d.value * d.dx / g2;
    p.y -= d.value * d.dy / g2;
  }
  DiscriminantValue d = discriminant_with_gradient(m, p);
  if (std::abs(d.value) <= tol * 10.0) return p;
  throw DegenerateDiscriminantError("projection onto the discriminant curve did not converge");
}

std::vector<Point> trace_discriminant(const Metric& m, const Point& seed,
                                      const DiscriminantTraceOptions& opt) {
  if (opt.step <= 0.0) throw std::invalid_argument("discriminant trace step must be positive");
  double total = std::abs(opt.arclength);
  double sense = opt.arclength >= 0.0 ? 1.0 : -1.0;

  std::vector<Point> out;
  Point q = project_to_discriminant(m, seed, opt.tol * 0.01);
  out.push_back(q);

  double prev_tx = 0.0, prev_ty = 0.0;
  bool have_prev = false;
  int n_steps = static_cast<int>(std::ceil(total / opt.step));
  for (int i = 0; i < n_steps; ++i) {
    double h = std::min(opt.step, total - i * opt.step);
    if (h <= 0.0) break;
    DiscriminantValue d = discriminant_with_gradient(m, q);
    double gn = std::hypot(d.dx, d.dy);
    if (gn < opt.grad_floor)
      throw DegenerateDiscriminantError(
          "gradient of the discriminant fell below the floor while tracing");
    double tx = -d.dy / gn, ty = d.dx / gn;
    if (!have_prev) {
      tx *= sense;
      ty *= sense;
      have_prev = true;
    } else if (tx * prev_tx + ty * prev_ty < 0.0) {
      tx = -tx;
      ty = -ty;
    }
    prev_tx = tx;
    prev_ty = ty;
    Point pred{q.x + h * tx, q.y + h * ty};
    q = project_to_discriminant(m, pred, opt.tol * 0.01);
    out.push_back(q);
  }
  return out;
}

}  // namespace sigflow
