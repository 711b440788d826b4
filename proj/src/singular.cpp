#include "sigflow/singular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sigflow {

const char* to_string(Tangency t) {
  switch (t) {
    case Tangency::Transverse: return "transverse";
    case Tangency::OrderOne: return "order1";
    case Tangency::Identical: return "identical";
    case Tangency::Higher: return "higher";
  }
  return "?";
}

const char* to_string(SingularClass c) {
  switch (c) {
    case SingularClass::C1: return "C1";
    case SingularClass::C2: return "C2";
    case SingularClass::C3: return "C3";
    case SingularClass::Ds: return "Ds";
    case SingularClass::Dn: return "Dn";
    case SingularClass::Df: return "Df";
    case SingularClass::Z: return "Z";
    case SingularClass::NonGeneric: return "non-generic";
  }
  return "?";
}

double CubicM::scale() const {
  return std::max({std::abs(mu[0]), std::abs(mu[1]), std::abs(mu[2]),
                   std::abs(mu[3]), 1e-300});
}

CubicM cubic_M(const Metric& m, const Point& q) {
  double x = q.x, y = q.y;
  double a = m.a().f->eval(x, y), b = m.b().f->eval(x, y), c = m.c().f->eval(x, y);
  double ax = m.a().fx->eval(x, y), ay = m.a().fy->eval(x, y);
  double bx = m.b().fx->eval(x, y), by = m.b().fy->eval(x, y);
  double cx = m.c().fx->eval(x, y), cy = m.c().fy->eval(x, y);
  CubicM cub;
  cub.mu[0] = a * (ay - 2.0 * bx) + ax * b;
  cub.mu[1] = b * (3.0 * ay - 2.0 * bx) + ax * c - 2.0 * a * cx;
  cub.mu[2] = b * (2.0 * by - 3.0 * cx) + 2.0 * ay * c - a * cy;
  cub.mu[3] = c * (2.0 * by - cx) - b * cy;
  return cub;
}

namespace {

double coeff_scale(const Metric& m, const Point& q) {
  return std::max({std::abs(m.a_at(q)), std::abs(m.b_at(q)),
                   std::abs(m.c_at(q)), 1.0});
}

void require_on_curve(const Metric& m, const Point& q, double band) {
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  double scale = std::abs(a) * std::abs(c) + b * b + 1.0;
  if (std::abs(a * c - b * b) > band * scale)
    throw std::invalid_argument("point is not on the discriminant curve");
}

// Isotropic double root of F(q, .): slope -b/c, vertical when c vanishes.
Direction double_root(const Metric& m, const Point& q, double tol) {
  double b = m.b_at(q), c = m.c_at(q);
  double scale = coeff_scale(m, q);
  if (std::abs(c) <= tol * scale) return Direction::infinity();
  return Direction::affine(-b / c);
}

Metric swapped_metric(const Metric& m) {
  return Metric(swap_xy(m.c().f), swap_xy(m.b().f), swap_xy(m.a().f));
}

// Value and scale of F_x + p F_y at (q, p); its vanishing is tangency of the
// isotropic double root with the discriminant curve.
void transversality(const Metric& m, const Point& q, double p, double& value,
                    double& scale) {
  FJet j = f_jet(m, q.x, q.y, p);
  value = j.Fx + p * j.Fy;
  double x = q.x, y = q.y;
  double ax = std::abs(m.a().fx->eval(x, y)), ay = std::abs(m.a().fy->eval(x, y));
  double bx = std::abs(m.b().fx->eval(x, y)), by = std::abs(m.b().fy->eval(x, y));
  double cx = std::abs(m.c().fx->eval(x, y)), cy = std::abs(m.c().fy->eval(x, y));
  double ap = std::abs(p);
  scale = (cx * ap * ap + 2.0 * bx * ap + ax) +
          ap * (cy * ap * ap + 2.0 * by * ap + ay);
  scale = std::max(scale, 1.0);
}

// |F_x + p0 F_y| / scale at the double root over q, recursing into the
// swapped metric when the double root is vertical.
double transversality_rel(const Metric& m, const Point& q, const Tolerances& tol) {
  Direction p0 = double_root(m, q, tol.iso);
  if (p0.is_infinite())
    return transversality_rel(swapped_metric(m), Point{q.y, q.x}, tol);
  double v, s;
  transversality(m, q, p0.p, v, s);
  return std::abs(v) / s;
}

struct QuadraticRoots {
  int n = 0;              // number of finite real roots
  double r[2] = {0, 0};   // ascending
  int inf_mult = 0;       // projective roots at the chart's infinity
  bool vanishes = false;  // all coefficients below the floor
};

// Real roots of q2 t^2 + q1 t + q0 over RP^1, stable in degenerate limits:
// a vanishing leading coefficient moves roots to infinity projectively.
QuadraticRoots solve_quadratic(double q2, double q1, double q0, double rel_band,
                               double vanish_floor) {
  QuadraticRoots out;
  double scale = std::max({std::abs(q2), std::abs(q1), std::abs(q0)});
  if (scale <= vanish_floor) {
    out.vanishes = true;
    return out;
  }
  if (std::abs(q2) <= rel_band * scale) {
    if (std::abs(q1) <= rel_band * scale) {
      out.inf_mult = 2;
      return out;
    }
    out.n = 1;
    out.r[0] = -q0 / q1;
    out.inf_mult = 1;
    return out;
  }
  double disc = q1 * q1 - 4.0 * q2 * q0;
  double disc_band = rel_band * scale * scale;
  if (disc < -disc_band) return out;
  if (disc <= disc_band) {
    out.n = 2;
    out.r[0] = out.r[1] = -q1 / (2.0 * q2);
    return out;
  }
  double s = std::sqrt(disc);
  double u = -(q1 + (q1 >= 0.0 ? s : -s)) * 0.5;
  double r1, r2;
  if (u == 0.0) {
    r1 = s / (2.0 * q2);
    r2 = -r1;
  } else {
    r1 = u / q2;
    r2 = q0 / u;
  }
  if (r1 > r2) std::swap(r1, r2);
  out.n = 2;
  out.r[0] = r1;
  out.r[1] = r2;
  return out;
}

std::vector<DirectionRoot> merge_roots(std::vector<DirectionRoot> raw,
                                       double merge_band) {
  std::vector<DirectionRoot> out;
  for (const auto& r : raw) {
    bool merged = false;
    for (auto& o : out) {
      if (direction_distance(r.dir, o.dir) <= merge_band) {
        o.multiplicity += r.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const DirectionRoot& l, const DirectionRoot& r) {
              if (l.dir.is_infinite() != r.dir.is_infinite())
                return r.dir.is_infinite();
              return l.dir.p < r.dir.p;
            });
  return out;
}

}  // namespace

std::vector<DirectionRoot> admissible_directions(const Metric& m, const Point& q,
                                                 const Tolerances& tol) {
  require_on_curve(m, q, tol.on_discriminant);
  CubicM cub = cubic_M(m, q);
  Direction p0 = double_root(m, q, tol.iso);

  std::vector<DirectionRoot> raw;
  if (!p0.is_infinite()) {
    raw.push_back({p0, 1});
    // Synthetic division of the cubic by (p - p0).
    double q2 = cub.mu[3];
    double q1 = cub.mu[2] + p0.p * q2;
    double q0 = cub.mu[1] + p0.p * q1;
    double floor = 1e-12 * cub.scale() * std::max(1.0, std::abs(p0.p));
    QuadraticRoots qr = solve_quadratic(q2, q1, q0, 1e-9, floor);
    if (!qr.vanishes) {
      for (int i = 0; i < qr.n; ++i)
        raw.push_back({Direction::affine(qr.r[i]), 1});
      if (qr.inf_mult > 0) raw.push_back({Direction::infinity(), qr.inf_mult});
    }
  } else {
    // Vertical double root. Work in the inverse-slope chart s = 1/p, where
    // the cubic's coefficients reverse and the known root is s0 = -b/a.
    raw.push_back({Direction::infinity(), 1});
    double a = m.a_at(q), b = m.b_at(q);
    double s0 = std::abs(a) <= tol.iso * coeff_scale(m, q) ? 0.0 : -b / a;
    double q2 = cub.mu[0];
    double q1 = cub.mu[1] + s0 * q2;
    double q0 = cub.mu[2] + s0 * q1;
    double floor = 1e-12 * cub.scale() * std::max(1.0, std::abs(s0));
    QuadraticRoots qr = solve_quadratic(q2, q1, q0, 1e-9, floor);
    if (!qr.vanishes) {
      for (int i = 0; i < qr.n; ++i) {
        double s = qr.r[i];
        raw.push_back(
            {s == 0.0 ? Direction::infinity() : Direction::affine(1.0 / s), 1});
      }
      // s at the chart's infinity is slope zero.
      if (qr.inf_mult > 0) raw.push_back({Direction::affine(0.0), qr.inf_mult});
    }
  }
  return merge_roots(std::move(raw), tol.root_merge);
}

double check_factorization(const Metric& m, const Point& q,
                           const std::vector<double>& p_samples,
                           const Tolerances& tol) {
  require_on_curve(m, q, tol.on_discriminant);
  Direction p0 = double_root(m, q, tol.iso);
  if (p0.is_infinite())
    throw std::invalid_argument(
        "vertical double root: the residual is defined in the slope chart");
  CubicM cub = cubic_M(m, q);
  DiscriminantValue d = discriminant_with_gradient(m, q);
  double worst = 0.0;
  for (double p : p_samples) {
    double lhs = cub.eval(p);
    double rhs = (p - p0.p) * (2.0 * (d.dx + p * d.dy) + cub.deriv(p)) / 3.0;
    double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

LambdaPair lambda_spectrum(const Metric& m, const Point& q, const Direction& d) {
  require_on_curve(m, q, 1e-7);
  CubicM cub = cubic_M(m, q);
  DiscriminantValue dv = discriminant_with_gradient(m, q);
  LambdaPair out;
  if (d.is_infinite()) {
    if (std::abs(cub.eval_inverted(0.0)) > 1e-6 * cub.scale())
      throw std::invalid_argument("direction is not a root of the cubic");
    out.l1 = 2.0 * dv.dy;
    out.l2 = cub.deriv_inverted(0.0);
    return out;
  }
  double ps = std::max(1.0, std::abs(d.p));
  if (std::abs(cub.eval(d.p)) > 1e-6 * cub.scale() * ps * ps * ps)
    throw std::invalid_argument("direction is not a root of the cubic");
  out.l1 = 2.0 * (dv.dx + d.p * dv.dy);
  out.l2 = cub.deriv(d.p);
  return out;
}

namespace {

// Planar restriction of the direction field to the isotropic surface, the
// dependent coordinate recovered from F = 0 by Newton.
struct ReducedField {
  const Metric& m;
  bool solve_y;  // true: coordinates (x, p) with y dependent; false: (y, p)
  double base_x, base_y;

  void eval(double u1, double u2, double& g1, double& g2) const {
    double x, y, p = u2;
    if (solve_y) {
      x = u1;
      y = solve_dependent(x, base_y, p, true);
    } else {
      y = u1;
      x = solve_dependent(base_x, y, p, false);
    }
    FJet j = f_jet(m, x, y, p);
    g1 = solve_y ? 0.5 * j.Fp : 0.5 * p * j.Fp;
    g2 = -0.5 * (j.Fx + p * j.Fy);
  }

  double solve_dependent(double x, double y, double p, bool dep_is_y) const {
    double v = dep_is_y ? y : x;
    for (int i = 0; i < 60; ++i) {
      FJet j = dep_is_y ? f_jet(m, x, v, p) : f_jet(m, v, y, p);
      double deriv = dep_is_y ? j.Fy : j.Fx;
      if (std::abs(deriv) < 1e-12)
        throw SpectrumError("isotropic surface is not a graph near the double root");
      double step = j.F / deriv;
      v -= step;
      if (std::abs(step) <= 1e-15 * (std::abs(v) + 1.0)) return v;
    }
    return v;
  }
};

}  // namespace

SpectrumPair epsilon_spectrum(const Metric& m, const Point& q,
                              const Tolerances& tol) {
  require_on_curve(m, q, tol.on_discriminant);
  Direction p0 = double_root(m, q, tol.iso);
  if (p0.is_infinite())
    return epsilon_spectrum(swapped_metric(m), Point{q.y, q.x}, tol);

  double v, s;
  transversality(m, q, p0.p, v, s);
  if (std::abs(v) > tol.tangency * s)
    throw SpectrumError(
        "transverse point: the restricted field does not vanish at the double root");

  FJet j0 = f_jet(m, q.x, q.y, p0.p);
  if (std::max(std::abs(j0.Fx), std::abs(j0.Fy)) < 1e-12 * coeff_scale(m, q))
    throw SpectrumError("isotropic surface is not a graph near the double root");

  ReducedField rf{m, std::abs(j0.Fy) >= std::abs(j0.Fx), q.x, q.y};
  double c1 = rf.solve_y ? q.x : q.y;
  double c2 = p0.p;

  auto jac = [&](double h, double J[2][2]) {
    double gp1, gp2, gm1, gm2;
    rf.eval(c1 + h, c2, gp1, gp2);
    rf.eval(c1 - h, c2, gm1, gm2);
    J[0][0] = (gp1 - gm1) / (2.0 * h);
    J[1][0] = (gp2 - gm2) / (2.0 * h);
    rf.eval(c1, c2 + h, gp1, gp2);
    rf.eval(c1, c2 - h, gm1, gm2);
    J[0][1] = (gp1 - gm1) / (2.0 * h);
    J[1][1] = (gp2 - gm2) / (2.0 * h);
  };

  double J1[2][2], J2[2][2], J[2][2];
  jac(1e-4, J1);
  jac(5e-5, J2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) J[r][c] = (4.0 * J2[r][c] - J1[r][c]) / 3.0;

  double T = J[0][0] + J[1][1];
  double D = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  double disc = 0.25 * T * T - D;
  SpectrumPair sp;
  if (disc >= 0.0) {
    double r = std::sqrt(disc);
    sp.e1 = {0.5 * T + r, 0.0};
    sp.e2 = {0.5 * T - r, 0.0};
  } else {
    double im = std::sqrt(-disc);
    sp.e1 = {0.5 * T, im};
    sp.e2 = {0.5 * T, -im};
  }
  return sp;
}

Tangency tangency_verdict(const Metric& m, const Point& q, const Tolerances& tol) {
  require_on_curve(m, q, tol.on_discriminant);
  if (transversality_rel(m, q, tol) > tol.tangency) return Tangency::Transverse;

  // Tangent at q. Identical when the nearby criminant is tangent throughout.
  bool identical = true;
  try {
    DiscriminantTraceOptions opt;
    opt.step = 0.02;
    opt.arclength = 0.08;
    std::vector<Point> fwd = trace_discriminant(m, q, opt);
    opt.arclength = -0.08;
    std::vector<Point> bwd = trace_discriminant(m, q, opt);
    std::vector<Point> pts(bwd.rbegin(), bwd.rend());
    pts.insert(pts.end(), fwd.begin() + 1, fwd.end());
    if (pts.size() < 3) identical = false;
    for (const Point& sample : pts) {
      if (transversality_rel(m, sample, tol) > tol.tangency) {
        identical = false;
        break;
      }
    }
  } catch (const DegenerateDiscriminantError&) {
    identical = false;
  }
  if (identical) return Tangency::Identical;

  try {
    SpectrumPair sp = epsilon_spectrum(m, q, tol);
    double scale = std::max(1.0, std::abs(sp.e1) + std::abs(sp.e2));
    if (std::abs(sp.e1) > tol.eigen_zero * scale &&
        std::abs(sp.e2) > tol.eigen_zero * scale)
      return Tangency::OrderOne;
    return Tangency::Higher;
  } catch (const SpectrumError&) {
    return Tangency::Higher;
  }
}

namespace {

double k1_band(const Metric& m, const Point& q, double rel) {
  double s = 1.0;
  for (const CoeffDerivs* cd : {&m.a(), &m.b(), &m.c()}) {
    for (const ExprPtr* e :
         {&cd->f, &cd->fx, &cd->fy, &cd->fxx, &cd->fxy, &cd->fyy})
      s = std::max(s, std::abs((*e)->eval(q.x, q.y)));
  }
  return rel * s * s;
}

bool directions_match(const std::vector<DirectionRoot>& dirs, const Direction& p0,
                      int p0_mult, int total_mult, int distinct) {
  int total = 0;
  int found_mult = -1;
  for (const auto& d : dirs) {
    total += d.multiplicity;
    if (direction_distance(d.dir, p0) <= 1e-6) found_mult = d.multiplicity;
  }
  return found_mult == p0_mult && static_cast<int>(dirs.size()) == distinct &&
         total == total_mult;
}

}  // namespace

PointClassification classify(const Metric& m, const Point& q, const Tolerances& tol) {
  require_on_curve(m, q, tol.on_discriminant);
  PointClassification r;
  r.q = q;

  DiscriminantValue dv = discriminant_with_gradient(m, q);
  if (std::hypot(dv.dx, dv.dy) < 1e-8) {
    r.cls = SingularClass::NonGeneric;
    r.diagnostics = "discriminant curve gradient vanishes at the point";
    return r;
  }

  r.K1 = brioschi_K1(m, q);
  double band = k1_band(m, q, 1e-9);
  r.directions = admissible_directions(m, q, tol);
  Direction p0 = double_root(m, q, tol.iso);
  try {
    r.lambda_at_p0 = lambda_spectrum(m, q, p0);
  } catch (const std::invalid_argument&) {
  }
  r.tangency = tangency_verdict(m, q, tol);

  auto fail = [&](const std::string& why) {
    r.cls = SingularClass::NonGeneric;
    r.diagnostics = why;
    return r;
  };

  switch (r.tangency) {
    case Tangency::Transverse: {
      if (r.K1 < -band) {
        if (!directions_match(r.directions, p0, 1, 1, 1))
          return fail("negative curvature invariant expects a single simple root");
        r.cls = SingularClass::C1;
      } else if (r.K1 > band) {
        if (!directions_match(r.directions, p0, 1, 3, 3))
          return fail("positive curvature invariant expects three simple roots");
        r.cls = SingularClass::C3;
      } else {
        if (!directions_match(r.directions, p0, 1, 3, 2))
          return fail(
              "vanishing curvature invariant expects a simple root plus a double root");
        r.cls = SingularClass::C2;
      }
      return r;
    }
    case Tangency::Identical: {
      if (r.K1 <= band)
        return fail("identical tangency with nonpositive curvature invariant");
      if (!directions_match(r.directions, p0, 2, 3, 2))
        return fail("tangent double root must be a double root of the cubic");
      r.cls = SingularClass::Z;
      return r;
    }
    case Tangency::OrderOne: {
      if (r.K1 <= band)
        return fail("order-one tangency with nonpositive curvature invariant");
      if (!directions_match(r.directions, p0, 2, 3, 2))
        return fail("tangent double root must be a double root of the cubic");
      SpectrumPair sp;
      try {
        sp = epsilon_spectrum(m, q, tol);
      } catch (const SpectrumError& e) {
        return fail(e.what());
      }
      r.eps = sp;
      double T = (sp.e1 + sp.e2).real();
      double D = (sp.e1 * sp.e2).real();
      double disc = 0.25 * T * T - D;
      double dscale = std::max(1.0, 0.25 * T * T + std::abs(D));
      double escale = std::max(1.0, std::abs(sp.e1) + std::abs(sp.e2));
      if (std::abs(disc) <= tol.eigen_boundary * dscale)
        return fail("restricted spectrum at the double-eigenvalue boundary");
      if (disc < 0.0) {
        if (std::abs(T) <= tol.eigen_zero * escale)
          return fail("complex restricted spectrum with vanishing real part");
        r.cls = SingularClass::Df;
        return r;
      }
      double e1 = sp.e1.real(), e2 = sp.e2.real();
      if (std::min(std::abs(e1), std::abs(e2)) <= tol.eigen_zero * escale)
        return fail("restricted spectrum has a vanishing eigenvalue");
      r.cls = e1 * e2 < 0.0 ? SingularClass::Ds : SingularClass::Dn;
      return r;
    }
    case Tangency::Higher:
      return fail("higher-order tangency between the double root and the curve");
  }
  return fail("unreachable");
}

ResonanceReport resonance_scan(const SpectrumPair& sp, int order_bound, double tol) {
  ResonanceReport rep;
  rep.spectrum = sp;
  rep.order_bound = order_bound;
  rep.tol = tol;
  const std::complex<double> targets[3] = {sp.e1, sp.e2, {1.0, 0.0}};
  bool complex_spectrum =
      std::abs(sp.e1.imag()) > tol || std::abs(sp.e2.imag()) > tol;

  for (int s1 = 0; s1 <= order_bound; ++s1)
    for (int s2 = 0; s1 + s2 <= order_bound; ++s2)
      for (int s3 = 0; s1 + s2 + s3 <= order_bound; ++s3) {
        if (s1 + s2 + s3 < 1) continue;
        std::complex<double> val = double(s1) * sp.e1 + double(s2) * sp.e2 +
                                   std::complex<double>(double(s3), 0.0);
        for (int t = 0; t < 3; ++t) {
          bool identity = (t == 0 && s1 == 1 && s2 == 0 && s3 == 0) ||
                          (t == 1 && s1 == 0 && s2 == 1 && s3 == 0) ||
                          (t == 2 && s1 == 0 && s2 == 0 && s3 == 1);
          if (identity) continue;
          double full = std::abs(val - targets[t]);
          if (full <= tol) {
            rep.relations.push_back({s1, s2, s3, t, full, false});
          } else if (complex_spectrum) {
            double re = std::abs((val - targets[t]).real());
            if (re <= tol) rep.relations.push_back({s1, s2, s3, t, re, true});
          }
        }
      }
  return rep;
}

}  // namespace sigflow
