#include "sigflow/families.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace sigflow {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double sup_dist(const Point& a, const Point& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Census with the family isotropy band; the normative per-sample band is too
// tight for members that ride the isotropic surface within integration drift.
constexpr double kFamilyIsoBand = 1e-8;

CausalCensus census_beyond(const Metric& m, const Trace& tr, const Point& q,
                           double exclude) {
  CausalCensus c;
  for (const TraceSample& s : tr.samples) {
    if (sup_dist({s.x, s.y}, q) <= exclude) continue;
    LiftedState ls{s.x, s.y, s.w, s.chart};
    switch (causal_type(m, {s.x, s.y}, ls.direction(), kFamilyIsoBand)) {
      case CausalType::Timelike: ++c.timelike; break;
      case CausalType::Spacelike: ++c.spacelike; break;
      case CausalType::Isotropic: ++c.isotropic; break;
    }
  }
  return c;
}

// Field sense that moves the planar projection away from q; +1 on a tie.
double away_sense(const Metric& m, const LiftedState& s, const Point& q,
                  bool isotropic_field) {
  std::array<double, 3> f =
      isotropic_field ? field_isotropic(m, s) : field_lifted(m, s);
  double dot = (s.x - q.x) * f[0] + (s.y - q.y) * f[1];
  return dot < 0.0 ? -1.0 : 1.0;
}

// Sense that moves planar x toward sign(want_dx) under the isotropic field.
double iso_x_sense(const Metric& m, const LiftedState& s, double want_dx) {
  double o = field_isotropic(m, s)[0] < 0.0 ? -1.0 : 1.0;
  return want_dx < 0.0 ? -o : o;
}

struct MemberSpec {
  LiftedState seed;
  double sense = 1.0;
  bool isotropic_field = false;
  std::optional<double> leaf;
  std::optional<double> phase;
  std::string label;
  double t_max_floor = 0.0;    // raise the budget for slow approaches
  double sample_dx = 0.0;      // per-member x cadence override
  double stop_inner = 0.0;     // stop when |x - qx| drops below (inward traces)
};

GeodesicTrace run_member(const Metric& m, const Point& q,
                         const FamilyParams& fp, SingularClass cls,
                         const MemberSpec& ms) {
  IntegratorConfig cfg = fp.integrator;
  cfg.sense = ms.sense;
  cfg.bounds = Box{q.x - fp.range, q.x + fp.range, q.y - fp.range,
                   q.y + fp.range};
  // Members sample on the x-grid alone; the flow parameter spans many orders
  // of magnitude across a family, so any fixed time cadence either starves
  // the fits or drowns the memory.
  cfg.sample_dt = 0.0;
  cfg.sample_dx = ms.sample_dx > 0.0 ? ms.sample_dx : fp.delta / 4.0;
  if (ms.t_max_floor > 0.0) cfg.t_max = std::max(cfg.t_max, ms.t_max_floor);
  if (ms.stop_inner > 0.0) {
    double floor_x = ms.stop_inner;
    cfg.stop = [q, floor_x](double, const LiftedState& s) {
      return std::abs(s.x - q.x) < floor_x;
    };
  }

  GeodesicTrace g;
  g.base = q;
  g.parent = ms.isotropic_field ? integrate_isotropic(m, ms.seed, cfg)
                                : integrate_lifted(m, ms.seed, cfg);
  g.planar.reserve(g.parent.samples.size());
  for (const TraceSample& s : g.parent.samples) g.planar.push_back({s.x, s.y});
  g.leaf = ms.leaf;
  g.phase = ms.phase;
  g.census = census_beyond(m, g.parent, q, 2.0 * fp.delta);
  g.origin = cls;
  g.has_origin = true;
  g.label = ms.label;
  return g;
}

// ---- Z --------------------------------------------------------------------

void launch_z(const Metric& m, const Point& q, const FamilyParams& fp,
              const std::vector<double>& leaves,
              std::vector<GeodesicTrace>& out) {
  for (double leaf : leaves) {
    for (int side : {-1, 1}) {
      double dx = side * fp.delta;
      double x = q.x + dx;
      double y = q.y + dx * dx / 4.0 + leaf * dx * dx * dx * dx;
      double p = dx / 2.0 + 4.0 * leaf * dx * dx * dx;
      LiftedState seed = LiftedState::make(x, y, Direction::affine(p),
                                           fp.integrator.switch_threshold);
      MemberSpec ms;
      ms.seed = seed;
      // The leaf-0 member is the isotropic one; ride the isotropic direction
      // field so |F| stays at root-solve precision instead of accreting the
      // early integration error as a neighbor-leaf offset ~ rtol / delta^2.
      ms.isotropic_field = leaf == 0.0;
      ms.sense = away_sense(m, seed, q, ms.isotropic_field);
      ms.leaf = leaf;
      ms.label = "Z leaf=" + fmt("%g", leaf) + " side=" + fmt("%+g", double(side));
      out.push_back(run_member(m, q, fp, SingularClass::Z, ms));
    }
  }
}

// ---- C1 / C2 / C3 ---------------------------------------------------------

// Transverse eigenvector of the lifted-field linearization at (q, root) via
// central differences in the root's own chart; the eigenvalue is the exact
// 2 (Delta_x + p Delta_y) (or its inverted-chart analogue).
std::array<double, 3> transverse_eigvec(const Metric& m, const Point& q,
                                        const Direction& d, double lambda) {
  SlopeChart chart =
      (d.is_infinite() || std::abs(d.p) > 1.0) ? SlopeChart::Inverted
                                               : SlopeChart::Affine;
  double w = d.is_infinite() ? 0.0
             : chart == SlopeChart::Affine ? d.p
                                           : 1.0 / d.p;
  double base[3] = {q.x, q.y, w};
  double J[3][3];
  for (int j = 0; j < 3; ++j) {
    double h = 1e-6 * std::max(1.0, std::abs(base[j]));
    double plus[3] = {base[0], base[1], base[2]};
    double minus[3] = {base[0], base[1], base[2]};
    plus[j] += h;
    minus[j] -= h;
    auto fp = field_lifted(m, {plus[0], plus[1], plus[2], chart});
    auto fm = field_lifted(m, {minus[0], minus[1], minus[2], chart});
    for (int i = 0; i < 3; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  for (int i = 0; i < 3; ++i) J[i][i] -= lambda;
  // Null vector of the shifted Jacobian: best cross product of two rows.
  auto cross = [&](int r, int s) {
    return std::array<double, 3>{J[r][1] * J[s][2] - J[r][2] * J[s][1],
                                 J[r][2] * J[s][0] - J[r][0] * J[s][2],
                                 J[r][0] * J[s][1] - J[r][1] * J[s][0]};
  };
  std::array<double, 3> best{0.0, 0.0, 0.0};
  double best_n = 0.0;
  for (auto [r, s] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
    auto v = cross(r, s);
    double n = std::hypot(v[0], v[1], v[2]);
    if (n > best_n) {
      best_n = n;
      best = v;
    }
  }
  if (best_n == 0.0)
    throw std::invalid_argument("degenerate transverse direction at the root");
  for (double& v : best) v /= best_n;
  return best;  // components in (x, y, w) of the chosen chart
}

void launch_c(const Metric& m, const Point& q, const PointClassification& pc,
              const FamilyParams& fp, const std::vector<double>& leaves,
              std::vector<GeodesicTrace>& out) {
  const char* cname = to_string(pc.cls);
  DiscriminantValue dq = discriminant_with_gradient(m, q);
  double gn = std::hypot(dq.dx, dq.dy);
  if (gn == 0.0)
    throw std::invalid_argument("vanishing discriminant gradient at q");
  // Unit normal into the Lorentzian side (Delta < 0) and curve tangent.
  double nx = -dq.dx / gn, ny = -dq.dy / gn;
  double tx = -ny, ty = nx;

  // The isotropic double root at q, for telling crossing roots apart.
  std::vector<DirectionRoot> iso_q = isotropic_directions(m, q);
  if (iso_q.empty())
    throw std::invalid_argument("no isotropic direction at a curve point");
  Direction p0 = iso_q.front().dir;

  // Isotropic members: seeds on {F = 0} at distance delta, shifted along the
  // curve tangent by leaf * delta^(3/2). Traced toward q so a single run
  // shows both branches of the semicubic turn.
  double tang_unit = std::pow(fp.delta, 1.5);
  for (double leaf : leaves) {
    Point s{q.x + fp.delta * nx + leaf * tang_unit * tx,
            q.y + fp.delta * ny + leaf * tang_unit * ty};
    std::vector<DirectionRoot> iso = isotropic_directions(m, s);
    if (iso.size() < 2)
      throw std::invalid_argument(
          "isotropic seed fell off the Lorentzian side at leaf " +
          fmt("%g", leaf));
    std::sort(iso.begin(), iso.end(), [&](const DirectionRoot& l,
                                          const DirectionRoot& r) {
      return direction_distance(l.dir, p0) < direction_distance(r.dir, p0);
    });
    int branch = 0;
    for (const DirectionRoot& root : {iso[0], iso[1]}) {
      ++branch;
      LiftedState seed = LiftedState::make(s.x, s.y, root.dir,
                                           fp.integrator.switch_threshold);
      MemberSpec ms;
      ms.seed = seed;
      ms.sense = -away_sense(m, seed, q, true);  // toward q, through the turn
      ms.isotropic_field = true;
      ms.leaf = leaf;
      // Exponent fits center on the cusp; sample densely enough to place it.
      ms.sample_dx = fp.delta / 40.0;
      ms.label = std::string(cname) + " isotropic leaf=" + fmt("%g", leaf) +
                 " branch=" + std::to_string(branch);
      out.push_back(run_member(m, q, fp, pc.cls, ms));
    }
  }

  // Crossing members: one two-sided smooth geodesic per simple non-isotropic
  // real root, assembled from paired outward launches along the transverse
  // eigenvector.
  for (const DirectionRoot& root : pc.directions) {
    if (root.multiplicity != 1) continue;
    if (direction_distance(root.dir, p0) < 1e-3) continue;
    LambdaPair lp = lambda_spectrum(m, q, root.dir);
    if (std::abs(lp.l1) < 1e-8) continue;  // no transverse linearization
    std::array<double, 3> v = transverse_eigvec(m, q, root.dir, lp.l1);
    double pn = std::hypot(v[0], v[1]);
    if (pn < 1e-9) continue;  // projects to a point, not a crossing
    for (double& c : v) c /= pn;  // planar offset of the seed = delta exactly

    SlopeChart chart = (root.dir.is_infinite() || std::abs(root.dir.p) > 1.0)
                           ? SlopeChart::Inverted
                           : SlopeChart::Affine;
    double w0 = root.dir.is_infinite() ? 0.0
                : chart == SlopeChart::Affine ? root.dir.p
                                              : 1.0 / root.dir.p;
    GeodesicTrace half[2];
    for (int side : {0, 1}) {
      double s = side == 0 ? -1.0 : 1.0;
      LiftedState seed{q.x + s * fp.delta * v[0], q.y + s * fp.delta * v[1],
                       w0 + s * fp.delta * v[2], chart};
      MemberSpec ms;
      ms.seed = seed;
      ms.sense = away_sense(m, seed, q, false);
      ms.leaf = root.dir.is_infinite() ? std::numeric_limits<double>::infinity()
                                       : root.dir.p;
      ms.label = std::string(cname) + " crossing p=" +
                 (root.dir.is_infinite() ? std::string("inf")
                                         : fmt("%g", root.dir.p)) +
                 (side == 0 ? " side=-1" : " side=+1");
      half[side] = run_member(m, q, fp, pc.cls, ms);
    }
    // Stitch: reversed minus side, the point q itself, then the plus side.
    GeodesicTrace& g = half[1];
    std::vector<Point> joined;
    joined.reserve(half[0].planar.size() + half[1].planar.size() + 1);
    joined.insert(joined.end(), half[0].planar.rbegin(), half[0].planar.rend());
    joined.push_back(q);
    joined.insert(joined.end(), half[1].planar.begin(), half[1].planar.end());
    g.planar = std::move(joined);
    g.census.timelike += half[0].census.timelike;
    g.census.spacelike += half[0].census.spacelike;
    g.census.isotropic += half[0].census.isotropic;
    g.label = std::string(cname) + " crossing p=" +
              (root.dir.is_infinite() ? std::string("inf")
                                      : fmt("%g", root.dir.p));
    out.push_back(std::move(g));
  }
}

// ---- Ds / Dn / Df ---------------------------------------------------------

struct NodeData {
  double eps = 0.0;
  double e1 = 0.0, e2 = 0.0;  // restricted spectrum, larger real part first
  bool complex_pair = false;
};

NodeData node_data(const Metric& m, const PointClassification& pc) {
  if (!m.has_form11())
    throw std::invalid_argument(
        "D-class launches need the quadratic-discriminant normal form");
  if (!pc.eps) throw std::invalid_argument("missing restricted spectrum at q");
  NodeData nd;
  nd.eps = m.eps();
  nd.e1 = pc.eps->e1.real();
  nd.e2 = pc.eps->e2.real();
  nd.complex_pair = !pc.eps->is_real(1e-9);
  return nd;
}

LiftedState blown_seed(const Metric& m, double x, double p, double u,
                       double threshold) {
  if (u < 0.0)
    throw std::invalid_argument("seed outside the integrable region (u < 0)");
  std::array<double, 3> xyp = blowdown(m, {x, p, u});
  return LiftedState::make(xyp[0], xyp[1], Direction::affine(xyp[2]),
                           threshold);
}

void launch_ds(const Metric& m, const Point& q, const PointClassification& pc,
               const FamilyParams& fp, const std::vector<double>& leaves,
               std::vector<GeodesicTrace>& out) {
  NodeData nd = node_data(m, pc);
  // Generic members ride the unstable fan over the e1 eigendirection; the
  // leaf coordinate is the fan parameter in u = 1 + leaf |p|^(1/e1).
  for (double leaf : leaves) {
    for (int side : {-1, 1}) {
      double x = q.x + side * fp.delta;
      double p = nd.e1 * (x - q.x);
      double u = 1.0 + leaf * std::pow(std::abs(p), 1.0 / nd.e1);
      LiftedState seed = blown_seed(m, x, p, u, fp.integrator.switch_threshold);
      MemberSpec ms;
      ms.seed = seed;
      // leaf 0 sits on the isotropic surface exactly; see launch_z.
      ms.isotropic_field = leaf == 0.0;
      ms.sense = ms.isotropic_field ? iso_x_sense(m, seed, double(side))
                                    : away_sense(m, seed, q, false);
      ms.leaf = leaf;
      ms.label = "Ds generic leaf=" + fmt("%g", leaf) +
                 " side=" + fmt("%+g", double(side));
      out.push_back(run_member(m, q, fp, SingularClass::Ds, ms));
    }
  }
  // Isotropic separatrix pair on the e2 eigendirection, u = 1 exactly.
  for (int side : {-1, 1}) {
    double x = q.x + side * fp.delta;
    double p = nd.e2 * (x - q.x);
    LiftedState seed = blown_seed(m, x, p, 1.0, fp.integrator.switch_threshold);
    MemberSpec ms;
    ms.seed = seed;
    ms.isotropic_field = true;
    ms.sense = iso_x_sense(m, seed, double(side));
    ms.leaf = 0.0;
    ms.label = "Ds separatrix side=" + fmt("%+g", double(side));
    out.push_back(run_member(m, q, fp, SingularClass::Ds, ms));
  }
}

void launch_node_focus(const Metric& m, const Point& q,
                       const PointClassification& pc, const FamilyParams& fp,
                       const std::vector<double>& leaves,
                       std::vector<GeodesicTrace>& out) {
  NodeData nd = node_data(m, pc);
  const char* cname = to_string(pc.cls);
  std::vector<double> phases = fp.phases;
  if (phases.empty()) {
    // Avoid the x axis (seeds there sit on the discriminant curve itself)
    // and the p axis (planar displacement degenerates).
    for (double deg : {30.0, 60.0, 120.0, 150.0, 210.0, 240.0, 300.0, 330.0})
      phases.push_back(deg * M_PI / 180.0);
  }
  for (double leaf : leaves) {
    for (double th : phases) {
      double x = q.x + fp.delta * std::cos(th);
      double p = fp.delta * std::sin(th);
      LiftedState seed =
          blown_seed(m, x, p, 1.0 + leaf, fp.integrator.switch_threshold);
      MemberSpec ms;
      ms.seed = seed;
      // Outgoing means backward in the divided-by-p time, where the node is
      // a sink.  The planar away-rule is fooled here: some phases start with
      // the planar velocity pointing away from q while the 3D flow runs into
      // the sink, and those members stall at q instead of escaping.  In
      // either field the escaping end advances x toward sign(p).
      ms.isotropic_field = leaf == 0.0;  // u = 1 is the isotropic surface
      ms.sense = ms.isotropic_field ? iso_x_sense(m, seed, p)
                                    : (p > 0.0 ? -1.0 : 1.0);
      ms.leaf = leaf;
      ms.phase = th;
      // Slow quadratic crawl near the vertex; give escapes room.
      ms.t_max_floor = 1e5;
      ms.label = std::string(cname) + " generic leaf=" + fmt("%g", leaf) +
                 " phase=" + fmt("%g", th);
      out.push_back(run_member(m, q, fp, pc.cls, ms));
    }
  }
  if (pc.cls == SingularClass::Dn) {
    // Exceptional pair: the unique members tangent to the weak direction.
    // Seeded out on p = e2 x and traced inward; the inward flow contracts
    // onto the weak invariant curve, so the near window is exact to the
    // contraction factor (delta_in / delta)^(e1/e2).
    for (int side : {-1, 1}) {
      double x = q.x + side * fp.delta;
      double p = nd.e2 * (x - q.x);
      LiftedState seed =
          blown_seed(m, x, p, 1.0, fp.integrator.switch_threshold);
      MemberSpec ms;
      ms.seed = seed;
      ms.isotropic_field = true;  // the weak curve lies on u = 1
      ms.sense = iso_x_sense(m, seed, -double(side));  // inward
      ms.leaf = 0.0;
      ms.label = "Dn exceptional side=" + fmt("%+g", double(side));
      ms.sample_dx = fp.delta / 200.0;
      ms.stop_inner = fp.delta / 100.0;
      out.push_back(run_member(m, q, fp, SingularClass::Dn, ms));
    }
  }
}

}  // namespace

const char* to_string(FitModel f) {
  switch (f) {
    case FitModel::PowerExponent: return "power-exponent";
    case FitModel::QuadraticPlusQuartic: return "quadratic-plus-quartic";
    case FitModel::QuadraticCoefficient: return "quadratic-coefficient";
  }
  return "?";
}

std::vector<GeodesicTrace> launch_family(const Metric& m, const Point& q,
                                         const FamilyParams& params) {
  PointClassification pc = classify(m, q);
  if (pc.cls == SingularClass::NonGeneric)
    throw std::invalid_argument("point is not generic: " + pc.diagnostics);

  std::vector<double> leaves = params.leaves;
  std::vector<GeodesicTrace> out;
  switch (pc.cls) {
    case SingularClass::Z:
      if (leaves.empty()) leaves = {-1.0 / 48.0, 0.0, 1.0 / 48.0};
      launch_z(m, q, params, leaves, out);
      break;
    case SingularClass::C1:
    case SingularClass::C2:
    case SingularClass::C3:
      if (leaves.empty()) leaves = {-1.0, 0.0, 1.0};
      launch_c(m, q, pc, params, leaves, out);
      break;
    case SingularClass::Ds:
      if (leaves.empty()) leaves = {-0.15, -0.075, 0.0, 0.075, 0.15};
      launch_ds(m, q, pc, params, leaves, out);
      break;
    case SingularClass::Dn:
    case SingularClass::Df:
      // The leaf is the seed offset of the transverse blow-up coordinate.
      // Traced outward it grows like r^(1/Re e1) against the in-leaf radius
      // r, a factor ~1e6 (Dn) / ~1e11 (Df) between seed and exit, so O(1)
      // offsets blow the member off the vertex region before it reaches any
      // fit window.  These defaults exit at transverse offset ~1e-3.
      if (leaves.empty())
        leaves = pc.cls == SingularClass::Dn
                     ? std::vector<double>{-1e-9, 0.0, 1e-9}
                     : std::vector<double>{-1e-12, 0.0, 1e-12};
      launch_node_focus(m, q, pc, params, leaves, out);
      break;
    case SingularClass::NonGeneric:
      break;
  }
  return out;
}

FitResult fit_power_law(const std::vector<std::array<double, 2>>& samples,
                        double lo, double hi) {
  std::vector<std::array<double, 2>> logs;
  for (const auto& s : samples) {
    double ax = std::abs(s[0]);
    if (ax < lo || ax > hi) continue;
    double ay = std::abs(s[1]);
    if (ax == 0.0 || ay == 0.0) continue;
    logs.push_back({std::log(ax), std::log(ay)});
  }
  if (logs.size() < 20)
    throw std::invalid_argument("power-law fit needs at least 20 samples in "
                                "the window, got " +
                                std::to_string(logs.size()));
  double n = double(logs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& l : logs) {
    sx += l[0];
    sy += l[1];
    sxx += l[0] * l[0];
    sxy += l[0] * l[1];
  }
  double det = n * sxx - sx * sx;
  if (det <= 0.0) throw std::invalid_argument("degenerate power-law window");
  double slope = (n * sxy - sx * sy) / det;
  double icept = (sy - slope * sx) / n;
  double ss = 0;
  for (const auto& l : logs) {
    double r = l[1] - slope * l[0] - icept;
    ss += r * r;
  }
  FitResult fr;
  fr.model = FitModel::PowerExponent;
  fr.value = slope;
  fr.intercept = icept;
  fr.std_error = logs.size() > 2
                     ? std::sqrt(ss / (n - 2.0) * n / det)
                     : 0.0;
  fr.window_lo = lo;
  fr.window_hi = hi;
  fr.residual_rms = std::sqrt(ss / n);
  fr.n = long(logs.size());
  return fr;
}

FitResult fit_exponent(const GeodesicTrace& g, double lo, double hi) {
  if (g.planar.empty()) throw std::invalid_argument("empty trace");
  // Center on the closest approach to the base point: the semicubic turn for
  // isotropic members, q itself for through-traces.
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < g.planar.size(); ++i) {
    double d = std::hypot(g.planar[i].x - g.base.x, g.planar[i].y - g.base.y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  Point c = g.planar[best];
  // The turn falls between samples; a center off by one grid cell bends the
  // log-log slope at the window's near edge.  The planar velocity vanishes
  // where the trace meets the discriminant curve, so both coordinates are
  // locally parabolic in the flow parameter: refine with the three-point
  // quadratic's vertex.
  const auto& ss = g.parent.samples;
  if (ss.size() == g.planar.size() && best > 0 && best + 1 < ss.size()) {
    double t0 = ss[best - 1].t, t1 = ss[best].t, t2 = ss[best + 1].t;
    double cx = ss[best + 1].x - ss[best - 1].x;
    double cy = ss[best + 1].y - ss[best - 1].y;
    double cn = std::hypot(cx, cy);
    if (cn > 0.0 && ((t0 < t1 && t1 < t2) || (t0 > t1 && t1 > t2))) {
      cx /= cn;
      cy /= cn;
      // Chord coordinate (the tangent direction at a cusp) vs t.
      double a0 = (ss[best - 1].x - ss[best].x) * cx +
                  (ss[best - 1].y - ss[best].y) * cy;
      double a2 = (ss[best + 1].x - ss[best].x) * cx +
                  (ss[best + 1].y - ss[best].y) * cy;
      double d0 = (t0 - t1) * (t0 - t2), d2 = (t2 - t0) * (t2 - t1);
      double A = a0 / d0 + a2 / d2;
      double B = -a0 * (t1 + t2) / d0 - a2 * (t0 + t1) / d2;
      if (A != 0.0) {
        double tv = -B / (2.0 * A);
        if ((tv - t0) * (tv - t2) < 0.0) {
          auto quad = [&](double s0, double s1v, double s2) {
            double l0 = (tv - t1) * (tv - t2) / d0;
            double l1 = (tv - t0) * (tv - t2) / ((t1 - t0) * (t1 - t2));
            double l2 = (tv - t0) * (tv - t1) / d2;
            return s0 * l0 + s1v * l1 + s2 * l2;
          };
          c = {quad(ss[best - 1].x, ss[best].x, ss[best + 1].x),
               quad(ss[best - 1].y, ss[best].y, ss[best + 1].y)};
        }
      }
    }
  }
  std::vector<std::array<double, 2>> rel;
  rel.reserve(g.planar.size());
  for (const Point& p : g.planar) rel.push_back({p.x - c.x, p.y - c.y});
  return fit_power_law(rel, lo, hi);
}

namespace {

FitResult fit_through_origin(const GeodesicTrace& g, double lo, double hi,
                             FitModel model) {
  double sxx = 0, sxy = 0;
  std::vector<std::array<double, 2>> in;
  for (const Point& p : g.planar) {
    double dx = p.x - g.base.x;
    double ax = std::abs(dx);
    if (ax < lo || ax > hi) continue;
    double X = dx * dx;
    double Y = p.y - g.base.y;
    if (model == FitModel::QuadraticPlusQuartic) {
      Y -= X / 4.0;
      X *= X;
    }
    in.push_back({X, Y});
    sxx += X * X;
    sxy += X * Y;
  }
  if (in.size() < 20)
    throw std::invalid_argument("coefficient fit needs at least 20 samples in "
                                "the window, got " +
                                std::to_string(in.size()));
  if (sxx == 0.0) throw std::invalid_argument("degenerate fit window");
  double k = sxy / sxx;
  double ss = 0;
  for (const auto& s : in) {
    double r = s[1] - k * s[0];
    ss += r * r;
  }
  FitResult fr;
  fr.model = model;
  fr.value = k;
  fr.std_error = in.size() > 1
                     ? std::sqrt(ss / (double(in.size()) - 1.0) / sxx)
                     : 0.0;
  fr.window_lo = lo;
  fr.window_hi = hi;
  fr.residual_rms = std::sqrt(ss / double(in.size()));
  fr.n = long(in.size());
  return fr;
}

}  // namespace

FitResult fit_quartic_deviation(const GeodesicTrace& g, double delta) {
  return fit_through_origin(g, delta, 10.0 * delta,
                            FitModel::QuadraticPlusQuartic);
}

FitResult fit_quadratic_coefficient(const GeodesicTrace& g, double lo,
                                    double hi) {
  return fit_through_origin(g, lo, hi, FitModel::QuadraticCoefficient);
}

std::vector<MemberCensus> causal_census(const std::vector<GeodesicTrace>& family,
                                        double delta) {
  (void)delta;  // members already exclude the 2 delta zone at launch time
  std::vector<MemberCensus> rows;
  rows.reserve(family.size());
  for (size_t i = 0; i < family.size(); ++i) {
    MemberCensus r;
    r.member = i;
    r.counts = family[i].census;
    r.majority = family[i].census.majority();
    rows.push_back(r);
  }
  return rows;
}

namespace {

// Deterministic uniform in [lo, hi] from the raw engine stream; the
// distribution adapters are not bit-stable across standard libraries.
double uniform(std::mt19937& rng, double lo, double hi) {
  double u = double(rng() >> 8) * (1.0 / 16777216.0);
  return lo + u * (hi - lo);
}

double rand_mag(std::mt19937& rng) { return uniform(rng, 0.1, 2.0); }

double rand_sign(std::mt19937& rng) { return rng() & 1u ? 1.0 : -1.0; }

}  // namespace

double power_surface_defect(const std::array<double, 3>& lambda,
                            const std::array<double, 3>& c, int samples,
                            std::uint32_t seed) {
  if (lambda[0] == 0.0 || lambda[1] == 0.0)
    throw std::invalid_argument("zero eigenvalue in the power surface");
  double e1 = lambda[2] / lambda[0];
  double e2 = lambda[2] / lambda[1];
  bool c3_zero = c[2] == 0.0;
  if (c3_zero && (c[0] == 0.0 || c[1] == 0.0 || c[0] * c[1] > 0.0))
    throw std::invalid_argument(
        "c3 = 0 surface needs opposite signs on c1 and c2");
  std::mt19937 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    double s1, s2, s3;
    if (c3_zero) {
      s2 = rand_sign(rng) * rand_mag(rng);
      // c1 |s1|^e1 = -c2 |s2|^e2 pins |s1|.
      s1 = rand_sign(rng) *
           std::pow(-c[1] / c[0] * std::pow(std::abs(s2), e2), 1.0 / e1);
      s3 = rand_sign(rng) * rand_mag(rng);
    } else {
      s1 = rand_sign(rng) * rand_mag(rng);
      s2 = rand_sign(rng) * rand_mag(rng);
      s3 = -(c[0] * std::pow(std::abs(s1), e1) +
             c[1] * std::pow(std::abs(s2), e2)) /
           c[2];
    }
    double g1 = c[0] * e1 * std::pow(std::abs(s1), e1 - 1.0) *
                (s1 < 0.0 ? -1.0 : 1.0);
    double g2 = c[1] * e2 * std::pow(std::abs(s2), e2 - 1.0) *
                (s2 < 0.0 ? -1.0 : 1.0);
    double g3 = c[2];
    double v1 = lambda[0] * s1, v2 = lambda[1] * s2, v3 = lambda[2] * s3;
    double G = c[0] * std::pow(std::abs(s1), e1) +
               c[1] * std::pow(std::abs(s2), e2) + c[2] * s3;
    double d = g1 * v1 + g2 * v2 + g3 * v3 - lambda[2] * G;
    double scale = std::hypot(g1, g2, g3) * std::hypot(v1, v2, v3);
    if (scale > 0.0) worst = std::max(worst, std::abs(d) / scale);
  }
  return worst;
}

double power_surface_defect_complex(double al, double be, double c1, double c3,
                                    int samples, std::uint32_t seed) {
  if (al == 0.0 || c3 == 0.0)
    throw std::invalid_argument("need al != 0 and c3 != 0");
  double e = 1.0 / (2.0 * al);
  std::mt19937 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    double s1 = rand_sign(rng) * rand_mag(rng);
    double s2 = rand_sign(rng) * rand_mag(rng);
    double r2 = s1 * s1 + s2 * s2;
    double s3 = -c1 * std::pow(r2, e) / c3;
    double re = c1 * e * std::pow(r2, e - 1.0);
    double g1 = re * 2.0 * s1, g2 = re * 2.0 * s2, g3 = c3;
    double v1 = al * s1 + be * s2;
    double v2 = al * s2 - be * s1;
    double v3 = s3;
    double G = c1 * std::pow(r2, e) + c3 * s3;
    double d = g1 * v1 + g2 * v2 + g3 * v3 - G;
    double scale = std::hypot(g1, g2, g3) * std::hypot(v1, v2, v3);
    if (scale > 0.0) worst = std::max(worst, std::abs(d) / scale);
  }
  return worst;
}

double exceptional_plane_escape(const Metric& m, double p0, double u0,
                                double t_budget) {
  if (!m.has_form11())
    throw std::invalid_argument(
        "exceptional-plane launches need the quadratic-discriminant form");
  // Seeds hovering over the exceptional plane carry no outgoing geodesic:
  // the forward flow lifts u toward 1 while the fiber coordinate collapses,
  // so the planar projection stays pinned at the base point.  Measure the
  // worst planar excursion until u leaves the plane's neighborhood; past
  // u = 1/2 the trajectory is an ordinary vertex approach, not an
  // exceptional-direction candidate.
  BlowUpConfig cfg;
  cfg.t_max = t_budget;
  cfg.sample_dt = t_budget / 2000.0;
  cfg.stop = [](double, const BlowUpState& s) { return s.u >= 0.5; };
  BlowUpTrace tr = integrate_blowup(m, {0.0, p0, u0}, cfg);
  double worst = 0.0;
  auto visit = [&](const BlowUpState& s) {
    std::array<double, 3> xyp = blowdown(m, {s.x, s.p, s.u});
    worst = std::max(worst, std::hypot(xyp[0], xyp[1]));
  };
  for (const BlowUpSample& s : tr.samples) visit({s.x, s.p, s.u});
  visit(tr.last);
  return worst;
}

double line_restriction_bound(const Metric& m, double y0, double x_lo,
                              double x_hi, double residual_tol) {
  if (residual_tol <= 0.0) throw std::invalid_argument("need a positive tol");
  const int kGrid = 101;
  double bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    double x = x_lo + (x_hi - x_lo) * double(i) / double(kGrid - 1);
    Point q{x, y0};
    double b = m.b_at(q);
    double scale = std::abs(m.a_at(q)) + std::abs(b) + std::abs(m.c_at(q));
    if (std::abs(b) > 1e-12 * std::max(1.0, scale))
      throw std::invalid_argument(
          "line restriction bound needs b = 0 along the line");
    // Second extremal equation for y = y0, vy = 0 reduces to a_y vx^2 = 0
    // (up to the factor 1/2); the largest compliant speed follows.
    double ay = m.a().fy->eval(q.x, q.y);
    if (ay != 0.0)
      bound = std::min(bound, std::sqrt(2.0 * residual_tol / std::abs(ay)));
  }
  return bound;
}

}  // namespace sigflow
