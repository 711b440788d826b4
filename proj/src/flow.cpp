#include "sigflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace sigflow {

const char* to_string(SlopeChart c) {
  return c == SlopeChart::Affine ? "affine" : "inverted";
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::ParameterBudget: return "parameter_budget";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::StepUnderflow: return "step_underflow";
    case StopReason::Arrest: return "arrest";
    case StopReason::LeftRegion: return "left_region";
    case StopReason::StopEvent: return "stop_event";
    case StopReason::StopPredicate: return "stop_predicate";
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::ChartSwitch: return "chart_switch";
    case EventKind::DiscriminantCross: return "discriminant_cross";
    case EventKind::Arrest: return "arrest";
  }
  return "?";
}

Direction LiftedState::direction() const {
  if (chart == SlopeChart::Affine) return Direction::affine(w);
  if (w == 0.0) return Direction::infinity();
  return Direction::affine(1.0 / w);
}

LiftedState LiftedState::make(double x, double y, const Direction& d,
                              double threshold) {
  LiftedState s;
  s.x = x;
  s.y = y;
  if (d.is_infinite()) {
    s.chart = SlopeChart::Inverted;
    s.w = 0.0;
  } else if (std::abs(d.p) <= threshold) {
    s.chart = SlopeChart::Affine;
    s.w = d.p;
  } else {
    s.chart = SlopeChart::Inverted;
    s.w = 1.0 / d.p;
  }
  return s;
}

std::array<double, 3> field_isotropic(const Metric& m, const LiftedState& s) {
  FJet j = s.chart == SlopeChart::Affine ? f_jet(m, s.x, s.y, s.w)
                                         : g_jet(m, s.x, s.y, s.w);
  if (s.chart == SlopeChart::Affine)
    return {0.5 * j.Fp, 0.5 * s.w * j.Fp, -0.5 * (j.Fx + s.w * j.Fy)};
  // dx/dy = s: the roles of x and y swap, G takes the place of F.
  return {0.5 * s.w * j.Fp, 0.5 * j.Fp, -0.5 * (j.Fy + s.w * j.Fx)};
}

std::array<double, 3> field_lifted(const Metric& m, const LiftedState& s) {
  Point q{s.x, s.y};
  double Delta = discriminant(m, q);
  CubicM cub = cubic_M(m, q);
  if (s.chart == SlopeChart::Affine)
    return {2.0 * Delta, 2.0 * s.w * Delta, cub.eval(s.w)};
  return {2.0 * s.w * Delta, 2.0 * Delta, cub.eval_inverted(s.w)};
}

BlowUpState blowup(const Metric& m, double x, double y, double p) {
  double eps = m.eps();  // throws unless form (11)
  if (std::abs(p) < 1e-300)
    throw std::invalid_argument("blowup is undefined on the plane p = 0");
  return {x, p, (y - eps * x * x) / (p * p)};
}

std::array<double, 3> blowdown(const Metric& m, const BlowUpState& s) {
  double eps = m.eps();
  return {s.x, eps * s.x * s.x + s.u * s.p * s.p, s.p};
}

std::array<double, 3> field_blowup(const Metric& m, const BlowUpState& s) {
  double eps = m.eps();
  const CoeffDerivs& om = m.omega();
  double y = eps * s.x * s.x + s.u * s.p * s.p;
  double w = om.f->eval(s.x, y);
  double wx = om.fx->eval(s.x, y);
  double wy = om.fy->eval(s.x, y);
  double M1 = s.p * (s.u * s.p * wy + wx) * (1.0 - s.u) + w * (2.0 - s.u);
  double N1 = s.u * s.p * s.p * wy + s.p * wx + w;
  return {2.0 * w * s.u * s.p, s.p * M1 - 2.0 * eps * s.x * w,
          (s.u - 1.0) * 2.0 * s.u * N1};
}

CausalType CausalCensus::majority() const {
  if (isotropic >= timelike && isotropic >= spacelike)
    return CausalType::Isotropic;
  return timelike >= spacelike ? CausalType::Timelike : CausalType::Spacelike;
}

namespace {

// Dormand-Prince 5(4) pair with the first-same-as-last stage and the
// quartic dense-output interpolant.
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                 kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
constexpr double kD1 = -12715105075.0 / 11282082432.0,
                 kD3 = 87487479700.0 / 32700410799.0,
                 kD4 = -10690763975.0 / 1880347072.0,
                 kD5 = 701980252875.0 / 199316789632.0,
                 kD6 = -1453857185.0 / 822651844.0,
                 kD7 = 69997945.0 / 29380423.0;

template <int N>
using Vec = std::array<double, N>;

template <int N>
bool all_finite(const Vec<N>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

template <int N>
struct DenseSeg {
  double t0 = 0.0, h = 0.0;
  Vec<N> c1{}, c2{}, c3{}, c4{}, c5{};

  Vec<N> eval(double t) const {
    double th = (t - t0) / h, th1 = 1.0 - th;
    Vec<N> y;
    for (int i = 0; i < N; ++i)
      y[i] = c1[i] +
             th * (c2[i] + th1 * (c3[i] + th * (c4[i] + th1 * c5[i])));
    return y;
  }
};

enum class StepStatus { Accepted, Underflow, AtLimit };

// One adaptive stepper instance per driver; Field is any callable
// (double t, const Vec<N>&) -> Vec<N>.
template <int N, class Field>
class Stepper {
 public:
  Stepper(Field f, double rtol, double atol, double hmax)
      : f_(f), rtol_(rtol), atol_(atol), hmax_(hmax) {}

  bool start(double t0, const Vec<N>& y0, double h_init, double span) {
    t_ = t0;
    y_ = y0;
    k1_ = f_(t0, y0);
    if (!all_finite<N>(k1_)) return false;
    h_ = h_init > 0.0 ? h_init : initial_step(span);
    return true;
  }

  // Re-evaluate the derivative after the driver mutated the state.
  bool reset(double t, const Vec<N>& y) {
    t_ = t;
    y_ = y;
    k1_ = f_(t, y);
    return all_finite<N>(k1_);
  }

  double t() const { return t_; }
  const Vec<N>& y() const { return y_; }
  const Vec<N>& deriv() const { return k1_; }

  // Advances up to t_limit; on success fills seg with the dense interpolant
  // of the accepted step. attempts() counts every trial step.
  StepStatus advance(double t_limit, DenseSeg<N>& seg) {
    bool rejected = false;
    for (;;) {
      ++attempts_;
      double hmin = 1e-13 * std::max(1.0, std::abs(t_));
      if (t_limit - t_ < hmin) return StepStatus::AtLimit;
      double h = std::min({h_, hmax_, t_limit - t_});
      if (h < hmin) return StepStatus::Underflow;

      Vec<N> k2, k3, k4, k5, k6, k7, yt, y5;
      for (int i = 0; i < N; ++i) yt[i] = y_[i] + h * kA21 * k1_[i];
      k2 = f_(t_ + kC2 * h, yt);
      for (int i = 0; i < N; ++i)
        yt[i] = y_[i] + h * (kA31 * k1_[i] + kA32 * k2[i]);
      k3 = f_(t_ + kC3 * h, yt);
      for (int i = 0; i < N; ++i)
        yt[i] = y_[i] + h * (kA41 * k1_[i] + kA42 * k2[i] + kA43 * k3[i]);
      k4 = f_(t_ + kC4 * h, yt);
      for (int i = 0; i < N; ++i)
        yt[i] = y_[i] + h * (kA51 * k1_[i] + kA52 * k2[i] + kA53 * k3[i] +
                             kA54 * k4[i]);
      k5 = f_(t_ + kC5 * h, yt);
      for (int i = 0; i < N; ++i)
        yt[i] = y_[i] + h * (kA61 * k1_[i] + kA62 * k2[i] + kA63 * k3[i] +
                             kA64 * k4[i] + kA65 * k5[i]);
      k6 = f_(t_ + h, yt);
      for (int i = 0; i < N; ++i)
        y5[i] = y_[i] + h * (kA71 * k1_[i] + kA73 * k3[i] + kA74 * k4[i] +
                             kA75 * k5[i] + kA76 * k6[i]);
      k7 = f_(t_ + h, y5);

      double err = 0.0;
      bool finite = all_finite<N>(k2) && all_finite<N>(k3) &&
                    all_finite<N>(k4) && all_finite<N>(k5) &&
                    all_finite<N>(k6) && all_finite<N>(k7) &&
                    all_finite<N>(y5);
      if (finite) {
        for (int i = 0; i < N; ++i) {
          double e = h * (kE1 * k1_[i] + kE3 * k3[i] + kE4 * k4[i] +
                          kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
          double sc =
              atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(y5[i]));
          err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / N);
      }
      if (!finite || !(err <= 1.0)) {
        double fac = finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.5;
        h_ = h * std::min(fac, 0.5);
        rejected = true;
        continue;
      }

      seg.t0 = t_;
      seg.h = h;
      for (int i = 0; i < N; ++i) {
        double ydiff = y5[i] - y_[i];
        double bspl = h * k1_[i] - ydiff;
        seg.c1[i] = y_[i];
        seg.c2[i] = ydiff;
        seg.c3[i] = bspl;
        seg.c4[i] = ydiff - h * k7[i] - bspl;
        seg.c5[i] = h * (kD1 * k1_[i] + kD3 * k3[i] + kD4 * k4[i] +
                         kD5 * k5[i] + kD6 * k6[i] + kD7 * k7[i]);
      }
      t_ += h;
      y_ = y5;
      k1_ = k7;
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      fac = std::min(5.0, std::max(0.2, fac));
      if (rejected) fac = std::min(1.0, fac);
      h_ = h * fac;
      return StepStatus::Accepted;
    }
  }

  long attempts() const { return attempts_; }

 private:
  double initial_step(double span) {
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < N; ++i) {
      double sc = atol_ + rtol_ * std::abs(y_[i]);
      d0 += (y_[i] / sc) * (y_[i] / sc);
      d1 += (k1_[i] / sc) * (k1_[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    Vec<N> y1;
    for (int i = 0; i < N; ++i) y1[i] = y_[i] + h0 * k1_[i];
    Vec<N> f1 = f_(t_ + h0, y1);
    double d2 = 0.0;
    if (all_finite<N>(f1)) {
      for (int i = 0; i < N; ++i) {
        double sc = atol_ + rtol_ * std::abs(y_[i]);
        d2 += ((f1[i] - k1_[i]) / sc) * ((f1[i] - k1_[i]) / sc);
      }
      d2 = std::sqrt(d2 / N) / h0;
    }
    double dm = std::max(d1, d2);
    double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                            : std::pow(0.01 / dm, 0.2);
    double h = std::min({100.0 * h0, h1, hmax_, span});
    return std::max(h, 1e-12);
  }

  Field f_;
  double rtol_, atol_, hmax_;
  double t_ = 0.0, h_ = 0.0;
  Vec<N> y_{}, k1_{};
  long attempts_ = 0;
};

// First time in (ta, tb] where pred flips from pred(ta)'s value; assumes one
// sign change. Returns the "after" side of the crossing.
template <class Pred>
double bisect_flip(double ta, double tb, Pred after) {
  for (int i = 0; i < 200; ++i) {
    double tm = 0.5 * (ta + tb);
    if (!(tm > ta && tm < tb)) break;
    if (after(tm))
      tb = tm;
    else
      ta = tm;
  }
  return tb;
}

double norm3(const Vec<3>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

LiftedState flip_chart(const LiftedState& s) {
  LiftedState r = s;
  r.chart = s.chart == SlopeChart::Affine ? SlopeChart::Inverted
                                          : SlopeChart::Affine;
  r.w = 1.0 / s.w;
  return r;
}

// Keeps the planar direction of travel continuous across a chart switch;
// falls back to the slope coordinate when the planar velocity vanishes
// (criminant points).
double continue_sense(const Vec<3>& f_old, double sense_old,
                      const Vec<3>& f_new, double w_new) {
  double vx = sense_old * f_old[0], vy = sense_old * f_old[1];
  double dot = vx * f_new[0] + vy * f_new[1];
  double scale = (std::abs(vx) + std::abs(vy)) *
                 (std::abs(f_new[0]) + std::abs(f_new[1]));
  if (std::abs(dot) > 1e-14 * std::max(1.0, scale))
    return dot >= 0.0 ? 1.0 : -1.0;
  double desired = -(w_new * w_new) * sense_old * f_old[2];
  double dot3 = desired * f_new[2];
  if (dot3 != 0.0) return dot3 > 0.0 ? 1.0 : -1.0;
  return sense_old;
}

std::string describe_point(double x, double y) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%.6g, %.6g)", x, y);
  return buf;
}

std::string arrest_note(const Metric& m, double x, double y) {
  try {
    Point proj = project_to_discriminant(m, {x, y});
    PointClassification pc = classify(m, proj);
    return std::string("near ") + to_string(pc.cls) + " point " +
           describe_point(proj.x, proj.y);
  } catch (const std::exception&) {
    return "near stationary point " + describe_point(x, y);
  }
}

enum class ChartFieldKind { Lifted, Isotropic };

Trace integrate_chartfield(const Metric& m, const LiftedState& s0,
                           const IntegratorConfig& cfg, ChartFieldKind kind) {
  Trace tr;
  double sense = cfg.sense >= 0.0 ? 1.0 : -1.0;
  SlopeChart chart = s0.chart;

  auto raw_field = [&](const LiftedState& s) {
    return kind == ChartFieldKind::Lifted ? field_lifted(m, s)
                                          : field_isotropic(m, s);
  };
  auto field = [&](double, const Vec<3>& v) {
    LiftedState s{v[0], v[1], v[2], chart};
    Vec<3> f = raw_field(s);
    return Vec<3>{sense * f[0], sense * f[1], sense * f[2]};
  };

  double hmax = cfg.h_max > 0.0 ? cfg.h_max : cfg.t_max / 10.0;
  Stepper<3, decltype(field)> st(field, cfg.rtol, cfg.atol, hmax);

  auto make_state = [&](const Vec<3>& v) {
    return LiftedState{v[0], v[1], v[2], chart};
  };

  // Output bookkeeping: uniform grid or explicit times, plus event samples.
  std::vector<double> wanted_times = cfg.sample_times;
  std::sort(wanted_times.begin(), wanted_times.end());
  size_t time_idx = 0;
  double next_grid = cfg.sample_dt > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  auto next_sample_time = [&]() {
    if (!wanted_times.empty())
      return time_idx < wanted_times.size()
                 ? wanted_times[time_idx]
                 : std::numeric_limits<double>::infinity();
    return next_grid;
  };
  auto consume_sample_time = [&]() {
    if (!wanted_times.empty())
      ++time_idx;
    else
      next_grid += cfg.sample_dt;
  };

  auto emit = [&](double t, const Vec<3>& v, int event_idx) {
    if (!tr.samples.empty() && event_idx < 0 &&
        t <= tr.samples.back().t + 1e-300)
      return;
    LiftedState s = make_state(v);
    Point q{s.x, s.y};
    TraceSample smp;
    smp.t = t;
    smp.x = s.x;
    smp.y = s.y;
    smp.w = s.w;
    smp.chart = chart;
    smp.Delta = discriminant(m, q);
    FJet j = chart == SlopeChart::Affine ? f_jet(m, s.x, s.y, s.w)
                                         : g_jet(m, s.x, s.y, s.w);
    smp.F = j.F;
    smp.causal = causal_type(m, q, s.direction());
    smp.event = event_idx;
    tr.samples.push_back(smp);
  };

  // The x-grid emitter fills in samples every |sample_dx| of planar x. Fit
  // windows live on x-scales the flow parameter crawls over (the field slows
  // quadratically near a singular point), so a pure time grid either starves
  // the far window or floods the near one.
  double x_emit = s0.x;
  auto emit_grid_upto = [&](double tb, const DenseSeg<3>& seg) {
    std::vector<std::pair<double, Vec<3>>> due;
    for (;;) {
      double ts = next_sample_time();
      if (ts > tb) break;
      if (ts >= seg.t0) due.push_back({ts, seg.eval(ts)});
      consume_sample_time();
    }
    if (cfg.sample_dx > 0.0) {
      double xe = seg.eval(tb)[0];
      for (;;) {
        double dir = xe > x_emit ? 1.0 : -1.0;
        if (std::abs(xe - x_emit) < cfg.sample_dx) break;
        double target = x_emit + dir * cfg.sample_dx;
        // x(seg.t0) sits within one cell of x_emit, so the crossing is
        // bracketed even when x is not monotone inside the step.
        double tc = bisect_flip(seg.t0, tb, [&](double t) {
          return dir > 0.0 ? seg.eval(t)[0] >= target
                           : seg.eval(t)[0] <= target;
        });
        due.push_back({tc, seg.eval(tc)});
        x_emit = target;
      }
    }
    std::sort(due.begin(), due.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    for (const auto& d : due) emit(d.first, d.second, -1);
  };

  auto finish = [&](StopReason why, double t, const Vec<3>& v,
                    const std::string& note) {
    emit(t, v, -1);
    tr.stop = why;
    tr.t_end = t;
    tr.last = make_state(v);
    tr.steps = st.attempts();
    tr.note = note;
    return tr;
  };

  Vec<3> y0{s0.x, s0.y, s0.w};
  if (!st.start(0.0, y0, cfg.h_init, cfg.t_max))
    return finish(StopReason::StepUnderflow, 0.0, y0,
                  "field not finite at the initial state");
  emit(0.0, y0, -1);

  {
    Vec<3> f0 = st.deriv();
    if (norm3(f0) < cfg.arrest_band) {
      tr.events.push_back({EventKind::Arrest, 0.0, make_state(y0),
                           arrest_note(m, y0[0], y0[1])});
      tr.samples.back().event = int(tr.events.size()) - 1;
      tr.stop = StopReason::Arrest;
      tr.last = make_state(y0);
      return tr;
    }
  }

  bool chart_armed = true;
  double zone = chart == SlopeChart::Affine ? cfg.switch_threshold
                                            : 1.0 / cfg.switch_threshold;

  while (true) {
    if (st.attempts() >= cfg.max_steps)
      return finish(StopReason::MaxSteps, st.t(), st.y(), "");
    if (st.t() >= cfg.t_max * (1.0 - 1e-14))
      return finish(StopReason::ParameterBudget, st.t(), st.y(), "");

    double ta = st.t();
    Vec<3> ya = st.y();
    DenseSeg<3> seg;
    StepStatus ss = st.advance(cfg.t_max, seg);
    if (ss == StepStatus::AtLimit)
      return finish(StopReason::ParameterBudget, ta, ya, "");
    if (ss != StepStatus::Accepted)
      return finish(StopReason::StepUnderflow, ta, ya,
                    "step size underflow at t = " + std::to_string(ta));
    double tb = st.t();
    const Vec<3>& yb = st.y();

    // Earliest terminal event inside the step wins.
    double t_cut = tb;
    enum class Cut { None, Stop, Chart, Bounds } cut = Cut::None;

    if (cfg.stop_event) {
      double ga = cfg.stop_event(ta, make_state(ya));
      double gb = cfg.stop_event(tb, make_state(yb));
      if (ga != 0.0 && ((ga < 0.0) != (gb < 0.0) || gb == 0.0)) {
        double tc = bisect_flip(ta, tb, [&](double t) {
          double g = cfg.stop_event(t, make_state(seg.eval(t)));
          return (g < 0.0) != (ga < 0.0) || g == 0.0;
        });
        if (tc < t_cut) {
          t_cut = tc;
          cut = Cut::Stop;
        }
      }
    }

    if (chart_armed) {
      double gb = std::abs(yb[2]) - zone;
      double ga = std::abs(ya[2]) - zone;
      if (ga <= 0.0 && gb > 0.0) {
        double tc = bisect_flip(
            ta, tb, [&](double t) { return std::abs(seg.eval(t)[2]) > zone; });
        if (tc < t_cut) {
          t_cut = tc;
          cut = Cut::Chart;
        }
      }
    }

    if (cfg.bounds && !cfg.bounds->contains(yb[0], yb[1])) {
      double tc = bisect_flip(ta, tb, [&](double t) {
        Vec<3> v = seg.eval(t);
        return !cfg.bounds->contains(v[0], v[1]);
      });
      if (tc < t_cut) {
        t_cut = tc;
        cut = Cut::Bounds;
      }
    }

    // Discriminant crossings are recorded but do not stop the run.
    {
      double da = discriminant(m, {ya[0], ya[1]});
      Vec<3> vcut = seg.eval(t_cut);
      double db = discriminant(m, {vcut[0], vcut[1]});
      if (da != 0.0 && ((da < 0.0) != (db < 0.0))) {
        double tc = bisect_flip(ta, t_cut, [&](double t) {
          Vec<3> v = seg.eval(t);
          double d = discriminant(m, {v[0], v[1]});
          return (d < 0.0) != (da < 0.0) || d == 0.0;
        });
        Vec<3> vc = seg.eval(tc);
        emit_grid_upto(tc, seg);
        tr.events.push_back({EventKind::DiscriminantCross, tc, make_state(vc),
                             "Delta = 0 at " + describe_point(vc[0], vc[1])});
        emit(tc, vc, int(tr.events.size()) - 1);
      }
    }

    emit_grid_upto(t_cut, seg);

    if (cut == Cut::Stop) {
      Vec<3> vc = seg.eval(t_cut);
      return finish(StopReason::StopEvent, t_cut, vc, "");
    }
    if (cut == Cut::Bounds) {
      Vec<3> vc = seg.eval(t_cut);
      return finish(StopReason::LeftRegion, t_cut, vc, "");
    }
    if (cut == Cut::Chart) {
      Vec<3> vc = seg.eval(t_cut);
      LiftedState before = make_state(vc);
      Vec<3> f_old = raw_field(before);
      LiftedState after = flip_chart(before);
      chart = after.chart;
      zone = chart == SlopeChart::Affine ? cfg.switch_threshold
                                         : 1.0 / cfg.switch_threshold;
      Vec<3> f_new = raw_field(after);
      sense = continue_sense(f_old, sense, f_new, after.w);
      chart_armed = false;
      Vec<3> vnew{after.x, after.y, after.w};
      tr.events.push_back({EventKind::ChartSwitch, t_cut, after,
                           std::string("to ") + to_string(chart)});
      emit(t_cut, vnew, int(tr.events.size()) - 1);
      if (!st.reset(t_cut, vnew))
        return finish(StopReason::StepUnderflow, t_cut, vnew,
                      "field not finite after chart switch");
      continue;
    }

    if (!chart_armed && std::abs(yb[2]) < zone * (1.0 - 1e-12))
      chart_armed = true;

    {
      LiftedState sb = make_state(yb);
      Vec<3> fb = raw_field(sb);
      if (norm3(fb) < cfg.arrest_band) {
        tr.events.push_back(
            {EventKind::Arrest, tb, sb, arrest_note(m, yb[0], yb[1])});
        emit(tb, yb, int(tr.events.size()) - 1);
        tr.stop = StopReason::Arrest;
        tr.t_end = tb;
        tr.last = sb;
        tr.steps = st.attempts();
        return tr;
      }
    }

    if (cfg.stop && cfg.stop(tb, make_state(yb)))
      return finish(StopReason::StopPredicate, tb, yb, "");
  }
}

}  // namespace

Trace integrate_lifted(const Metric& m, const LiftedState& s0,
                       const IntegratorConfig& cfg) {
  return integrate_chartfield(m, s0, cfg, ChartFieldKind::Lifted);
}

Trace integrate_isotropic(const Metric& m, const LiftedState& s0,
                          const IntegratorConfig& cfg) {
  return integrate_chartfield(m, s0, cfg, ChartFieldKind::Isotropic);
}

BlowUpTrace integrate_blowup(const Metric& m, const BlowUpState& s0,
                             const BlowUpConfig& cfg) {
  BlowUpTrace tr;
  double sense = cfg.sense >= 0.0 ? 1.0 : -1.0;
  auto field = [&](double, const Vec<3>& v) {
    Vec<3> f = field_blowup(m, {v[0], v[1], v[2]});
    return Vec<3>{sense * f[0], sense * f[1], sense * f[2]};
  };
  double hmax = cfg.h_max > 0.0 ? cfg.h_max : cfg.t_max / 10.0;
  Stepper<3, decltype(field)> st(field, cfg.rtol, cfg.atol, hmax);

  double theta = 0.0;
  double px = s0.x, pp = s0.p;  // previous (x, p) for angle accumulation
  auto turn = [&](double x, double p) {
    double cross = px * p - x * pp;
    double dot = px * x + pp * p;
    if (cross != 0.0 || dot > 0.0) theta += std::atan2(cross, dot);
    px = x;
    pp = p;
  };

  double next_grid = cfg.sample_dt > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  auto emit = [&](double t, const Vec<3>& v) {
    if (!tr.samples.empty() && t <= tr.samples.back().t) return;
    tr.samples.push_back({t, v[0], v[1], v[2], theta});
  };
  auto state_of = [](const Vec<3>& v) { return BlowUpState{v[0], v[1], v[2]}; };

  Vec<3> y0{s0.x, s0.p, s0.u};
  double theta0 = std::atan2(s0.p, s0.x);
  theta = theta0;
  auto finish = [&](StopReason why, double t, const Vec<3>& v) {
    emit(t, v);
    tr.stop = why;
    tr.t_end = t;
    tr.last = state_of(v);
    tr.steps = st.attempts();
    tr.winding = (theta - theta0) / (2.0 * M_PI);
    return tr;
  };

  if (!st.start(0.0, y0, cfg.h_init, cfg.t_max))
    return finish(StopReason::StepUnderflow, 0.0, y0);
  tr.samples.push_back({0.0, s0.x, s0.p, s0.u, theta});
  next_grid = cfg.sample_dt > 0.0 ? cfg.sample_dt : next_grid;

  while (true) {
    if (st.attempts() >= cfg.max_steps)
      return finish(StopReason::MaxSteps, st.t(), st.y());
    if (st.t() >= cfg.t_max * (1.0 - 1e-14))
      return finish(StopReason::ParameterBudget, st.t(), st.y());

    double ta = st.t();
    Vec<3> ya = st.y();
    DenseSeg<3> seg;
    StepStatus ss = st.advance(cfg.t_max, seg);
    if (ss == StepStatus::AtLimit)
      return finish(StopReason::ParameterBudget, ta, ya);
    if (ss != StepStatus::Accepted)
      return finish(StopReason::StepUnderflow, ta, ya);
    double tb = st.t();
    const Vec<3>& yb = st.y();

    double t_cut = tb;
    bool radius_cut = false;
    if (cfg.stop_radius > 0.0 &&
        std::hypot(yb[0], yb[1]) >= cfg.stop_radius &&
        std::hypot(ya[0], ya[1]) < cfg.stop_radius) {
      t_cut = bisect_flip(ta, tb, [&](double t) {
        Vec<3> v = seg.eval(t);
        return std::hypot(v[0], v[1]) >= cfg.stop_radius;
      });
      radius_cut = true;
    }

    // Accumulate the polar angle on a fixed subdivision of the step so a
    // fast focus cannot alias a whole turn away.
    const int kSub = 8;
    for (int j = 1; j <= kSub; ++j) {
      double t = ta + (t_cut - ta) * j / kSub;
      Vec<3> v = seg.eval(t);
      turn(v[0], v[1]);
      if (next_grid <= t) {
        while (next_grid <= t) next_grid += cfg.sample_dt;
        emit(t, v);
      }
    }

    if (radius_cut)
      return finish(StopReason::StopPredicate, t_cut, seg.eval(t_cut));

    Vec<3> fb = field(tb, yb);
    if (norm3(fb) < cfg.arrest_band)
      return finish(StopReason::Arrest, tb, yb);
    if (cfg.stop && cfg.stop(tb, state_of(yb)))
      return finish(StopReason::StopPredicate, tb, yb);
  }
}

std::array<double, 4> el_field(const Metric& m, const NaturalState& s) {
  Point q{s.x, s.y};
  double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
  double ax = m.a().fx->eval(s.x, s.y), ay = m.a().fy->eval(s.x, s.y);
  double bx = m.b().fx->eval(s.x, s.y), by = m.b().fy->eval(s.x, s.y);
  double cx = m.c().fx->eval(s.x, s.y), cy = m.c().fy->eval(s.x, s.y);
  double r1 = (cx - 2.0 * by) * s.vy * s.vy - 2.0 * ay * s.vx * s.vy -
              ax * s.vx * s.vx;
  double r2 = (ay - 2.0 * bx) * s.vx * s.vx - 2.0 * cx * s.vx * s.vy -
              cy * s.vy * s.vy;
  double det = a * c - b * b;
  double xdd = (c * (0.5 * r1) - b * (0.5 * r2)) / det;
  double ydd = (a * (0.5 * r2) - b * (0.5 * r1)) / det;
  return {s.vx, s.vy, xdd, ydd};
}

NaturalTrace el_integrate(const Metric& m, const NaturalState& s0,
                          const NaturalConfig& cfg) {
  NaturalTrace tr;
  double sense = cfg.sense >= 0.0 ? 1.0 : -1.0;
  auto field = [&](double, const Vec<4>& v) {
    std::array<double, 4> f = el_field(m, {v[0], v[1], v[2], v[3]});
    return Vec<4>{sense * f[0], sense * f[1], sense * f[2], sense * f[3]};
  };
  double hmax = cfg.h_max > 0.0 ? cfg.h_max : cfg.t_max / 10.0;
  Stepper<4, decltype(field)> st(field, cfg.rtol, cfg.atol, hmax);

  auto degenerate = [&](const Vec<4>& v) {
    Point q{v[0], v[1]};
    double a = m.a_at(q), b = m.b_at(q), c = m.c_at(q);
    double scale = std::abs(a) + std::abs(b) + std::abs(c);
    return std::abs(a * c - b * b) <
           cfg.delta_floor * std::max(1.0, scale * scale);
  };

  std::vector<double> wanted_times = cfg.sample_times;
  std::sort(wanted_times.begin(), wanted_times.end());
  size_t time_idx = 0;
  double next_grid = cfg.sample_dt > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  auto next_sample_time = [&]() {
    if (!wanted_times.empty())
      return time_idx < wanted_times.size()
                 ? wanted_times[time_idx]
                 : std::numeric_limits<double>::infinity();
    return next_grid;
  };
  auto consume_sample_time = [&]() {
    if (!wanted_times.empty())
      ++time_idx;
    else
      next_grid += cfg.sample_dt;
  };
  auto emit = [&](double t, const Vec<4>& v) {
    if (!tr.samples.empty() && t <= tr.samples.back().t) return;
    tr.samples.push_back(
        {t, v[0], v[1], v[2], v[3], discriminant(m, {v[0], v[1]})});
  };
  auto finish = [&](StopReason why, double t, const Vec<4>& v,
                    const std::string& note) {
    emit(t, v);
    tr.stop = why;
    tr.t_end = t;
    tr.last = {v[0], v[1], v[2], v[3]};
    tr.steps = st.attempts();
    tr.note = note;
    return tr;
  };

  Vec<4> y0{s0.x, s0.y, s0.vx, s0.vy};
  if (degenerate(y0))
    return finish(StopReason::Arrest, 0.0, y0,
                  "discriminant approach at the initial state");
  if (!st.start(0.0, y0, cfg.h_init, cfg.t_max))
    return finish(StopReason::StepUnderflow, 0.0, y0,
                  "field not finite at the initial state");
  emit(0.0, y0);

  while (true) {
    if (st.attempts() >= cfg.max_steps)
      return finish(StopReason::MaxSteps, st.t(), st.y(), "");
    if (st.t() >= cfg.t_max * (1.0 - 1e-14))
      return finish(StopReason::ParameterBudget, st.t(), st.y(), "");

    double ta = st.t();
    Vec<4> ya = st.y();
    DenseSeg<4> seg;
    StepStatus ss = st.advance(cfg.t_max, seg);
    if (ss == StepStatus::AtLimit)
      return finish(StopReason::ParameterBudget, ta, ya, "");
    if (ss != StepStatus::Accepted) {
      if (degenerate(ya))
        return finish(StopReason::Arrest, ta, ya,
                      "discriminant approach (step collapse)");
      return finish(StopReason::StepUnderflow, ta, ya, "");
    }
    double tb = st.t();
    const Vec<4>& yb = st.y();

    for (;;) {
      double ts = next_sample_time();
      if (ts > tb) break;
      if (ts >= ta) emit(ts, seg.eval(ts));
      consume_sample_time();
    }

    if (degenerate(yb))
      return finish(StopReason::Arrest, tb, yb, "discriminant approach");
    if (cfg.stop && cfg.stop(tb, {yb[0], yb[1], yb[2], yb[3]}))
      return finish(StopReason::StopPredicate, tb, yb, "");
  }
}

GeodesicTrace trace_geodesic(const Metric& m, const Point& q0,
                             const Direction& dir, double sense,
                             const IntegratorConfig& cfg) {
  DiscriminantValue d = discriminant_with_gradient(m, q0);
  double a = m.a_at(q0), b = m.b_at(q0), c = m.c_at(q0);
  double cscale = std::abs(a) + std::abs(b) + std::abs(c);
  if (std::abs(d.value) <= 1e-8 * std::max(1.0, cscale * cscale)) {
    CubicM cub = cubic_M(m, q0);
    double mval = dir.is_infinite() ? cub.eval_inverted(0.0) : cub.eval(dir.p);
    double mscale = cub.scale() *
                    std::pow(std::max(1.0, dir.is_infinite() ? 1.0
                                                             : std::abs(dir.p)),
                             3);
    if (std::abs(mval) <= 1e-8 * std::max(1.0, mscale))
      throw std::invalid_argument(
          "singular point of the lifted field; launch this family through "
          "launch_family instead");
  }

  LiftedState s0 = LiftedState::make(q0.x, q0.y, dir, cfg.switch_threshold);
  IntegratorConfig run_cfg = cfg;
  run_cfg.sense = sense;
  GeodesicTrace g;
  g.base = q0;
  g.parent = integrate_lifted(m, s0, run_cfg);
  g.planar.reserve(g.parent.samples.size());
  // Census labels use a coarser isotropy band than the per-sample labels so
  // that integration drift on the isotropic surface does not leak members
  // into the timelike/spacelike buckets.
  constexpr double census_iso_band = 1e-8;
  for (const TraceSample& s : g.parent.samples) {
    g.planar.push_back({s.x, s.y});
    LiftedState ls{s.x, s.y, s.w, s.chart};
    switch (causal_type(m, {s.x, s.y}, ls.direction(), census_iso_band)) {
      case CausalType::Timelike: ++g.census.timelike; break;
      case CausalType::Spacelike: ++g.census.spacelike; break;
      case CausalType::Isotropic: ++g.census.isotropic; break;
    }
  }
  return g;
}

}  // namespace sigflow
