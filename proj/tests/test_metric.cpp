#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sigflow/expr.hpp"
#include "sigflow/metric.hpp"

using namespace sigflow;

namespace {

Metric e1_metric() {
  return Metric(parse_expression("-y"), parse_expression("0"),
                parse_expression("1"));
}

Metric circle_metric() {
  // Delta = x^2 + y^2 - 1: the discriminant curve is the unit circle.
  return Metric(parse_expression("x^2 + y^2 - 1"), parse_expression("0"),
                parse_expression("1"));
}

}  // namespace

TEST_CASE("discriminant and gradient") {
  Metric m = e1_metric();
  CHECK(discriminant(m, {0.3, 0.7}) == doctest::Approx(-0.7).epsilon(1e-15));
  auto g = discriminant_with_gradient(m, {0.3, 0.7});
  CHECK(g.value == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(g.dx == 0.0);
  CHECK(g.dy == -1.0);
}

TEST_CASE("F along directions and causal type") {
  Metric m = e1_metric();
  Point q{0.0, 1.0};
  CHECK(F_value(m, q, Direction::affine(0.0)) == -1.0);   // spacelike
  CHECK(F_value(m, q, Direction::affine(2.0)) == 3.0);    // timelike
  CHECK(F_value(m, q, Direction::affine(1.0)) == 0.0);    // isotropic
  CHECK(F_value(m, q, Direction::infinity()) == 1.0);     // c(q)
  CHECK(causal_type(m, q, Direction::affine(0.0)) == CausalType::Spacelike);
  CHECK(causal_type(m, q, Direction::affine(2.0)) == CausalType::Timelike);
  CHECK(causal_type(m, q, Direction::affine(1.0)) == CausalType::Isotropic);
}

TEST_CASE("isotropic directions by region") {
  Metric m = e1_metric();
  auto lorentz = isotropic_directions(m, {0.0, 1.0});
  REQUIRE(lorentz.size() == 2);
  CHECK(lorentz[0].dir.p == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(lorentz[1].dir.p == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lorentz[0].multiplicity == 1);

  auto on_curve = isotropic_directions(m, {0.0, 0.0});
  REQUIRE(on_curve.size() == 1);
  CHECK(on_curve[0].dir.p == 0.0);
  CHECK(on_curve[0].multiplicity == 2);

  CHECK(isotropic_directions(m, {0.0, -1.0}).empty());
}

TEST_CASE("vertical isotropic root when c vanishes") {
  Metric m(parse_expression("1"), parse_expression("0"), parse_expression("x"));
  auto roots = isotropic_directions(m, {0.0, 0.0});
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].dir.is_infinite());
  CHECK(roots[0].multiplicity == 2);
}

TEST_CASE("direction distance uses the chart holding both directions") {
  CHECK(direction_distance(Direction::affine(0.0), Direction::affine(0.5)) ==
        doctest::Approx(0.5));
  CHECK(direction_distance(Direction::affine(2.0), Direction::infinity()) ==
        doctest::Approx(0.5));
  CHECK(direction_distance(Direction::infinity(), Direction::infinity()) == 0.0);
  // symmetric
  Direction a = Direction::affine(0.3), b = Direction::affine(-0.4);
  CHECK(direction_distance(a, b) == direction_distance(b, a));
  // distant charts: slope 0 vs vertical
  CHECK(direction_distance(Direction::affine(0.0), Direction::infinity()) >= 1.0);
}

TEST_CASE("tangential local model constructor") {
  Metric m = Metric::form11(parse_expression("-1"), -1.0);
  CHECK(m.has_form11());
  CHECK(m.eps() == -1.0);
  CHECK(m.omega().f->eval(0.3, 0.4) == -1.0);
  // a = omega (y - eps x^2), b = 0, c = -omega
  CHECK(m.a_at({0.5, 0.3}) == doctest::Approx(-(0.3 + 0.25)).epsilon(1e-15));
  CHECK(m.b_at({0.5, 0.3}) == 0.0);
  CHECK(m.c_at({0.5, 0.3}) == 1.0);
  CHECK_FALSE(e1_metric().has_form11());
  CHECK_THROWS_AS(e1_metric().omega(), std::logic_error);
}

TEST_CASE("Brioschi invariant") {
  // flat metric: zero curvature
  Metric flat(parse_expression("1"), parse_expression("0"),
              parse_expression("1"));
  CHECK(std::abs(brioschi_K1(flat, {0.2, -0.7})) <= 1e-15);

  // the parabolic-tangency models all carry K1 = 1/4 at the vertex
  Metric m = e1_metric();
  CHECK(brioschi_K1(m, {0.0, 0.0}) == doctest::Approx(0.25).epsilon(1e-12));
  // smooth across the curve: same value a hair above and below
  CHECK(std::abs(brioschi_K1(m, {0.0, 1e-6}) - brioschi_K1(m, {0.0, -1e-6})) <=
        1e-5);
}

TEST_CASE("discriminant trace follows the unit circle") {
  Metric m = circle_metric();
  DiscriminantTraceOptions opt;
  opt.arclength = 3.14159265358979;
  opt.step = 0.01;
  auto pts = trace_discriminant(m, {1.2, 0.0}, opt);
  REQUIRE(pts.size() >= 100);
  for (auto& p : pts) {
    CHECK(std::abs(discriminant(m, p)) <= 1e-9);
  }
  // tangent (-Delta_y, Delta_x) at (1,0) points along +y: counterclockwise
  Point last = pts.back();
  CHECK(std::hypot(last.x + 1.0, last.y) <= 2e-2);

  DiscriminantTraceOptions back = opt;
  back.arclength = -3.14159265358979 / 2.0;
  Point bend = trace_discriminant(m, {1.2, 0.0}, back).back();
  CHECK(std::hypot(bend.x, bend.y + 1.0) <= 2e-2);
}

TEST_CASE("projection onto the curve") {
  Metric m = circle_metric();
  Point p = project_to_discriminant(m, {2.0, 0.0});
  CHECK(std::hypot(p.x - 1.0, p.y) <= 1e-10);
}

TEST_CASE("degenerate curve points are reported, not traced") {
  // Delta = x^2: vanishing gradient on the whole curve
  Metric m(parse_expression("x^2"), parse_expression("0"),
           parse_expression("1"));
  CHECK_THROWS_AS(trace_discriminant(m, {0.0, 0.0}), DegenerateDiscriminantError);
}
