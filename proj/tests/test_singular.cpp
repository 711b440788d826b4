#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "sigflow/expr.hpp"
#include "sigflow/singular.hpp"

using namespace sigflow;

namespace {

Metric e1_metric() {
  return Metric(parse_expression("-y"), parse_expression("0"),
                parse_expression("1"));
}

Metric model(double eps) {
  return Metric::form11(parse_expression("-1"), eps);
}

bool has_relation(const ResonanceReport& rep, int s1, int s2, int s3,
                  int target) {
  for (auto& r : rep.relations)
    if (r.s1 == s1 && r.s2 == s2 && r.s3 == s3 && r.target == target)
      return true;
  return false;
}

}  // namespace

TEST_CASE("cubic chart transform") {
  CubicM c;
  c.mu[0] = 0.7;
  c.mu[1] = -1.3;
  c.mu[2] = 0.2;
  c.mu[3] = 2.1;
  for (double s : {0.3, -1.7, 2.0}) {
    double direct = -s * s * s * c.eval(1.0 / s);
    CHECK(c.eval_inverted(s) == doctest::Approx(direct).epsilon(1e-13));
  }
}

TEST_CASE("factorization identity at curve points") {
  std::vector<double> slopes = {-2.0, -1.1, -0.4, 0.0, 0.3, 0.9, 1.6, 2.2};
  CHECK(check_factorization(e1_metric(), {0.0, 0.0}, slopes) <= 1e-12);
  CHECK(check_factorization(e1_metric(), {0.7, 0.0}, slopes) <= 1e-12);
  Metric circ(parse_expression("x^2 + y^2 - 1"), parse_expression("0"),
              parse_expression("1"));
  CHECK(check_factorization(circ, {1.0, 0.0}, slopes) <= 1e-12);
  CHECK(check_factorization(model(-1.0), {0.0, 0.0}, slopes) <= 1e-12);
  CHECK(check_factorization(model(-1.0), {0.2, -0.04}, slopes) <= 1e-12);
}

TEST_CASE("lambda spectrum matches its defining pieces") {
  Metric m(parse_expression("x"), parse_expression("0"),
           parse_expression("1 + x"));
  Point q{0.0, 0.0};
  auto lam = lambda_spectrum(m, q, Direction::affine(0.0));
  auto g = discriminant_with_gradient(m, q);
  CHECK(lam.l1 == doctest::Approx(2.0 * g.dx).epsilon(1e-12));
  CHECK(lam.l2 == doctest::Approx(cubic_M(m, q).deriv(0.0)).epsilon(1e-12));
  CHECK(lam.l1 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("tangency verdicts") {
  CHECK(tangency_verdict(e1_metric(), {0.0, 0.0}) == Tangency::Identical);
  CHECK(tangency_verdict(e1_metric(), {0.7, 0.0}) == Tangency::Identical);
  CHECK(tangency_verdict(model(-1.0), {0.0, 0.0}) == Tangency::OrderOne);
  CHECK(tangency_verdict(model(-1.0), {0.2, -0.04}) == Tangency::Transverse);
}

TEST_CASE("restricted spectrum on the tangency models") {
  auto sp = epsilon_spectrum(model(-1.0), {0.0, 0.0});
  CHECK(sp.is_real());
  CHECK(sp.e1.real() == doctest::Approx(1.280776).epsilon(1e-5));
  CHECK(sp.e2.real() == doctest::Approx(-0.780776).epsilon(1e-5));

  sp = epsilon_spectrum(model(1.0 / 32.0), {0.0, 0.0});
  CHECK(sp.is_real());
  CHECK(sp.e1.real() == doctest::Approx(0.426777).epsilon(1e-5));
  CHECK(sp.e2.real() == doctest::Approx(0.073223).epsilon(1e-5));

  sp = epsilon_spectrum(model(1.0), {0.0, 0.0});
  CHECK_FALSE(sp.is_real());
  CHECK(sp.e1.real() == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(std::abs(sp.e1.imag()) == doctest::Approx(0.968246).epsilon(1e-5));
  CHECK(sp.e2 == std::conj(sp.e1));

  // transverse points have no restricted spectrum
  CHECK_THROWS_AS(epsilon_spectrum(model(-1.0), {0.2, -0.04}), SpectrumError);
}

TEST_CASE("classification of the tangential models") {
  auto pc = classify(e1_metric(), {0.0, 0.0});
  CHECK(pc.cls == SingularClass::Z);
  CHECK(pc.K1 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(pc.tangency == Tangency::Identical);
  REQUIRE(pc.directions.size() == 2);
  CHECK(pc.directions[0].dir.p == 0.0);
  CHECK(pc.directions[0].multiplicity == 2);
  CHECK(pc.directions[1].dir.is_infinite());

  CHECK(classify(model(-1.0), {0.0, 0.0}).cls == SingularClass::Ds);
  CHECK(classify(model(1.0 / 32.0), {0.0, 0.0}).cls == SingularClass::Dn);
  CHECK(classify(model(1.0), {0.0, 0.0}).cls == SingularClass::Df);

  CHECK_THROWS_AS(classify(e1_metric(), {0.0, 0.3}), std::invalid_argument);
}

TEST_CASE("classification near the node-focus boundary") {
  CHECK(classify(model(1e-4), {0.0, 0.0}).cls == SingularClass::Dn);
  CHECK(classify(model(1.0 / 16.0 - 1e-4), {0.0, 0.0}).cls == SingularClass::Dn);
  CHECK(classify(model(1.0 / 16.0 + 1e-4), {0.0, 0.0}).cls == SingularClass::Df);
  auto pc = classify(model(1.0 / 16.0), {0.0, 0.0});
  CHECK(pc.cls == SingularClass::NonGeneric);
  CHECK_FALSE(pc.diagnostics.empty());
}

TEST_CASE("transverse classes on diagonal test metrics") {
  // one, two, three admissible directions
  Metric c1(parse_expression("x"), parse_expression("0"),
            parse_expression("1 - x"));
  Metric c2(parse_expression("x"), parse_expression("0"),
            parse_expression("1"));
  Metric c3(parse_expression("x"), parse_expression("0"),
            parse_expression("1 + x"));

  auto p1 = classify(c1, {0.0, 0.0});
  CHECK(p1.cls == SingularClass::C1);
  CHECK(p1.K1 == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(p1.directions.size() == 1);

  auto p2 = classify(c2, {0.0, 0.0});
  CHECK(p2.cls == SingularClass::C2);
  CHECK(std::abs(p2.K1) <= 1e-12);

  auto p3 = classify(c3, {0.0, 0.0});
  CHECK(p3.cls == SingularClass::C3);
  CHECK(p3.K1 == doctest::Approx(0.25).epsilon(1e-9));
  REQUIRE(p3.directions.size() == 3);
  CHECK(p3.directions[0].dir.p == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(p3.directions[1].dir.p == doctest::Approx(0.0));
  CHECK(p3.directions[2].dir.p == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p3.tangency == Tangency::Transverse);

  // curve points of the tangency model away from the vertex are transverse
  CHECK(classify(model(-1.0), {0.2, -0.04}).cls == SingularClass::C3);
}

TEST_CASE("resonance scan finds planted relations") {
  SpectrumPair sp;
  sp.e1 = 2.0;
  sp.e2 = 1.0;
  auto rep = resonance_scan(sp, 4);
  CHECK(has_relation(rep, 0, 2, 0, 0));  // e1 = 2 e2

  sp.e1 = 3.0 * 0.31 + 1.0;  // e1 = 3 e2 + 1
  sp.e2 = 0.31;
  rep = resonance_scan(sp, 5);
  CHECK(has_relation(rep, 0, 3, 1, 0));

  // irrational pair: no relations at low order
  sp.e1 = std::sqrt(2.0);
  sp.e2 = std::sqrt(3.0);
  CHECK(resonance_scan(sp, 5).relations.empty());
}

TEST_CASE("focus spectra carry the order-four sum resonance") {
  auto sp = epsilon_spectrum(model(1.0), {0.0, 0.0});
  auto rep = resonance_scan(sp, 4);
  bool found = false;
  for (auto& r : rep.relations)
    if (r.s1 == 2 && r.s2 == 2 && r.s3 == 0 && r.target == 2) {
      found = true;
      CHECK_FALSE(r.real_part_only);  // conjugate pair: the sum is exact
      CHECK(r.s1 + r.s2 + r.s3 == 4);
    }
  CHECK(found);
  // the single-eigenvalue multiples hold only in the real part
  bool real_only_seen = false;
  for (auto& r : rep.relations)
    if (r.s1 == 4 && r.s2 == 0 && r.s3 == 0 && r.target == 2)
      real_only_seen = r.real_part_only;
  CHECK(real_only_seen);
}

TEST_CASE("random quadratic metrics satisfy the factorization identity") {
  std::mt19937 rng(987654);
  auto coef = [&rng] { return (double(rng() >> 8) / 16777216.0) * 4.0 - 2.0; };
  auto poly = [&](bool drop_const) {
    // degree <= 2 polynomial with random coefficients
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6f + %.6f*x + %.6f*y + %.6f*x^2 + %.6f*x*y + %.6f*y^2",
                  drop_const ? 0.0 : coef(), coef(), coef(), coef(), coef(), coef());
    return parse_expression(buf);
  };
  int accepted = 0;
  for (int trial = 0; trial < 200 && accepted < 10; ++trial) {
    Metric m(poly(true), poly(true), poly(false));
    Point q{0.0, 0.0};
    // a(0,0) = b(0,0) = 0 puts the origin on the curve; keep regular points
    auto g = discriminant_with_gradient(m, q);
    if (std::abs(g.value) > 1e-9 || std::hypot(g.dx, g.dy) < 1e-2) continue;
    if (std::abs(m.c_at(q)) < 0.1) continue;
    std::vector<double> slopes;
    for (int k = 0; k < 10; ++k) slopes.push_back(coef());
    CHECK(check_factorization(m, q, slopes) <= 1e-9);
    ++accepted;
  }
  CHECK(accepted == 10);
}
