#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "noct/expr.hpp"
#include "noct/models.hpp"

using namespace noct;

namespace {

Rational q(long n, long d = 1) { return Rational(n, d); }

// Central difference on a long double rendering of the exact point.
long double central_difference(const Expr& e, const Point& p, const std::string& var, long double h) {
  Point lo = p, hi = p;
  const long double x = p.at(var).get_d();
  hi[var] = Rational(static_cast<double>(x + h));
  lo[var] = Rational(static_cast<double>(x - h));
  const long double step = hi[var].get_d() - lo[var].get_d();
  return (evaluate(e, hi).get_d() - static_cast<long double>(evaluate(e, lo).get_d())) / step;
}

}  // namespace

TEST(Parse, Precedence) {
  const Expr e = parse("2*x + y^2");
  ASSERT_EQ(e.kind(), Expr::Kind::kAdd);
  EXPECT_TRUE(equals_random(e, 2 * Expr::variable("x") + pow(Expr::variable("y"), 2)));
  EXPECT_EQ(evaluate(parse("-x^2"), {{"x", q(3)}}), q(-9));
  EXPECT_EQ(evaluate(parse("8/4/2"), {}), q(1));
  EXPECT_EQ(evaluate(parse("1 - 2 - 3"), {}), q(-4));
  EXPECT_EQ(evaluate(parse("2*(3+4)"), {}), q(14));
  EXPECT_EQ(evaluate(parse("x^-2"), {{"x", q(2)}}), q(1, 4));
}

TEST(Parse, QuaternionEntry) {
  const Expr e = parse("(qx^2+qy^2-qz^2-1)");
  EXPECT_EQ(evaluate(e, {{"qx", q(1)}, {"qy", q(2)}, {"qz", q(3)}}), q(-5));
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse("x^(1/2)"), IntegerExponentError);
  EXPECT_THROW(parse("x^y"), IntegerExponentError);
  try {
    parse("2*(x+");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 5u);
    EXPECT_FALSE(e.expected().empty());
  }
  EXPECT_THROW(parse("1.5*x"), SyntaxError);
  EXPECT_THROW(parse(""), SyntaxError);
  EXPECT_THROW(parse("x y"), SyntaxError);
}

TEST(Print, RoundTripOverVioModel) {
  const auto sys = models::vio_system();
  auto check = [](const Expr& e) { EXPECT_TRUE(equals_random(parse(to_string(e)), e, 5, 11)) << to_string(e); };
  for (const auto& e : sys.drift) check(e);
  for (const auto& f : sys.fields) {
    for (const auto& e : f) check(e);
  }
  for (const auto& o : sys.outputs) check(o.expr);
}

TEST(Differentiate, Rules) {
  const Expr x = Expr::variable("x"), y = Expr::variable("y"), p = Expr::variable("p"), qq = Expr::variable("q");
  EXPECT_TRUE(equals_random(differentiate(pow(x, 2) * y, "x"), 2 * x * y));
  EXPECT_TRUE(equals_random(differentiate(p / qq, "q"), -p / pow(qq, 2)));
  EXPECT_TRUE(differentiate(y, "x").is_zero());
  const Expr a = parse("x^3/(1+y^2)"), b = parse("x*y - 4/x");
  EXPECT_TRUE(equals_random(differentiate(a + b, "x"), differentiate(a, "x") + differentiate(b, "x")));
}

TEST(Differentiate, VioGradientsMatchFiniteDifferences) {
  const auto sys = models::vio_system();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(-40, 40);
  std::vector<Expr> exprs;
  for (const auto& o : sys.outputs) exprs.push_back(o.expr);
  for (const auto& e : sys.drift) exprs.push_back(e);
  for (const auto& f : sys.fields) exprs.insert(exprs.end(), f.begin(), f.end());
  for (int trial = 0; trial < 5; ++trial) {
    Point pt;
    for (const auto& s : sys.state) pt[s] = Rational(pick(rng), 10);
    pt["rho"] = Rational(pick(rng) + 100, 50);
    for (const auto& e : exprs) {
      for (const auto& s : sys.state) {
        if (!e.depends_on(intern_variable(s))) continue;
        const long double exact = evaluate(differentiate(e, s), pt).get_d();
        const long double fd = central_difference(e, pt, s, 1e-6L);
        const long double scale = std::max(1.0L, std::fabs(exact));
        EXPECT_LT(std::fabs(fd - exact) / scale, 1e-6) << to_string(e) << " d/d" << s;
      }
    }
  }
}

TEST(Evaluate, Basics) {
  const Expr e = parse("x/y");
  EXPECT_EQ(evaluate(e, {{"x", q(1)}, {"y", q(2)}}), q(1, 2));
  EXPECT_THROW(evaluate(e, {{"x", q(1)}, {"y", q(0)}}), DivisionByZero);
  EXPECT_THROW(evaluate(e, {{"x", q(1)}}), MissingVariable);
  const Expr h2 = parse("g_x*g_x + g_y*g_y + g_z*g_z");
  EXPECT_EQ(evaluate(h2, {{"g_x", q(0)}, {"g_y", q(0)}, {"g_z", q(-981, 100)}}), q(981, 100) * q(981, 100));
}

TEST(Evaluate, RingHomomorphism) {
  const Expr a = parse("x^2 - 3*y/(1+x^2)"), b = parse("(x - y)^3 + 7/2");
  const Point p{{"x", q(-7, 3)}, {"y", q(11, 5)}};
  EXPECT_EQ(evaluate(a * b, p), evaluate(a, p) * evaluate(b, p));
  EXPECT_EQ(evaluate(a + b, p), evaluate(a, p) + evaluate(b, p));
}

TEST(Substitute, Simultaneous) {
  const Expr x = Expr::variable("x"), y = Expr::variable("y"), z = Expr::variable("z");
  EXPECT_TRUE(equals_random(substitute(x + y, {{"x", pow(z, 2)}}), pow(z, 2) + y));
  const Expr once = substitute(x, {{"x", x + 1}});
  EXPECT_TRUE(equals_random(substitute(once, {{"x", x + 1}}), x + 2));
  EXPECT_TRUE(equals_random(substitute(x * y, {{"x", y}, {"y", x}}), x * y));
  EXPECT_TRUE(equals_random(substitute(x - y, {{"x", y}, {"y", x}}), y - x));
}

TEST(EqualsRandom, Identities) {
  EXPECT_TRUE(equals_random(parse("(x+y)^2"), parse("x^2+2*x*y+y^2"), 5, 3));
  EXPECT_FALSE(equals_random(parse("x"), parse("y"), 5, 3));
  EXPECT_TRUE(equals_random(parse("(x^2-1)/(x-1)"), parse("x+1"), 5, 3));
  EXPECT_THROW(equals_random(parse("1/(x-x)"), parse("0"), 5, 3), ResampleExhausted);
}

TEST(Expr, HashConsing) {
  EXPECT_TRUE(parse("x*y + 1").same_as(parse("x*y + 1")));
  EXPECT_TRUE((Expr::variable("x") * 0).is_zero());
  EXPECT_TRUE((Expr::variable("x") * 1).same_as(Expr::variable("x")));
}
