// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <string>

#include "dgp.hpp"
#include "expr.hpp"
#include "rng.hpp"

using namespace nrwe;

namespace {
const std::set<std::string> kTX = {"t", "x"};

double fd_dt(const Expr& e, double t, double x, double h = 1e-5) {
  return (e.eval(t + h, x) - e.eval(t - h, x)) / (2.0 * h);
}
}  // namespace

TEST_CASE("parser evaluates the preset grammar") {
  CHECK(parse_expr("sin(t)^2 + x", kTX).eval(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(parse_expr("exp(x)", kTX).eval(0.0, 0.0) == doctest::Approx(1.0));
  CHECK(parse_expr("t + exp(x)", kTX).eval(2.0, 0.0) == doctest::Approx(3.0));
  CHECK(parse_expr("sin(x)^2 + x^2", kTX).eval(100.0, 2.0) ==
        doctest::Approx(std::sin(2.0) * std::sin(2.0) + 4.0));
}

TEST_CASE("parser precedence and associativity") {
  CHECK(parse_expr("2 + 3 * 4", kTX).eval(0, 0) == doctest::Approx(14.0));
  CHECK(parse_expr("2 ^ 3 ^ 2", kTX).eval(0, 0) == doctest::Approx(512.0));  // right-assoc
  CHECK(parse_expr("-2 ^ 2", kTX).eval(0, 0) == doctest::Approx(-4.0));  // ^ binds tighter
  CHECK(parse_expr("(2 + 3) * 4", kTX).eval(0, 0) == doctest::Approx(20.0));
  CHECK(parse_expr("10 - 3 - 2", kTX).eval(0, 0) == doctest::Approx(5.0));
  CHECK(parse_expr("8 / 4 / 2", kTX).eval(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("unbalanced parenthesis reports the byte offset") {
  bool caught = false;
  try {
    parse_expr("sin(t^2", kTX);
  } catch (const Error& e) {
    caught = true;
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("offset 7") != std::string::npos);
  }
  CHECK(caught);
}

TEST_CASE("unknown identifiers are rejected") {
  CHECK_THROWS_AS(parse_expr("sin(q)", kTX), Error);
  CHECK_THROWS_AS(parse_expr("foo(t)", kTX), Error);
  bool caught = false;
  try {
    parse_expr("t + z", kTX);
  } catch (const Error& e) {
    caught = true;
    CHECK(e.code() == ErrorCode::UnknownIdentifier);
  }
  CHECK(caught);
}

TEST_CASE("domain violations raise instead of returning non-finite") {
  CHECK_THROWS_AS(parse_expr("log(t)", kTX).eval(0.0, 0.0), Error);
  CHECK_THROWS_AS(parse_expr("log(t)", kTX).eval(-1.0, 0.0), Error);
  CHECK_THROWS_AS(parse_expr("x / t", kTX).eval(0.0, 1.0), Error);
  CHECK_THROWS_AS(parse_expr("sqrt(t)", kTX).eval(-1.0, 0.0), Error);
  CHECK(parse_expr("sqrt(t)", kTX).eval(4.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("derivative of the row-1 outcome is 2 sin cos") {
  const auto g = parse_expr("sin(t)^2 + x", kTX);
  const auto dg = g.differentiate("t");
  for (double t : {-1.3, 0.0, 0.7, 2.5})
    CHECK(dg.eval(t, 5.0) == doctest::Approx(std::sin(2.0 * t)).epsilon(1e-12));
}

TEST_CASE("derivative of the row-2 outcome folds to the literal constant 1") {
  const auto dg = parse_expr("t + exp(x)", kTX).differentiate("t");
  REQUIRE(dg.root() != nullptr);
  CHECK(dg.root()->kind == Expr::Kind::Constant);
  CHECK(dg.root()->value == 1.0);
  CHECK(dg.eval(123.0, -4.0) == 1.0);
}

TEST_CASE("derivative of a t-free expression folds to the literal constant 0") {
  const auto dg = parse_expr("sin(x)^2 + x^2", kTX).differentiate("t");
  REQUIRE(dg.root() != nullptr);
  CHECK(dg.root()->kind == Expr::Kind::Constant);
  CHECK(dg.root()->value == 0.0);
}

TEST_CASE("depends_on tracks variables through the tree") {
  CHECK(parse_expr("sin(t)^2 + x", kTX).depends_on("t"));
  CHECK(parse_expr("sin(t)^2 + x", kTX).depends_on("x"));
  CHECK_FALSE(parse_expr("sin(x)^2 + x^2", kTX).depends_on("t"));
}

TEST_CASE("symbolic derivative matches central differences on 1000 points per preset") {
  const char* presets[] = {"sin(t)^2 + x", "t + exp(x)", "sin(x)^2 + x^2",
                           "exp(x)", "sin(x)"};
  for (const char* src : presets) {
    const auto e = parse_expr(src, kTX);
    const auto de = e.differentiate("t");
    CounterRng rng(777);
    for (int i = 0; i < 1000; ++i) {
      const double t = rng.next_uniform(-3.0, 3.0);
      const double x = rng.next_uniform(0.1, 5.0);
      const double sym = de.eval(t, x);
      const double fd = fd_dt(e, t, x);
      REQUIRE(std::abs(sym - fd) <= 1e-6 * (1.0 + std::abs(sym)));
    }
  }
}

TEST_CASE("second derivatives evaluate finitely wherever the function does") {
  const char* presets[] = {"sin(t)^2 + x", "t + exp(x)", "sin(x)^2 + x^2"};
  for (const char* src : presets) {
    const auto d2 = parse_expr(src, kTX).differentiate("t").differentiate("t");
    CounterRng rng(88);
    for (int i = 0; i < 100; ++i) {
      const double v = d2.eval(rng.next_uniform(-5, 5), rng.next_uniform(0.1, 5));
      REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("general derivative rules check out numerically") {
  struct Case {
    const char* src;
  } cases[] = {{"t * sin(t)"},   {"sin(t) / (2 + cos(t))"}, {"exp(t * x)"},
               {"log(2 + t^2)"}, {"sqrt(4 + t^2)"},         {"t^3 - 2*t + 1"},
               {"cos(t)^3"},     {"(1 + t^2) ^ x"}};
  for (const auto& c : cases) {
    const auto e = parse_expr(c.src, kTX);
    const auto de = e.differentiate("t");
    CounterRng rng(99);
    for (int i = 0; i < 200; ++i) {
      const double t = rng.next_uniform(-2.0, 2.0);
      const double x = rng.next_uniform(0.5, 2.0);
      const double sym = de.eval(t, x);
      REQUIRE(std::abs(sym - fd_dt(e, t, x)) <= 1e-5 * (1.0 + std::abs(sym)));
    }
  }
}

TEST_CASE("abs differentiates to sign away from the kink") {
  const auto de = parse_expr("abs(t)", kTX).differentiate("t");
  CHECK(de.eval(2.0, 0.0) == doctest::Approx(1.0));
  CHECK(de.eval(-2.0, 0.0) == doctest::Approx(-1.0));
}

TEST_CASE("to_string round-trips through the parser") {
  const char* sources[] = {"sin(t)^2 + x", "t + exp(x)", "sin(x)^2 + x^2",
                           "-t * (x + 2) / 3"};
  for (const char* src : sources) {
    const auto e = parse_expr(src, kTX);
    const auto back = parse_expr(e.to_string(), kTX);
    CounterRng rng(5);
    for (int i = 0; i < 50; ++i) {
      const double t = rng.next_uniform(-2, 2);
      const double x = rng.next_uniform(0.1, 4);
      REQUIRE(back.eval(t, x) == doctest::Approx(e.eval(t, x)).epsilon(1e-12));
    }
  }
}
