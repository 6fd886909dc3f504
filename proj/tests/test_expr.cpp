#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "isotrig/expr.hpp"

using namespace isotrig;

namespace {

const std::vector<std::string> kXY = {"x1", "x2"};
const std::vector<std::string> kXW = {"x1", "x2", "w"};

// Random smooth expression over x1, x2, w; denominators and real-power bases
// are kept strictly positive.
Expr random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const Expr vars[] = {Expr::var("x1"), Expr::var("x2"), Expr::var("w")};
  if (depth == 0) {
    const int k = pick(rng) % 4;
    return k == 3 ? Expr(coef(rng)) : vars[k];
  }
  const Expr a = random_expr(rng, depth - 1);
  const Expr b = random_expr(rng, depth - 1);
  switch (pick(rng)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    case 3: return a / (1.5 + b * b);
    case 4: return -a;
    case 5: return pow(a, 1 + static_cast<int>(rng() % 3));
    case 6: return pow(1.0 + a * a, -0.5);
    case 7: return sin(a);
    case 8: return cos(b) * a;
    default: return exp(0.3 * a);
  }
}

VarAssignment random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {{"x1", u(rng)}, {"x2", u(rng)}, {"w", 0.5 + 0.5 * std::abs(u(rng))}};
}

}  // namespace

TEST_CASE("parse and evaluate simple polynomial") {
  const Expr e = parse("x1*x2 + x2", kXY);
  CHECK(e.op() == Op::Add);
  CHECK(evaluate(e, {{"x1", 2.0}, {"x2", 3.0}}) == doctest::Approx(9.0));
  CHECK(evaluate(parse("x1*x2", kXY), {{"x1", 2.0}, {"x2", 3.0}}) == 6.0);
}

TEST_CASE("parameters fold to constants") {
  const std::vector<std::string> vars = {"x1", "x2", "e1", "e2"};
  const Expr g = parse("e1^2 + e2^2 - 0.0127^2*sigma^2*(x1^2+x2^2)", vars, {{"sigma", 0.1}});
  CHECK(free_variables(g) == std::vector<std::string>{"e1", "e2", "x1", "x2"});
  const double v = evaluate(g, {{"x1", 1.0}, {"x2", 0.0}, {"e1", 0.0}, {"e2", 0.0}});
  CHECK(v == doctest::Approx(-1.6129e-6).epsilon(1e-12));
}

TEST_CASE("syntax errors carry offsets") {
  try {
    parse("sin(x1", kXY);
    FAIL("expected ParseError");
  } catch (const ParseError& err) {
    CHECK(err.offset() == 6);
  }
  CHECK_THROWS_AS(parse("x1 + y", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1 / 0", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1 / (2 - 2)", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1 ^ x2", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1 +", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1 x2", kXY), ParseError);
  CHECK_THROWS_AS(parse("", kXY), ParseError);
}

TEST_CASE("precedence and associativity") {
  const VarAssignment at{{"x1", 2.0}, {"x2", 3.0}};
  CHECK(evaluate(parse("2^3^2", kXY), at) == 512.0);
  CHECK(evaluate(parse("-x1^2", kXY), at) == -4.0);
  CHECK(evaluate(parse("x1 - x2 - 1", kXY), at) == -2.0);
  CHECK(evaluate(parse("x2 / x1 / 2", kXY), at) == 0.75);
  CHECK(evaluate(parse("x1^-1", kXY), at) == 0.5);
  CHECK(evaluate(parse("1.5e-1*x1", kXY), at) == doctest::Approx(0.3));
  CHECK(evaluate(parse("exp(0)+cos(0)+sin(0)", kXY), at) == 2.0);
}

TEST_CASE("differentiate") {
  const Expr e = parse("x1*x2 + x2", kXY);
  CHECK(to_string(differentiate(e, "x1")) == "x2");
  CHECK(differentiate(Expr(3.5), "w").is_zero());

  const Expr s = parse("sin(x1/w)*w^2", kXW);
  const Expr ds = differentiate(s, "x1");
  const Expr expected = parse("cos(x1/w)*w", kXW);
  const VarAssignment at{{"x1", 0.3}, {"w", 1.0}, {"x2", 0.0}};
  const double h = 1e-6;
  const double fd = (evaluate(s, {{"x1", 0.3 + h}, {"w", 1.0}}) - evaluate(s, {{"x1", 0.3 - h}, {"w", 1.0}})) / (2 * h);
  CHECK(std::abs(evaluate(ds, at) - fd) / std::abs(fd) < 1e-6);
  CHECK(evaluate(ds, at) == doctest::Approx(evaluate(expected, at)).epsilon(1e-14));
}

TEST_CASE("evaluate domain errors") {
  CHECK_THROWS_AS(evaluate(parse("w^(-1)*x1", kXW), {{"x1", 1.0}, {"w", 0.0}}), EvalError);
  CHECK_THROWS_AS(evaluate(parse("x1/w", kXW), {{"x1", 1.0}, {"w", 0.0}}), EvalError);
  CHECK_THROWS_AS(evaluate(parse("x1^0.5", kXW), {{"x1", -1.0}}), EvalError);
  CHECK_THROWS_AS(evaluate(parse("x1*x2", kXY), {{"x1", 1.0}}), EvalError);
}

TEST_CASE("substitute") {
  const Expr w = Expr::var("w");
  const Expr cube = parse("x1^3", kXY);
  const Expr sub = substitute(cube, {{"x1", Expr::var("x1") / w}});
  CHECK(to_string(sub) == "(x1/w)^3");

  const Expr f = parse("x1*x2 + x2", kXY);
  const Expr hom = pow(w, 2) * substitute(f, {{"x1", Expr::var("x1") / w}, {"x2", Expr::var("x2") / w}});
  const Expr target = parse("x1*x2 + x2*w", kXW);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto at = random_point(rng);
    CHECK(evaluate(hom, at) == doctest::Approx(evaluate(target, at)).epsilon(1e-13));
  }
  CHECK(substitute(f, {}).id() == f.id());
}

TEST_CASE("simultaneous substitution") {
  const Expr f = parse("x1 - 2*x2", kXY);
  const Expr g = substitute(f, {{"x1", Expr::var("x2")}, {"x2", Expr::var("x1")}});
  CHECK(evaluate(g, {{"x1", 1.0}, {"x2", 5.0}}) == 3.0);
}

TEST_CASE("derivative matches central difference on random expressions") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Expr f = random_expr(rng, 4);
    for (const char* v : {"x1", "x2", "w"}) {
      const Expr df = differentiate(f, v);
      const auto at = random_point(rng);
      auto plus = at, minus = at;
      const double h = 1e-6;
      plus[v] += h;
      minus[v] -= h;
      const double fd = (evaluate(f, plus) - evaluate(f, minus)) / (2 * h);
      const double exact = evaluate(df, at);
      const double scale = std::max({1.0, std::abs(exact), std::abs(evaluate(f, at))});
      CHECK(std::abs(exact - fd) / scale < 1e-5);
      ++checked;
    }
  }
  CHECK(checked == 300);
}

TEST_CASE("print then parse evaluates bit-identically") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Expr f = random_expr(rng, 4);
    const Expr g = parse(to_string(f), kXW);
    const auto at = random_point(rng);
    INFO(to_string(f));
    CHECK(evaluate(f, at) == evaluate(g, at));
  }
}

TEST_CASE("identity substitution is evaluation-equivalent") {
  std::mt19937_64 rng(9);
  const Bindings ident{{"x1", Expr::var("x1")}, {"x2", Expr::var("x2")}, {"w", Expr::var("w")}};
  for (int trial = 0; trial < 50; ++trial) {
    const Expr f = random_expr(rng, 4);
    const auto at = random_point(rng);
    CHECK(evaluate(substitute(f, ident), at) == evaluate(f, at));
  }
}

TEST_CASE("compiled program agrees with tree evaluation") {
  std::mt19937_64 rng(21);
  std::vector<Expr> outs;
  for (int i = 0; i < 20; ++i) outs.push_back(random_expr(rng, 5));
  outs.push_back(outs[3] + outs[4]);
  const ExprProgram prog(outs, kXW);
  std::size_t total = 0;
  for (const auto& e : outs) total += node_count(e);
  CHECK(prog.num_instructions() <= total);

  std::vector<double> scratch, res(outs.size()), head(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto at = random_point(rng);
    const double z[] = {at.at("x1"), at.at("x2"), at.at("w")};
    prog.eval(z, res, scratch);
    for (std::size_t i = 0; i < outs.size(); ++i) CHECK(res[i] == evaluate(outs[i], at));
    prog.eval_prefix(z, head, 3, scratch);
    for (std::size_t i = 0; i < 3; ++i) CHECK(head[i] == res[i]);
  }
}

TEST_CASE("compiled program shares repeated structure") {
  const Expr a = parse("sin(x1)*x2", kXY);
  const Expr b = parse("sin(x1)*x2", kXY);  // distinct nodes, same structure
  const Expr outs[] = {a + b};
  const ExprProgram prog(outs, kXY);
  CHECK(prog.num_instructions() == 5);  // x1, sin, x2, mul, add

  const Expr pole[] = {parse("x1/x2", kXY)};
  const ExprProgram p2(pole, kXY);
  std::vector<double> scratch;
  double out = 0.0;
  const double z[] = {1.0, 0.0};
  CHECK_THROWS_AS(p2.eval(z, {&out, 1}, scratch), EvalError);
}

TEST_CASE("lie derivative along a linear field") {
  // d/dt (x1^2 + x2^2) along (x2, -x1) vanishes.
  const Expr v = parse("x1^2 + x2^2", kXY);
  const Expr field[] = {Expr::var("x2"), -Expr::var("x1")};
  const Expr lv = lie_derivative(v, kXY, field);
  CHECK(evaluate(lv, {{"x1", 0.7}, {"x2", -0.2}}) == doctest::Approx(0.0));
}
