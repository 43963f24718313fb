#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "finsler/expr.hpp"
#include "finsler/metric.hpp"
#include "oracles.hpp"

using namespace finsler;
using namespace finsler::expr;

namespace {

const char* kFunk =
    "sqrt(abs2(y) - (abs2(x)*abs2(y) - dot(x,y)^2))/(1 - abs2(x)) + dot(x,y)/(1 - abs2(x)) + dot(a,y)/(1 - abs2(x))";

const std::vector<std::string> kCorpus = {
    "y1^2 + y2^2",
    "sqrt(y1^2 + y2^2)",
    "-y1^2",
    "2^3^2",
    "(y1 + y2) * (y1 - y2) / (1 + x1^2)",
    "exp(-x1) * sqrt(abs2(y)) + 0.25 * dot(x, y)",
    "sin(x1) * cos(x2) + log(2 + x1*x1)",
    "(y1^4 + y2^4)^(1/4)",
    "1.5e-1 * y1 - -y2",
    "sqrt(dot(y,y)) + dot(b,y)",
};

ParseOptions options() {
  ParseOptions o;
  o.dimension = 2;
  o.vector_names = {"a", "b"};
  return o;
}

template <class T>
T run(const std::string& src, std::vector<T> x, std::vector<T> y, const std::map<std::string, std::vector<double>>* vec = nullptr,
      const std::map<std::string, double>* sc = nullptr) {
  const NodePtr ast = parse(src, options());
  return eval<T>(*ast, Env<T>{x, y, sc, vec});
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::StepFailure;
}

}  // namespace

TEST_CASE("tokenize") {
  const auto t = tokenize("y1^2 + y2^2");
  REQUIRE(t.size() == 7);
  CHECK(t[0].kind == TokenKind::Identifier);
  CHECK(t[0].text == "y1");
  CHECK(t[1].text == "^");
  CHECK(t[2].kind == TokenKind::Number);
  CHECK(t[3].text == "+");
  CHECK(t[4].text == "y2");

  const auto s = tokenize("sqrt(dot(y,y))");
  // sqrt ( dot ( y , y ) ): the comma is a token too.
  REQUIRE(s.size() == 9);
  CHECK(s[5].kind == TokenKind::Comma);
  CHECK(s[7].text == ")");
  CHECK(s[8].text == ")");

  const auto n = tokenize("1.5e-3*y1");
  CHECK(n[0].text == "1.5e-3");

  try {
    tokenize("y1 $ y2");
    FAIL("expected LexError");
  } catch (const SyntaxError& e) {
    CHECK(e.code() == ErrorCode::LexError);
    CHECK(e.position() == 3);
  }
}

TEST_CASE("property: token positions increase strictly") {
  for (const auto& src : kCorpus) {
    const auto t = tokenize(src);
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k].position > t[k - 1].position);
  }
}

TEST_CASE("parse structure and precedence") {
  const NodePtr ast = parse("y1^2+y2^2");
  REQUIRE(ast->kind == NodeKind::Binary);
  CHECK(ast->op == '+');
  CHECK(ast->args[0]->op == '^');
  CHECK(ast->args[0]->args[0]->kind == NodeKind::Coordinate);
  CHECK(ast->args[0]->args[0]->index == 1);
  CHECK(ast->args[1]->op == '^');

  CHECK(run<double>("2^3^2", {0, 0}, {1, 1}) == 512.0);
  CHECK(run<double>("-2^2", {0, 0}, {1, 1}) == -4.0);
  CHECK(run<double>("2*-3", {0, 0}, {1, 1}) == -6.0);
  CHECK(run<double>("8/4/2", {0, 0}, {1, 1}) == 1.0);
  CHECK(run<double>("1-2-3", {0, 0}, {1, 1}) == -4.0);
}

TEST_CASE("parse errors carry positions and expectations") {
  CHECK(code_of([] { parse("sqrt()"); }) == ErrorCode::ArityError);
  CHECK(code_of([] { parse("dot(y)"); }) == ErrorCode::ArityError);
  try {
    parse("y1 + ");
    FAIL("expected ParseError");
  } catch (const SyntaxError& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK_FALSE(e.expected().empty());
    CHECK(e.position() <= 5);
  }
  CHECK(code_of([] { parse("foo(y1)"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("y1^y2"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("y3", options()); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("(y1"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("y1 y2"); }) == ErrorCode::ParseError);
}

TEST_CASE("evaluation") {
  CHECK(run<double>("sqrt(y1^2+y2^2)", {0, 0}, {3, 4}) == doctest::Approx(5.0));
  const std::map<std::string, std::vector<double>> vec{{"a", {0.0, 0.0}}};
  CHECK(run<double>(kFunk, {0, 0}, {1, 0}, &vec) == doctest::Approx(1.0));

  const std::map<std::string, double> sc{{"k", 2.0}};
  CHECK(run<double>("k*y1", {0, 0}, {3, 4}, nullptr, &sc) == doctest::Approx(6.0));
  CHECK(code_of([] { run<double>("k*y1", {0, 0}, {3, 4}); }) == ErrorCode::UnboundVariable);
  CHECK(code_of([] { run<double>("sqrt(y1 - 10)", {0, 0}, {3, 4}); }) == ErrorCode::DomainError);
}

TEST_CASE("Funk expression agrees with the closed form on random points") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const std::vector<double> a : {std::vector<double>{0.0, 0.0}, std::vector<double>{0.3, -0.2}}) {
    const std::map<std::string, std::vector<double>> vec{{"a", a}};
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x{u(rng), u(rng)};
      const double r = std::hypot(x[0], x[1]);
      if (r >= 0.95) {
        x[0] *= 0.9 / r;
        x[1] *= 0.9 / r;
      }
      const std::vector<double> y{u(rng), u(rng)};
      const double e = run<double>(kFunk, x, y, &vec);
      const double ref = oracle::funk(a, x, y);
      CHECK(std::abs(e - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
      CHECK(std::abs(e - funk_metric(a, x, y)) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("property: printing and reparsing is the identity on ASTs") {
  for (const auto& src : kCorpus) {
    CAPTURE(src);
    const NodePtr a = parse(src, options());
    const NodePtr b = parse(to_string(*a), options());
    CHECK(*a == *b);
  }
}

TEST_CASE("property: jet evaluation has the scalar value") {
  const std::map<std::string, std::vector<double>> vec{{"a", {0.1, 0.2}}, {"b", {0.05, -0.1}}};
  const std::vector<double> x{0.2, -0.3}, y{0.9, 0.4};
  const auto seeds = seed_variables(x, y, JetConfig{.n = 2, .order = 3});
  const std::vector<Jet> xj(seeds.begin(), seeds.begin() + 2), yj(seeds.begin() + 2, seeds.end());
  for (const auto& src : kCorpus) {
    CAPTURE(src);
    const double s = run<double>(src, x, y, &vec);
    const Jet j = run<Jet>(src, xj, yj, &vec);
    CHECK(std::abs(j.value() - s) <= 1e-14 * std::max(1.0, std::abs(s)));
  }
}

TEST_CASE("property: metric expressions are positively 1-homogeneous in y") {
  const std::map<std::string, std::vector<double>> vec{{"a", {0.2, 0.1}}};
  const std::vector<std::string> metrics = {kFunk, "sqrt(y1^2 + y2^2)", "(y1^4 + y2^4)^(1/4)",
                                            "sqrt((1 + x1^2)*y1^2 + y2^2) + 0.1*y1"};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (const auto& src : metrics) {
    for (int k = 0; k < 10; ++k) {
      const std::vector<double> x{u(rng), u(rng)}, y{u(rng) + 1.0, u(rng)};
      const double f = run<double>(src, x, y, &vec);
      for (double lam : {0.5, 2.0, 3.0}) {
        const double fl = run<double>(src, x, {lam * y[0], lam * y[1]}, &vec);
        CHECK(std::abs(fl - lam * f) <= 1e-10 * lam * f);
      }
    }
  }
}
