#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "contactlab/expr.hpp"
#include "contactlab/error.hpp"

using namespace contactlab;

namespace {

double value_of(const std::string& src,
                const std::unordered_map<std::string, double>& env = {}) {
  return Expr::parse(src).value(env);
}

// random expression generator over x, y, z (division kept away from poles)
struct Gen {
  std::mt19937 rng;
  explicit Gen(unsigned seed) : rng(seed) {}

  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  std::string leaf() {
    switch (pick(4)) {
      case 0: return "x";
      case 1: return "y";
      case 2: return "z";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", uniform(-2.0, 2.0));
        return buf;
      }
    }
  }

  std::string expr(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(8)) {
      case 0: return "(" + expr(depth - 1) + " + " + expr(depth - 1) + ")";
      case 1: return "(" + expr(depth - 1) + " - " + expr(depth - 1) + ")";
      case 2: return "(" + expr(depth - 1) + ")*(" + expr(depth - 1) + ")";
      case 3: return "(" + expr(depth - 1) + ")/(4 + cos(" + expr(depth - 1) + "))";
      case 4: return "sin(" + expr(depth - 1) + ")";
      case 5: return "cos(" + expr(depth - 1) + ")";
      case 6: return "exp(0.3*(" + expr(depth - 1) + "))";
      default: return "(" + expr(depth - 1) + ")^2";
    }
  }
};

}  // namespace

TEST_CASE("arithmetic and standard functions") {
  CHECK(value_of("2 + 3*4") == doctest::Approx(14.0));
  CHECK(value_of("sin(0)") == doctest::Approx(0.0));
  CHECK(value_of("2^3^2") == doctest::Approx(512.0));  // right-assoc
  CHECK(value_of("-2^2") == doctest::Approx(-4.0));    // unary minus binds weaker
  CHECK(value_of("2*pi") == doctest::Approx(2.0 * M_PI));
  CHECK(value_of("atan2(1, 1)") == doctest::Approx(M_PI / 4));
}

TEST_CASE("jets by hand: r^2 cos(phi)") {
  Expr e = Expr::parse("r^2 * cos(phi)");
  Jet2 j = e.jet2({"r", "phi"}, {2.0, 0.0});
  CHECK(j.value == doctest::Approx(4.0));
  CHECK(j.gradient[0] == doctest::Approx(4.0));   // d/dr = 2 r cos(phi)
  CHECK(j.gradient[1] == doctest::Approx(0.0));   // d/dphi = -r^2 sin(phi)
}

TEST_CASE("jets by hand: theta^2, constant, exp(x y)") {
  {
    Jet2 j = Expr::parse("theta^2").jet2({"theta"}, {3.0});
    CHECK(j.value == doctest::Approx(9.0));
    CHECK(j.gradient[0] == doctest::Approx(6.0));
    CHECK(j.hessian[0][0] == doctest::Approx(2.0));
  }
  {
    Jet2 j = Expr::parse("5").jet2({"x", "y"}, {0.3, -0.7});
    CHECK(j.value == doctest::Approx(5.0));
    CHECK(j.gradient[0] == 0.0);
    CHECK(j.gradient[1] == 0.0);
    CHECK(j.hessian[0][0] == 0.0);
    CHECK(j.hessian[1][1] == 0.0);
  }
  {
    Jet2 j = Expr::parse("exp(x*y)").jet2({"x", "y"}, {0.0, 0.0});
    CHECK(j.value == doctest::Approx(1.0));
    CHECK(j.gradient[0] == doctest::Approx(0.0));
    CHECK(j.gradient[1] == doctest::Approx(0.0));
    CHECK(j.hessian[0][1] == doctest::Approx(1.0));
    CHECK(j.hessian[1][0] == doctest::Approx(1.0));
    CHECK(j.hessian[0][0] == doctest::Approx(0.0));
  }
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    Expr::parse("2 + * 3");
    FAIL("expected SyntaxError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(std::string(e.what()).find("byte 4") != std::string::npos);
  }
  CHECK_THROWS_AS(Expr::parse("sin(1, 2)"), Error);
  CHECK_THROWS_AS(Expr::parse("2 +"), Error);
  CHECK_THROWS_AS(Expr::parse("(1 + 2"), Error);
}

TEST_CASE("identifier validation") {
  Expr e = Expr::parse("a + b*c");
  CHECK_NOTHROW(e.validate({"a", "b", "c"}));
  try {
    e.validate({"a", "b"});
    FAIL("expected UnknownIdentifier");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::UnknownIdentifier);
    CHECK(std::string(err.what()).find("c") != std::string::npos);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(value_of("log(0 - 1)"), Error);
  CHECK_THROWS_AS(value_of("sqrt(0 - 1)"), Error);
  CHECK_THROWS_AS(value_of("0^(0 - 1)"), Error);
  CHECK_THROWS_AS(value_of("(0 - 2)^0.5"), Error);
  CHECK(value_of("(0 - 2)^3") == doctest::Approx(-8.0));  // integer exponent ok
  try {
    value_of("atan2(0, 0)");
    FAIL("expected NonSmoothPoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonSmoothPoint);
  }
}

TEST_CASE("cutoffs: bump01 and smoothstep") {
  CHECK(value_of("bump01(0 - 1)") == doctest::Approx(1.0));
  CHECK(value_of("bump01(0)") == doctest::Approx(1.0));
  CHECK(value_of("bump01(1)") == doctest::Approx(0.0));
  CHECK(value_of("bump01(2)") == doctest::Approx(0.0));
  // non-increasing on a fine sweep
  double prev = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = i / 200.0;
    const double v = bump01_value(t);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  CHECK(value_of("smoothstep(1, 2, 0.5)") == doctest::Approx(0.0));
  CHECK(value_of("smoothstep(1, 2, 2.5)") == doctest::Approx(1.0));
  const double mid = value_of("smoothstep(1, 2, 1.5)");
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
}

TEST_CASE("pretty-print round trip is the identity on the AST") {
  Gen gen(20240817);
  for (int i = 0; i < 400; ++i) {
    const std::string src = gen.expr(1 + gen.pick(4));
    Expr a = Expr::parse(src);
    Expr b = Expr::parse(a.pretty());
    CHECK(a.same_ast(b));
  }
}

TEST_CASE("AD matches central finite differences on random expressions") {
  Gen gen(987654321);
  const std::vector<std::string> vars = {"x", "y", "z"};
  const double h = 1e-5;
  int tested = 0;
  int attempts = 0;
  while (tested < 1000 && attempts < 6000) {
    ++attempts;
    Expr e = Expr::parse(gen.expr(1 + gen.pick(6)));
    std::vector<double> p = {gen.uniform(-1.2, 1.2), gen.uniform(-1.2, 1.2),
                             gen.uniform(-1.2, 1.2)};
    Jet2 j;
    try {
      j = e.jet2(vars, p);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(j.value) || std::abs(j.value) > 1e6) continue;
    bool bad_scale = false;
    for (int a = 0; a < 3; ++a)
      if (!std::isfinite(j.gradient[a]) || std::abs(j.gradient[a]) > 1e6)
        bad_scale = true;
    if (bad_scale) continue;

    auto eval_at = [&](double dx, double dy, double dz) {
      std::unordered_map<std::string, double> env = {
          {"x", p[0] + dx}, {"y", p[1] + dy}, {"z", p[2] + dz}};
      return e.value(env);
    };
    bool skipped = false;
    try {
      for (int a = 0; a < 3 && !skipped; ++a) {
        double dp[3] = {0, 0, 0}, dm[3] = {0, 0, 0};
        dp[a] = h;
        dm[a] = -h;
        const double fd =
            (eval_at(dp[0], dp[1], dp[2]) - eval_at(dm[0], dm[1], dm[2])) / (2 * h);
        const double scale = std::max({1.0, std::abs(j.gradient[a]), std::abs(fd)});
        CHECK(std::abs(fd - j.gradient[a]) / scale <= 1e-6);
      }
      // Hessian diagonal and one mixed entry via central differences
      for (int a = 0; a < 3; ++a) {
        double dp[3] = {0, 0, 0};
        dp[a] = h;
        const double fd = (eval_at(dp[0], dp[1], dp[2]) - 2 * eval_at(0, 0, 0) +
                           eval_at(-dp[0], -dp[1], -dp[2])) /
                          (h * h);
        const double scale = std::max({1.0, std::abs(j.hessian[a][a]), std::abs(fd)});
        CHECK(std::abs(fd - j.hessian[a][a]) / scale <= 1e-4);
      }
      const double fdxy = (eval_at(h, h, 0) - eval_at(h, -h, 0) - eval_at(-h, h, 0) +
                           eval_at(-h, -h, 0)) /
                          (4 * h * h);
      const double scale = std::max({1.0, std::abs(j.hessian[0][1]), std::abs(fdxy)});
      CHECK(std::abs(fdxy - j.hessian[0][1]) / scale <= 1e-4);
    } catch (const Error&) {
      skipped = true;
    }
    if (!skipped) ++tested;
  }
  CHECK(tested == 1000);
}

TEST_CASE("Hessian is symmetric to machine precision") {
  Gen gen(5551212);
  const std::vector<std::string> vars = {"x", "y", "z"};
  for (int i = 0; i < 200; ++i) {
    Expr e = Expr::parse(gen.expr(3));
    std::vector<double> p = {gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1)};
    Jet2 j;
    try {
      j = e.jet2(vars, p);
    } catch (const Error&) {
      continue;
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) CHECK(j.hessian[a][b] == j.hessian[b][a]);
  }
}
