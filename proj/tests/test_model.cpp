#include <gtest/gtest.h>

#include <random>

#include "recsolve/dsl.hpp"
#include "recsolve/expr.hpp"

using namespace recsolve;

namespace {

Env env1(const std::string& v, long x) { return Env{{v, mpz_class(x)}}; }

}  // namespace

TEST(EvalGround, SquareAtFive) {
  Num v = eval_ground(pow(Expr::var("x"), Expr::constant(2)), env1("x", 5));
  ASSERT_TRUE(v.exact);
  EXPECT_EQ(v.q, 25);
}

TEST(EvalGround, CeilLog2AtFive) {
  Num v = eval_ground(ceil(log2(Expr::var("x"))), env1("x", 5));
  ASSERT_TRUE(v.exact);
  EXPECT_EQ(v.q, 3);
}

TEST(EvalGround, AdditiveIdentity) {
  Env env{{"x", 7}, {"y", 9}};
  EXPECT_EQ(eval_ground(parse_expr("x + 0*y"), env).q, 7);
}

TEST(EvalGround, ExactRationalDivision) {
  Num v = eval_ground(parse_expr("x / 3"), env1("x", 2));
  ASSERT_TRUE(v.exact);
  EXPECT_EQ(v.q, mpq_class(2, 3));
}

TEST(EvalGround, Log2IsRealWhenIrrational) {
  Num v = eval_ground(parse_expr("log2(x)"), env1("x", 5));
  EXPECT_FALSE(v.exact);
  EXPECT_NEAR(v.d, std::log2(5.0), 1e-15);
  EXPECT_TRUE(eval_ground(parse_expr("log2(x)"), env1("x", 64)).exact);
}

TEST(EvalGround, FloorLog2IsExactForLargeValues) {
  // 2^60 + 1 rounds to 2^60 in double precision
  Env env{{"x", mpz_class("1152921504606846977")}};
  EXPECT_EQ(eval_ground(parse_expr("ceil(log2(x))"), env).q, 61);
  EXPECT_EQ(eval_ground(parse_expr("floor(log2(x))"), env).q, 60);
}

TEST(EvalGround, FloorSqrtIsExact) {
  EXPECT_EQ(eval_ground(parse_expr("floor(sqrt(x))"), env1("x", 99)).q, 9);
  EXPECT_EQ(eval_ground(parse_expr("floor(sqrt(x))"), env1("x", 100)).q, 10);
}

TEST(EvalGround, Errors) {
  auto kind = [](const std::string& s, long x) {
    try {
      eval_ground(parse_expr(s), Env{{"x", mpz_class(x)}});
    } catch (const EvalError& e) {
      return e.kind();
    }
    return EvalErrorKind::CallInGround;
  };
  EXPECT_EQ(kind("1 / x", 0), EvalErrorKind::DivisionByZero);
  EXPECT_EQ(kind("log2(x)", 0), EvalErrorKind::Log2Domain);
  EXPECT_EQ(kind("fact(x - 3)", 1), EvalErrorKind::FactorialDomain);
  EXPECT_EQ(kind("fact(x / 2)", 3), EvalErrorKind::FactorialDomain);
  EXPECT_EQ(kind("2^x", 600), EvalErrorKind::Overflow);
  EXPECT_EQ(kind("fact(x)", 150), EvalErrorKind::Overflow);
  EXPECT_EQ(kind("y + x", 1), EvalErrorKind::UnboundVariable);
}

TEST(EvalGround, OverflowThresholdIs512Bits) {
  EXPECT_NO_THROW(eval_ground(parse_expr("2^x"), env1("x", 510)));
  EXPECT_THROW(eval_ground(parse_expr("2^x"), env1("x", 513)), EvalError);
}

TEST(EvalGround, WideRationalWithSmallMagnitudeIsNotOverflow) {
  // 7286977340567303/2^52 is about 1.618; its 20th power has a 1000-bit denominator
  Expr e = pow(Expr::constant(mpq_class(mpz_class("7286977340567303"), mpz_class(1) << 52)), Expr::var("x"));
  Num v = eval_ground(e, env1("x", 20));
  EXPECT_NEAR(v.to_double(), std::pow(7286977340567303.0 / 4503599627370496.0, 20), 1e-6);
  EXPECT_THROW(eval_ground(e, env1("x", 800)), EvalError);
  EXPECT_THROW(eval_ground(parse_expr("(3/2)^x"), env1("x", 900)), EvalError);
  EXPECT_EQ(eval_ground(parse_expr("(3/2)^x"), env1("x", 3)).q, mpq_class(27, 8));
}

TEST(EvalGround, GuardedSemantics) {
  EvalOptions g{true};
  EXPECT_EQ(eval_ground(parse_expr("log2(x)"), env1("x", 0), g).q, 0);
  EXPECT_EQ(eval_ground(parse_expr("ceil(log2(x))"), env1("x", 0), g).q, 0);
  EXPECT_EQ(eval_ground(parse_expr("x / (x - 3)"), env1("x", 3), g).q, 0);
}

TEST(EvalBool, Examples) {
  EXPECT_TRUE(eval_bool(parse_bool("x = 0"), env1("x", 0)));
  EXPECT_FALSE(eval_bool(parse_bool("x > 0 and y > 0"), Env{{"x", 3}, {"y", 0}}));
  EXPECT_TRUE(eval_bool(parse_bool("x + y >= 1"), Env{{"x", 0}, {"y", 1}}));
}

TEST(Substitute, Examples) {
  Expr e = substitute(parse_expr("f(x - 1)"), {{"x", parse_expr("y + 1")}});
  EXPECT_EQ(e, parse_expr("f((y + 1) - 1)"));
  EXPECT_EQ(substitute(Expr::var("x"), {}), Expr::var("x"));
  Expr s = substitute(parse_expr("x + y"), {{"x", Expr::constant(2)}, {"y", Expr::constant(3)}});
  EXPECT_EQ(eval_ground(s, {}).q, 5);
}

TEST(Substitute, IsSimultaneous) {
  Expr e = substitute(parse_expr("x - y"), {{"x", Expr::var("y")}, {"y", Expr::var("x")}});
  EXPECT_EQ(e, parse_expr("y - x"));
}

TEST(FreeVars, Examples) {
  EXPECT_EQ(free_vars(parse_expr("f(f(x - 1)) + 1")), (std::set<std::string>{"x"}));
  EXPECT_TRUE(free_vars(parse_expr("7")).empty());
  EXPECT_EQ(free_vars(parse_expr("max(x, y * z)")), (std::set<std::string>{"x", "y", "z"}));
}

// substitute then evaluate equals evaluation in the merged environment
TEST(ModelProperty, SubstituteCommutesWithEvaluation) {
  std::mt19937 rng(3);
  std::vector<std::string> forms = {"x * y + 3", "max(x, y) - min(x, 2 * y)", "floor(x / (y + 1)) + fact(y)",
                                    "2^x + x^2 * y", "ceil(log2(x + y + 1))"};
  for (const auto& s : forms) {
    Expr e = parse_expr(s);
    for (int t = 0; t < 50; ++t) {
      long x = rng() % 12, y = rng() % 6;
      Num direct = eval_ground(e, Env{{"x", x}, {"y", y}});
      Expr sub = substitute(e, {{"x", Expr::constant(x)}});
      Num via = eval_ground(sub, Env{{"y", y}});
      EXPECT_TRUE(num_eq(direct, via)) << s;
    }
  }
}

TEST(ModelProperty, IntegerOpsStayExact) {
  std::mt19937 rng(5);
  Expr e = parse_expr("max(x * y - floor(x / 3), ceil(y / 2)) + fact(min(x, 6)) - x^3");
  for (int t = 0; t < 200; ++t) {
    Num v = eval_ground(e, Env{{"x", long(rng() % 30)}, {"y", long(rng() % 30)}});
    EXPECT_TRUE(v.exact);
    EXPECT_EQ(v.q.get_den(), 1);
  }
}

TEST(ModelProperty, Deterministic) {
  Expr e = parse_expr("log2(x) * 3 + x / 7");
  for (long x = 1; x < 40; ++x) {
    Num a = eval_ground(e, env1("x", x));
    Num b = eval_ground(e, env1("x", x));
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(Validate, RejectsMissingBaseCase) {
  EXPECT_THROW(parse("def f(x) pre x >= 0 { case true -> f(x - 1) } entry f"), ParseError);
}

TEST(Totality, UncoveredPointIsReported) {
  RecurrenceSystem sys = parse("def f(x) pre x >= 0 { case x = 0 -> 0 case x > 1 -> f(x - 1) } entry f").system;
  EXPECT_THROW(check_totality(sys), ModelError);
  auto pt = find_uncovered_point(sys.functions[0]);
  ASSERT_TRUE(pt.has_value());
  EXPECT_EQ(pt->at("x"), 1);
}
