#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "recsolve/dsl.hpp"
#include "recsolve/rewriter.hpp"

using namespace recsolve;

namespace {

std::optional<Num> try_eval(const Expr& e, const Env& env) {
  try {
    return eval_ground(e, env);
  } catch (const EvalError&) {
    return std::nullopt;
  }
}

bool close(const Num& a, const Num& b) {
  if (a.exact && b.exact) return a.q == b.q;
  double x = a.to_double(), y = b.to_double();
  return std::fabs(x - y) <= 1e-9 * std::max(1.0, std::max(std::fabs(x), std::fabs(y)));
}

const std::vector<std::string> kForms = {
    "2^(x+1) - 2*2^x",
    "x + 0",
    "log2(2^x)",
    "2^(log2(x + 1))",
    "(x + y)^2 - x^2 - 2*x*y",
    "3*x + 2 - x*3",
    "floor(x + y) + ceil(2*x)",
    "floor(x / 2) * 2 + x - x",
    "(2^x)^3 / 2^(2*x)",
    "x*(y + 1) - x*y",
    "max(x, y) + min(x, y) - x - y",
    "1/3 * x + 2/3 * x",
    "0 * fact(x) + x",
    "ceil(log2(x))",
    "log2(4 * 2^x)",
    "(x - 1) * (x + 1) - x^2",
    "2^(x + y) * 2^(1 - y)",
    "x / x",
    "x^0 + y^1",
    "floor(x / 3) + ceil(y / 4) - floor(x / 3)",
    "fact(x) / fact(x)",
    "4^x - 2^(2*x)",
    "x + y - 1 + (1 - x)",
    "ite(x > 0, x + 0, 2*0)",
};

}  // namespace

TEST(Simplify, SpecExamples) {
  EXPECT_EQ(simplify(parse_expr("2^(x+1) - 2*2^x")), Expr::constant(0L));
  EXPECT_EQ(simplify(parse_expr("x + 0")), Expr::var("x"));
  EXPECT_EQ(simplify(parse_expr("log2(2^x)")), Expr::var("x"));
}

TEST(Simplify, MoreRules) {
  EXPECT_EQ(simplify(parse_expr("3*x + 2 - x*3")), Expr::constant(2L));
  EXPECT_EQ(simplify(parse_expr("x * 1")), Expr::var("x"));
  EXPECT_EQ(simplify(parse_expr("0 * y")), Expr::constant(0L));
  EXPECT_EQ(simplify(parse_expr("floor(x + 1)")), simplify(parse_expr("x + 1")));
  EXPECT_EQ(simplify(parse_expr("(2^x)^3 / 2^(2*x)")), simplify(parse_expr("2^x")));
  EXPECT_EQ(simplify(parse_expr("1/3 * x + 2/3 * x")), Expr::var("x"));
}

TEST(Simplify, BoolRules) {
  EXPECT_EQ(simplify(parse_bool("x > 0 and not (x = 0)")), parse_bool("x > 0"));
  EXPECT_EQ(simplify(parse_bool("not not (x = 0)")), parse_bool("x = 0"));
  EXPECT_EQ(simplify(parse_bool("x >= 0")), BoolExpr::truth());
  EXPECT_EQ(simplify(parse_bool("x = 0 or x > 0")), BoolExpr::truth());
  EXPECT_EQ(simplify(parse_bool("x > 0 and x < 1")), BoolExpr::falsity());
  EXPECT_EQ(simplify(parse_bool("x = 0 and (x = 0 or y = 1)")), parse_bool("x = 0"));
}

TEST(Simplify, NaturalsFlagControlsBoundReasoning) {
  SimplifyOptions off;
  off.naturals = false;
  EXPECT_NE(simplify(parse_bool("x >= 0"), off), BoolExpr::truth());
}

TEST(Simplify, TerminatesWithinPassLimit) {
  SimplifyStats st;
  for (const auto& s : kForms) {
    simplify(parse_expr(s), {}, &st);
    EXPECT_LE(st.passes, 20) << s;
    EXPECT_TRUE(st.fixpoint) << s;
  }
}

TEST(SimplifyProperty, SoundOnRandomNaturals) {
  std::mt19937 rng(11);
  for (const auto& s : kForms) {
    Expr e = parse_expr(s);
    Expr r = simplify(e);
    for (int t = 0; t < 1000; ++t) {
      Env env{{"x", long(rng() % 40)}, {"y", long(rng() % 40)}};
      auto a = try_eval(e, env);
      if (!a) continue;
      auto b = try_eval(r, env);
      ASSERT_TRUE(b.has_value()) << s << " -> " << print(r);
      EXPECT_TRUE(close(*a, *b)) << s << " -> " << print(r) << " at x=" << env["x"] << " y=" << env["y"];
    }
  }
}

TEST(SimplifyProperty, BoolSoundOnRandomNaturals) {
  std::mt19937 rng(13);
  const std::vector<std::string> forms = {
      "x > 0 and not (x = 0)", "not (x > 0 and y > 0) and (x = 0 or y = 0)", "x >= 2 or x < 3",
      "not (x + y > 3) or x = y", "x = 0 and y = 0 or x > 0", "x != 1 and x > 0 and x < 3",
      "not (x <= 4) and x <= 5", "2 * x < 2 * y + 1"};
  for (const auto& s : forms) {
    BoolExpr c = parse_bool(s);
    BoolExpr r = simplify(c);
    for (int t = 0; t < 500; ++t) {
      Env env{{"x", long(rng() % 12)}, {"y", long(rng() % 12)}};
      EXPECT_EQ(eval_bool(c, env), eval_bool(r, env)) << s << " -> " << print(r);
    }
  }
}

TEST(SimplifyProperty, Idempotent) {
  for (const auto& s : kForms) {
    Expr once = simplify(parse_expr(s));
    EXPECT_EQ(simplify(once), once) << s << " -> " << print(once);
  }
}

TEST(SimplifyProperty, SoundOnRandomTrees) {
  std::mt19937 rng(17);
  std::function<Expr(int)> gen = [&](int depth) -> Expr {
    if (depth == 0 || rng() % 4 == 0) {
      switch (rng() % 3) {
        case 0: return Expr::var("x");
        case 1: return Expr::var("y");
        default: return Expr::constant(long(rng() % 5));
      }
    }
    Expr a = gen(depth - 1), b = gen(depth - 1);
    switch (rng() % 8) {
      case 0: return a + b;
      case 1: return a - b;
      case 2: return a * b;
      case 3: return pow(Expr::constant(2L), a);
      case 4: return floor(a);
      case 5: return max(a, b);
      case 6: return pow(a, Expr::constant(long(rng() % 3)));
      default: return min(a, b);
    }
  };
  for (int k = 0; k < 300; ++k) {
    Expr e = gen(4);
    Expr r = simplify(e);
    EXPECT_EQ(simplify(r), r) << print(e);
    for (int t = 0; t < 20; ++t) {
      Env env{{"x", long(rng() % 8)}, {"y", long(rng() % 8)}};
      auto a = try_eval(e, env);
      if (!a) continue;
      auto b = try_eval(r, env);
      ASSERT_TRUE(b.has_value()) << print(e) << " -> " << print(r);
      EXPECT_TRUE(close(*a, *b)) << print(e) << " -> " << print(r);
    }
  }
}

TEST(Unsupported, SpecExamples) {
  EXPECT_EQ(contains_unsupported(parse_expr("x! + 1")), std::vector<std::string>{"Factorial"});
  EXPECT_TRUE(contains_unsupported(parse_expr("3*x + 2")).empty());
  EXPECT_TRUE(contains_unsupported(parse_expr("2^x")).empty());
  auto v = contains_unsupported(parse_expr("x^y + log2(x)"));
  EXPECT_NE(std::find(v.begin(), v.end(), "Pow"), v.end());
  EXPECT_NE(std::find(v.begin(), v.end(), "Log2"), v.end());
  EXPECT_TRUE(contains_unsupported(parse_expr("log2(2^x)")).empty());
  PiecewiseClosedForm cf;
  cf.pieces.push_back(Piece{BoolExpr::truth(), Expr::constant(exact_rational(0.1234567)) * Expr::var("x")});
  cf.pieces.back().exact = false;
  auto w = contains_unsupported(cf);
  EXPECT_NE(std::find(w.begin(), w.end(), "InexactConstant"), w.end());
}

TEST(IntegerValued, Examples) {
  EXPECT_TRUE(integer_valued(parse_expr("x * y + 2^x")));
  EXPECT_FALSE(integer_valued(parse_expr("x / 2")));
  EXPECT_TRUE(integer_valued(parse_expr("floor(x / 2)")));
}
