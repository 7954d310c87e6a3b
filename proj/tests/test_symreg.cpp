#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "recsolve/dsl.hpp"
#include "recsolve/rewriter.hpp"
#include "recsolve/symreg.hpp"

using namespace recsolve;

namespace {

GpData line_data(const std::function<double(double)>& fn, int lo, int hi) {
  GpData d;
  d.cols.resize(1);
  for (int x = lo; x <= hi; ++x) {
    d.cols[0].push_back(x);
    d.y.push_back(fn(x));
  }
  return d;
}

GPConfig quick(uint64_t seed) {
  GPConfig g;
  g.seed = seed;
  g.populations = 12;
  g.iterations = 20;
  return g;
}

// Independent tree walker over the prefix form using exact evaluation.
std::optional<double> oracle(const GpTree& t, const std::vector<std::string>& params, const Env& env) {
  try {
    return eval_ground(gp_to_expr(t, params), env).to_double();
  } catch (const EvalError&) {
    return std::nullopt;
  }
}

bool has_op(const GpTree& t, GpOp op) {
  for (const auto& n : t)
    if (n.op == op) return true;
  return false;
}

}  // namespace

TEST(GpTree, ArityAndCost) {
  OperatorSet ops = OperatorSet::full();
  GpTree t = {{GpOp::Add}, {GpOp::Floor}, {GpOp::Var, 0}, {GpOp::Pow}, {GpOp::Const, 0, 2.0}, {GpOp::Var, 1}};
  EXPECT_EQ(subtree_end(t, 0), t.size());
  EXPECT_EQ(subtree_end(t, 1), 3u);
  EXPECT_EQ(complexity(t, ops), 1 + 2 + 1 + 3 + 1 + 1);
  EXPECT_EQ(print(gp_to_expr(t, {"x", "y"})), "floor(x) + 2^y");
}

TEST(GpEval, UndefinedRowsAreNaN) {
  GpData d = line_data([](double x) { return x; }, 0, 3);
  EXPECT_TRUE(std::isnan(gp_eval({{GpOp::Log2}, {GpOp::Var, 0}}, d)[0]));
  EXPECT_TRUE(std::isnan(gp_eval({{GpOp::Div}, {GpOp::Const, 0, 1.0}, {GpOp::Var, 0}}, d)[0]));
  EXPECT_TRUE(std::isinf(gp_loss({{GpOp::Log2}, {GpOp::Var, 0}}, d)));
  EXPECT_TRUE(std::isnan(gp_eval({{GpOp::Fact}, {GpOp::Const, 0, -1.0}}, d)[0]));
  EXPECT_TRUE(std::isnan(gp_eval({{GpOp::Exp2}, {GpOp::Const, 0, 600.0}}, d)[0]));
  EXPECT_EQ(gp_eval({{GpOp::Fact}, {GpOp::Var, 0}}, d)[3], 6.0);
}

TEST(GpEvalProperty, MatchesExactEvaluation) {
  std::mt19937_64 rng(31);
  OperatorSet ops = OperatorSet::full();
  std::vector<std::string> params = {"x", "y"};
  GpData d;
  d.cols.resize(2);
  std::vector<Env> envs;
  for (int x = 0; x <= 6; ++x)
    for (int y = 0; y <= 6; ++y) {
      d.cols[0].push_back(x);
      d.cols[1].push_back(y);
      d.y.push_back(0);
      envs.push_back(Env{{"x", x}, {"y", y}});
    }
  int compared = 0;
  for (int k = 0; k < 400; ++k) {
    GpTree t = random_tree(ops, 2, rng, 4);
    auto got = gp_eval(t, d);
    for (size_t r = 0; r < envs.size(); ++r) {
      auto want = oracle(t, params, envs[r]);
      if (!want || !std::isfinite(*want) || std::fabs(*want) > 1e150) continue;
      ASSERT_FALSE(std::isnan(got[r])) << print(gp_to_expr(t, params));
      EXPECT_NEAR(got[r], *want, 1e-9 * std::max(1.0, std::fabs(*want))) << print(gp_to_expr(t, params));
      ++compared;
    }
  }
  EXPECT_GT(compared, 1000);
}

TEST(OptimizeConstants, ScaleToTwo) {
  GpData d = line_data([](double x) { return 2 * x; }, 1, 20);
  GpTree t = {{GpOp::Mul}, {GpOp::Const, 0, 1.7}, {GpOp::Var, 0}};
  GpTree o = optimize_constants(t, d);
  EXPECT_NEAR(o[1].value, 2.0, 1e-3);
}

TEST(OptimizeConstants, AffinePair) {
  GpData d = line_data([](double x) { return 3 + 5 * x; }, 1, 20);
  GpTree t = {{GpOp::Add}, {GpOp::Const, 0, 1.0}, {GpOp::Mul}, {GpOp::Const, 0, 1.0}, {GpOp::Var, 0}};
  GpTree o = optimize_constants(t, d);
  EXPECT_NEAR(o[1].value, 3.0, 1e-3);
  EXPECT_NEAR(o[3].value, 5.0, 1e-3);
}

TEST(OptimizeConstants, NoConstantsUnchanged) {
  GpData d = line_data([](double x) { return x * x; }, 1, 10);
  GpTree t = {{GpOp::Square}, {GpOp::Var, 0}};
  GpTree o = optimize_constants(t, d);
  ASSERT_EQ(o.size(), t.size());
  EXPECT_EQ(o[0].op, GpOp::Square);
}

TEST(OptimizeConstants, NeverWorse) {
  std::mt19937_64 rng(5);
  OperatorSet ops = OperatorSet::full();
  GpData d = line_data([](double x) { return x * x + 3; }, 1, 15);
  for (int k = 0; k < 100; ++k) {
    GpTree t = random_tree(ops, 1, rng, 3);
    EXPECT_LE(gp_loss(optimize_constants(t, d), d), gp_loss(t, d));
  }
}

TEST(Evolve, ConstantTargets) {
  GpData d = line_data([](double) { return 5; }, 1, 20);
  ParetoFront f = evolve(d, OperatorSet::full(), quick(1));
  ASSERT_FALSE(f.entries.empty());
  EXPECT_EQ(f.entries[0].complexity, 1);
  EXPECT_EQ(f.entries[0].tree[0].op, GpOp::Const);
  EXPECT_NEAR(f.entries[0].tree[0].value, 5.0, 1e-9);
  EXPECT_LT(f.entries[0].loss, 1e-15);
}

TEST(EvolveProperty, FrontInvariants) {
  GpData d = line_data([](double x) { return x * std::log2(x + 1) + 1; }, 1, 30);
  for (OperatorSet ops : {OperatorSet::full(), OperatorSet::exp_sum()}) {
    GPConfig g = quick(3);
    ParetoFront f = evolve(d, ops, g);
    ASSERT_FALSE(f.entries.empty());
    for (size_t i = 0; i < f.entries.size(); ++i) {
      const auto& e = f.entries[i];
      EXPECT_LE(e.complexity, g.max_complexity);
      EXPECT_EQ(e.complexity, complexity(e.tree, ops));
      for (const auto& n : e.tree) EXPECT_TRUE(ops.allows(n.op)) << gp_name(n.op);
      EXPECT_DOUBLE_EQ(e.loss, gp_loss(e.tree, d));
      if (i > 0) {
        EXPECT_GT(e.complexity, f.entries[i - 1].complexity);
        EXPECT_LT(e.loss, f.entries[i - 1].loss);
      }
    }
  }
}

TEST(EvolveProperty, DeterministicAcrossThreadCounts) {
  GpData d = line_data([](double x) { return 3 * x * x + 1; }, 1, 20);
  GPConfig a = quick(9), b = quick(9);
  a.threads = 1;
  b.threads = 4;
  ParetoFront fa = evolve(d, OperatorSet::full(), a), fb = evolve(d, OperatorSet::full(), b);
  ASSERT_EQ(fa.entries.size(), fb.entries.size());
  for (size_t i = 0; i < fa.entries.size(); ++i) {
    EXPECT_EQ(fa.entries[i].loss, fb.entries[i].loss);
    EXPECT_EQ(print(gp_to_expr(fa.entries[i].tree, {"x"})), print(gp_to_expr(fb.entries[i].tree, {"x"})));
  }
}

TEST(Evolve, BudgetExhaustedReturnsFront) {
  GpData d = line_data([](double x) { return x; }, 1, 20);
  GPConfig g = quick(1);
  g.time_budget = 0.0;
  ParetoFront f = evolve(d, OperatorSet::full(), g);
  EXPECT_TRUE(f.budget_exhausted);
  EXPECT_FALSE(f.entries.empty());
}

TEST(Evolve, ExpOfSumWithRestrictedOperators) {
  GpData d;
  d.cols.resize(2);
  for (int x = 1; x <= 10; ++x)
    for (int y = 1; y <= 10; ++y) {
      d.cols[0].push_back(x);
      d.cols[1].push_back(y);
      d.y.push_back(std::exp2(x + y));
    }
  int hits = 0;
  for (uint64_t s = 1; s <= 5; ++s) {
    ParetoFront f = evolve(d, OperatorSet::exp_sum(), quick(s));
    for (const auto& e : f.entries) hits += e.loss == 0.0;
  }
  EXPECT_GE(hits, 1);
}

TEST(GuessSymbolic, NestedWithSplit) {
  RecurrenceSystem sys = parse("def f(x) pre x>=0 { case x=0 -> 0 case x>0 -> f(f(x-1))+1 } entry f").system;
  SymbolicConfig cfg;
  cfg.gp = quick(1);
  SymbolicGuess g = guess_symbolic(sys, "f", cfg, {}, true);
  ASSERT_EQ(g.cf.pieces.size(), 2u);
  EXPECT_EQ(g.cf.pieces[0].domain, parse_bool("x = 0"));
  EXPECT_EQ(simplify(g.cf.pieces[0].body), Expr::constant(0L));
  EXPECT_EQ(simplify(g.cf.pieces[1].body), Expr::var("x"));
  EXPECT_EQ(g.cf.pieces[0].score, 1.0);
  EXPECT_EQ(g.cf.pieces[1].score, 1.0);
}

TEST(GuessSymbolic, MergeWithSplit) {
  RecurrenceSystem sys = parse(
                             "def m(x, y) pre x >= 0 and y >= 0 {\n"
                             " case x > 0 and y > 0 -> 1 + max(m(x - 1, y), m(x, y - 1))\n"
                             " case x = 0 or y = 0 -> 0 }\nentry m")
                             .system;
  SymbolicConfig cfg;
  cfg.gp = quick(2);
  SymbolicGuess g = guess_symbolic(sys, "m", cfg, {}, true);
  ASSERT_EQ(g.cf.pieces.size(), 2u);
  EXPECT_EQ(g.cf.score, 1.0);
  EXPECT_EQ(simplify(g.cf.pieces[0].body), simplify(parse_expr("x + y - 1")));
}

TEST(GuessSymbolic, FactorialRecurrence) {
  RecurrenceSystem sys =
      parse("def f(n) pre n >= 0 { case n = 0 -> 1 case n > 0 -> n * f(n - 1) } entry f").system;
  SymbolicConfig cfg;
  cfg.gp = quick(1);
  SymbolicGuess g = guess_symbolic(sys, "f", cfg, {}, true);
  ASSERT_EQ(g.cf.pieces.size(), 2u);
  EXPECT_EQ(g.cf.pieces[1].score, 1.0);
  EXPECT_TRUE(contains_kind(g.cf.pieces[1].body, ExprKind::Factorial)) << print(g.cf.pieces[1].body);
}
