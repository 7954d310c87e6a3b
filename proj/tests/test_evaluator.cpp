#include <gtest/gtest.h>

#include "recsolve/dsl.hpp"
#include "recsolve/evaluator.hpp"

using namespace recsolve;

namespace {

RecurrenceSystem sys_of(const std::string& t) { return parse(t).system; }

const char* kNested = "def f(x) pre x>=0 { case x=0 -> 0 case x>0 -> f(f(x-1))+1 } entry f";
const char* kFib = "def f(n) pre n>=0 { case n=0 -> 1 case n=1 -> 1 case n>=2 -> f(n-1)+f(n-2) } entry f";

mpz_class naive_fib(int n) {
  mpz_class a = 1, b = 1;
  for (int i = 2; i <= n; ++i) {
    mpz_class c = a + b;
    a = b;
    b = c;
  }
  return b;
}

}  // namespace

TEST(Evaluator, NestedAtFive) {
  Num v = eval_fun(sys_of(kNested), "f", {5});
  EXPECT_EQ(v.q, 5);
}

TEST(Evaluator, FibonacciAgainstIterativeOracle) {
  RecurrenceSystem s = sys_of(kFib);
  EXPECT_EQ(eval_fun(s, "f", {10}).q, 89);
  Evaluator ev(s);
  for (int n = 0; n <= 200; ++n) EXPECT_EQ(ev.eval_fun("f", {n}).q, naive_fib(n)) << n;
}

TEST(Evaluator, NonTerminatingHitsBudget) {
  RecurrenceSystem s = sys_of("def q(c) pre c >= 0 { case c = 0 -> 0 case c > 0 -> q(c + 1) } entry q");
  try {
    eval_fun(s, "q", {3});
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalErrorKind::BudgetExceeded);
  }
}

TEST(Evaluator, DeepLinearRecursionWithinDepth) {
  RecurrenceSystem s = sys_of("def f(n) pre n >= 0 { case n = 0 -> 0 case n > 0 -> f(n - 1) + 1 } entry f");
  EXPECT_EQ(eval_fun(s, "f", {9000}).q, 9000);
  EXPECT_THROW(eval_fun(s, "f", {20000}), EvalError);
}

TEST(Evaluator, MutualRecursion) {
  RecurrenceSystem s = sys_of(
      "def even(n) pre n >= 0 { case n = 0 -> 1 case n > 0 -> odd(n - 1) }\n"
      "def odd(n) pre n >= 0 { case n = 0 -> 0 case n > 0 -> even(n - 1) }\nentry even");
  EXPECT_EQ(eval_fun(s, "even", {10}).q, 1);
  EXPECT_EQ(eval_fun(s, "even", {7}).q, 0);
}

TEST(Evaluator, FirstMatchingCaseWins) {
  RecurrenceSystem s = sys_of("def f(x) pre x >= 0 { case x >= 0 -> 1 case x = 0 -> 2 } entry f");
  EXPECT_EQ(eval_fun(s, "f", {0}).q, 1);
}

TEST(Evaluator, MissingCaseReported) {
  // totality is only checked by load_benchmark; parse alone lets this through when the gap is above the grid
  RecurrenceSystem s = sys_of("def f(x) pre x >= 0 { case x < 50 -> 1 case x > 50 -> 2 } entry f");
  EvalOutcome o = Evaluator(s).try_eval("f", {50});
  ASSERT_TRUE(o.error.has_value());
  EXPECT_EQ(*o.error, EvalErrorKind::NoMatchingCase);
}

TEST(Evaluator, NonIntegralArgumentIsFlooredAndFlagged) {
  RecurrenceSystem s = sys_of("def f(x) pre x >= 0 { case x = 0 -> 0 case x > 0 -> f(x / 2) + 1 } entry f");
  Evaluator ev(s);
  EvalOutcome o = ev.try_eval("f", {5});
  ASSERT_TRUE(o.ok());
  EXPECT_EQ(o.value->q, 3);
  EXPECT_TRUE(o.floored);
  EvalOutcome p = ev.try_eval("f", {4});
  EXPECT_EQ(p.value->q, 3);
  EXPECT_FALSE(p.floored);
}

TEST(Evaluator, BatchKeepsOrderAndCapturesErrors) {
  RecurrenceSystem s = sys_of("def f(x) pre x >= 0 { case x = 3 -> 1 / (x - 3) case x != 3 -> x } entry f");
  auto out = batch_eval(s, "f", {{1}, {3}, {7}});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].value->q, 1);
  EXPECT_EQ(*out[1].error, EvalErrorKind::DivisionByZero);
  EXPECT_EQ(out[2].value->q, 7);
}

TEST(Evaluator, MemoIsPureCache) {
  RecurrenceSystem s = sys_of(kNested);
  Evaluator warm(s);
  for (int x = 0; x < 60; ++x) warm.eval_fun("f", {x});
  for (int x = 59; x >= 0; --x) {
    Evaluator cold(s);
    EXPECT_EQ(cold.eval_fun("f", {x}).q, warm.eval_fun("f", {x}).q);
  }
  EXPECT_GT(warm.memo_size(), 0u);
}

TEST(Evaluator, TwoArgumentMerge) {
  RecurrenceSystem s = sys_of(
      "def m(x, y) pre x >= 0 and y >= 0 {\n"
      " case x = 0 or y = 0 -> 0\n"
      " case x > 0 and y > 0 -> 1 + max(m(x - 1, y), m(x, y - 1)) }\nentry m");
  for (int x = 0; x < 15; ++x)
    for (int y = 0; y < 15; ++y) {
      long want = (x > 0 && y > 0) ? x + y - 1 : 0;
      EXPECT_EQ(eval_fun(s, "m", {x, y}).q, want);
    }
}
