#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "recsolve/dsl.hpp"
#include "recsolve/evaluator.hpp"
#include "recsolve/harness.hpp"

using namespace recsolve;

namespace {

std::vector<BenchmarkFile> corpus() {
  std::vector<BenchmarkFile> out;
  for (const auto& p : corpus_files(RECSOLVE_CORPUS_DIR)) out.push_back(load_benchmark(p));
  return out;
}

struct Exhausted {};

// Plain recursion without memo: calls are replaced by their values innermost
// first and the rest goes through ground evaluation.
class Naive {
 public:
  explicit Naive(const RecurrenceSystem& s) : sys_(s) {}

  Num call(const FuncDef& f, const std::vector<mpz_class>& args, int depth) {
    if (depth > 3000 || ++calls_ > 3000000) throw Exhausted{};
    Env env = make_env(f.params, args);
    for (const auto& c : f.cases)
      if (eval_bool(c.guard, env)) return eval_ground(resolve(c.body, env, depth), env);
    throw EvalError(EvalErrorKind::NoMatchingCase, f.name);
  }

  uint64_t calls_ = 0;

 private:
  Expr resolve(const Expr& e, const Env& env, int depth) {
    if (!contains_call(e)) return e;
    switch (e.kind()) {
      case ExprKind::Call: {
        std::vector<mpz_class> args;
        for (const auto& a : e.args()) args.push_back(eval_ground(resolve(a, env, depth), env).floor_int());
        Num v = call(*sys_.find(e.name()), args, depth + 1);
        return Expr::constant(v.exact ? v.q : exact_rational(v.d));
      }
      case ExprKind::Floor:
      case ExprKind::Ceil:
      case ExprKind::Log2:
      case ExprKind::Factorial: return Expr::unary(e.kind(), resolve(e.arg(0), env, depth));
      default: return Expr::binary(e.kind(), resolve(e.arg(0), env, depth), resolve(e.arg(1), env, depth));
    }
  }
  const RecurrenceSystem& sys_;
};

// All of [0,b]^m when small, seeded random points of it otherwise.
std::vector<Point> probe_points(size_t m, long b, size_t limit) {
  std::vector<Point> pts;
  if (std::pow(double(b + 1), double(m)) <= double(limit)) {
    Point x(m, 0);
    for (;;) {
      pts.push_back(x);
      size_t i = 0;
      while (i < m && x[i] == b) x[i++] = 0;
      if (i == m) break;
      x[i] += 1;
    }
    return pts;
  }
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> d(0, b);
  for (size_t k = 0; k < limit; ++k) {
    Point x(m);
    for (auto& c : x) c = d(rng);
    pts.push_back(x);
  }
  return pts;
}

}  // namespace

TEST(Corpus, HasEveryCategory) {
  auto files = corpus();
  ASSERT_GE(files.size(), 40u);
  for (const auto& cat : known_categories()) {
    bool seen = false;
    for (const auto& f : files) seen |= f.category == cat;
    EXPECT_TRUE(seen) << cat;
  }
}

TEST(Corpus, ExpectMatchesEvaluator) {
  for (const auto& file : corpus()) {
    if (!file.expect) continue;
    const FuncDef& f = file.system.entry_function();
    Evaluator ev(file.system);
    size_t checked = 0;
    for (const auto& p : probe_points(f.arity(), 12, 3000)) {
      Env env = make_env(f.params, p);
      if (!eval_bool(f.pre, env)) continue;
      EvalOutcome o = ev.try_eval(f.name, p);
      if (!o.ok()) continue;
      ++checked;
      Num e = file.expect->eval(env);
      ASSERT_TRUE(num_eq(*o.value, e)) << file.name << " at " << p[0].get_str() << ": " << o.value->str()
                                       << " vs " << e.str();
    }
    EXPECT_GT(checked, 0u) << file.name;
  }
}

TEST(Corpus, MemoizedEqualsNaiveRecursion) {
  for (const auto& file : corpus()) {
    const FuncDef& f = file.system.entry_function();
    Evaluator ev(file.system);
    Naive naive(file.system);
    size_t agreed = 0;
    for (const auto& p : probe_points(f.arity(), 6, 5000)) {
      if (!eval_bool(f.pre, make_env(f.params, p))) continue;
      EvalOutcome o = ev.try_eval(f.name, p);
      std::optional<Num> slow;
      try {
        naive.calls_ = 0;
        slow = naive.call(f, p, 0);
      } catch (const Exhausted&) {
      } catch (const EvalError&) {
      }
      if (!o.ok() || !slow) continue;
      ASSERT_TRUE(num_eq(*o.value, *slow)) << file.name;
      ++agreed;
    }
    if (file.name != "q_nonterm") EXPECT_GT(agreed, 0u) << file.name;
  }
}

TEST(Corpus, NonTerminatingCostRecurrence) {
  BenchmarkFile q = load_benchmark(std::string(RECSOLVE_CORPUS_DIR) + "/q_nonterm.rec");
  for (long x = 1; x <= 5; ++x) {
    EvalOutcome o = Evaluator(q.system).try_eval("q", {mpz_class(x)});
    ASSERT_TRUE(o.error.has_value());
    EXPECT_EQ(*o.error, EvalErrorKind::BudgetExceeded) << x;
  }
}

TEST(Corpus, ExpectClassifiesAsExact) {
  for (const auto& file : corpus()) {
    if (!file.expect) continue;
    EXPECT_EQ(classify(*file.expect, file.expect, nullptr, file.system.entry_function()), Classification::Exact)
        << file.name;
  }
}

TEST(Corpus, ScaledExpectStaysInClass) {
  for (const auto& file : corpus()) {
    if (!file.expect) continue;
    for (long num : {2L, 7L, 1L}) {
      for (long den : {1L, 3L}) {
        if (num == 1 && den == 1) continue;
        PiecewiseClosedForm scaled = *file.expect;
        for (auto& p : scaled.pieces) p.body = Expr::constant(mpq_class(num, den)) * p.body;
        Classification c = classify(scaled, file.expect, nullptr, file.system.entry_function());
        EXPECT_TRUE(c == Classification::Exact || c == Classification::Theta)
            << file.name << " x" << num << "/" << den << " -> " << classification_name(c);
      }
    }
  }
}
