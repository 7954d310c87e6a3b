#pragma once

#include <chrono>
#include <functional>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recsolve/system.hpp"

namespace recsolve {

using Point = std::vector<mpz_class>;

struct EvalBudget {
  uint64_t max_calls = 1000000;
  uint64_t max_depth = 10000;
  double wall_seconds = 2.0;
};

struct EvalOutcome {
  Point input;
  std::optional<Num> value;
  std::optional<EvalErrorKind> error;
  std::string message;
  bool floored = false;  // a non-integral nested argument was floored

  bool ok() const { return value.has_value(); }
};

// Memoizing implementation of the first-matching-case evaluation strategy.
// Single owner; use one instance per thread.
class Evaluator {
 public:
  explicit Evaluator(const RecurrenceSystem& sys, EvalBudget budget = {});

  // Throws EvalError on failure.
  Num eval_fun(const std::string& func, const Point& args);
  EvalOutcome try_eval(const std::string& func, const Point& args);
  std::vector<EvalOutcome> batch_eval(const std::string& func, const std::vector<Point>& inputs);

  // Restarts the wall-clock budget; batch_eval does this on entry.
  void restart_clock();

  bool floored() const { return floored_; }
  size_t memo_size() const { return memo_.size(); }
  const EvalBudget& budget() const { return budget_; }

 private:
  struct Key {
    const FuncDef* f;
    Point args;
    bool operator<(const Key& o) const;
  };

  Num call(const FuncDef& f, const Point& args, uint64_t depth);
  Num eval_body(const Expr& e, const Env& env, uint64_t depth);
  void check_clock();

  const RecurrenceSystem& sys_;
  EvalBudget budget_;
  std::map<Key, Num> memo_;
  uint64_t calls_ = 0;
  std::chrono::steady_clock::time_point deadline_;
  bool floored_ = false;
  bool in_batch_ = false;
  uint64_t tick_ = 0;
};

Num eval_fun(const RecurrenceSystem& sys, const std::string& func, const Point& args, EvalBudget budget = {});

std::vector<EvalOutcome> batch_eval(const RecurrenceSystem& sys, const std::string& func,
                                    const std::vector<Point>& inputs, EvalBudget budget = {});

// Runs fn on a thread with a large stack; deep recursions need it.
void run_with_large_stack(const std::function<void()>& fn, size_t bytes = size_t(1) << 30);

}  // namespace recsolve
