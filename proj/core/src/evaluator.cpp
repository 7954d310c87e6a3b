#include "recsolve/evaluator.hpp"

#include <pthread.h>

#include <exception>
#include <functional>

namespace recsolve {

namespace {

thread_local bool t_large_stack = false;

struct ThreadArg {
  const std::function<void()>* fn;
  std::exception_ptr err;
};

void* trampoline(void* p) {
  auto* a = static_cast<ThreadArg*>(p);
  t_large_stack = true;
  try {
    (*a->fn)();
  } catch (...) {
    a->err = std::current_exception();
  }
  return nullptr;
}

}  // namespace

void run_with_large_stack(const std::function<void()>& fn, size_t bytes) {
  if (t_large_stack) {
    fn();
    return;
  }
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, bytes);
  ThreadArg arg{&fn, nullptr};
  pthread_t th;
  if (pthread_create(&th, &attr, trampoline, &arg) != 0) {
    pthread_attr_destroy(&attr);
    fn();
    return;
  }
  pthread_join(th, nullptr);
  pthread_attr_destroy(&attr);
  if (arg.err) std::rethrow_exception(arg.err);
}

bool Evaluator::Key::operator<(const Key& o) const {
  if (f != o.f) return f < o.f;
  if (args.size() != o.args.size()) return args.size() < o.args.size();
  for (size_t i = 0; i < args.size(); ++i) {
    int c = cmp(args[i], o.args[i]);
    if (c) return c < 0;
  }
  return false;
}

Evaluator::Evaluator(const RecurrenceSystem& sys, EvalBudget budget) : sys_(sys), budget_(budget) {
  restart_clock();
}

void Evaluator::restart_clock() {
  deadline_ = std::chrono::steady_clock::now() +
              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                  std::chrono::duration<double>(budget_.wall_seconds));
}

void Evaluator::check_clock() {
  if ((++tick_ & 255) == 0 && std::chrono::steady_clock::now() > deadline_)
    throw EvalError(EvalErrorKind::BudgetExceeded, "wall-clock budget exceeded");
}

Num Evaluator::call(const FuncDef& f, const Point& args, uint64_t depth) {
  if (depth > budget_.max_depth) throw EvalError(EvalErrorKind::BudgetExceeded, "recursion depth budget exceeded");
  Key key{&f, args};
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  if (++calls_ > budget_.max_calls) throw EvalError(EvalErrorKind::BudgetExceeded, "call budget exceeded");
  check_clock();
  Env env = make_env(f.params, args);
  for (const auto& c : f.cases) {
    if (eval_bool(c.guard, env)) {
      Num v = eval_body(c.body, env, depth);
      memo_.emplace(std::move(key), v);
      return v;
    }
  }
  std::string pt;
  for (const auto& a : args) pt += (pt.empty() ? "" : ", ") + a.get_str();
  throw EvalError(EvalErrorKind::NoMatchingCase, "no case of " + f.name + " matches (" + pt + ")");
}

Num Evaluator::eval_body(const Expr& e, const Env& env, uint64_t depth) {
  if (!contains_call(e)) return eval_ground(e, env);
  switch (e.kind()) {
    case ExprKind::Call: {
      const FuncDef* g = sys_.find(e.name());
      if (!g) throw EvalError(EvalErrorKind::CallInGround, "unknown function " + e.name());
      Point args;
      args.reserve(e.args().size());
      for (const auto& a : e.args()) {
        Num v = eval_body(a, env, depth);
        if (!v.is_integer()) floored_ = true;
        args.push_back(v.floor_int());
      }
      return call(*g, args, depth + 1);
    }
    case ExprKind::Add: return num_add(eval_body(e.arg(0), env, depth), eval_body(e.arg(1), env, depth));
    case ExprKind::Sub: return num_sub(eval_body(e.arg(0), env, depth), eval_body(e.arg(1), env, depth));
    case ExprKind::Mul: return num_mul(eval_body(e.arg(0), env, depth), eval_body(e.arg(1), env, depth));
    case ExprKind::Div: return num_div(eval_body(e.arg(0), env, depth), eval_body(e.arg(1), env, depth));
    case ExprKind::Pow: return num_pow(eval_body(e.arg(0), env, depth), eval_body(e.arg(1), env, depth));
    case ExprKind::Floor: return num_floor(eval_body(e.arg(0), env, depth));
    case ExprKind::Ceil: return num_ceil(eval_body(e.arg(0), env, depth));
    case ExprKind::Log2: return num_log2(eval_body(e.arg(0), env, depth));
    case ExprKind::Factorial: return num_factorial(eval_body(e.arg(0), env, depth));
    case ExprKind::Max:
    case ExprKind::Min: {
      Num a = eval_body(e.arg(0), env, depth);
      Num b = eval_body(e.arg(1), env, depth);
      int c = num_cmp(a, b);
      if (e.kind() == ExprKind::Max) return c >= 0 ? a : b;
      return c <= 0 ? a : b;
    }
    case ExprKind::Ite:
      return eval_bool(e.cond(), env) ? eval_body(e.arg(0), env, depth) : eval_body(e.arg(1), env, depth);
    default: return eval_ground(e, env);
  }
}

Num Evaluator::eval_fun(const std::string& func, const Point& args) {
  const FuncDef* f = sys_.find(func);
  if (!f) throw EvalError(EvalErrorKind::CallInGround, "unknown function " + func);
  if (args.size() != f->arity()) throw EvalError(EvalErrorKind::CallInGround, "arity mismatch for " + func);
  calls_ = 0;
  if (!in_batch_) restart_clock();
  Num out;
  run_with_large_stack([&] { out = call(*f, args, 0); });
  return out;
}

EvalOutcome Evaluator::try_eval(const std::string& func, const Point& args) {
  EvalOutcome o;
  o.input = args;
  bool before = floored_;
  floored_ = false;
  try {
    o.value = eval_fun(func, args);
  } catch (const EvalError& e) {
    o.error = e.kind();
    o.message = e.what();
  }
  o.floored = floored_;
  floored_ = before || floored_;
  return o;
}

std::vector<EvalOutcome> Evaluator::batch_eval(const std::string& func, const std::vector<Point>& inputs) {
  std::vector<EvalOutcome> out;
  out.reserve(inputs.size());
  restart_clock();
  in_batch_ = true;
  try {
    run_with_large_stack([&] {
      for (const auto& in : inputs) out.push_back(try_eval(func, in));
    });
  } catch (...) {
    in_batch_ = false;
    throw;
  }
  in_batch_ = false;
  return out;
}

Num eval_fun(const RecurrenceSystem& sys, const std::string& func, const Point& args, EvalBudget budget) {
  Evaluator ev(sys, budget);
  return ev.eval_fun(func, args);
}

std::vector<EvalOutcome> batch_eval(const RecurrenceSystem& sys, const std::string& func,
                                    const std::vector<Point>& inputs, EvalBudget budget) {
  Evaluator ev(sys, budget);
  return ev.batch_eval(func, inputs);
}

}  // namespace recsolve
