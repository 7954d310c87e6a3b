#include "recsolve/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <thread>

#include "recsolve/evaluator.hpp"

namespace recsolve {

const char* method_name(Method m) {
  switch (m) {
    case Method::Lasso: return "lasso";
    case Method::Symreg: return "symreg";
    case Method::Auto: return "auto";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& s) {
  if (s == "lasso") return Method::Lasso;
  if (s == "symreg") return Method::Symreg;
  if (s == "auto") return Method::Auto;
  return std::nullopt;
}

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::Exact: return "exact";
    case Classification::Theta: return "theta";
    case Classification::ExpTheta: return "exp-theta";
    case Classification::NonTrivial: return "nontrivial";
    case Classification::None: return "none";
  }
  return "?";
}

// ---- log-space evaluation ---------------------------------------------------

namespace {

// Exact while the value fits, log2 magnitude and sign after that.
struct LV {
  bool exact = true;
  Num num;
  int sign = 0;
  double l = 0.0;
};

LV from_num(const Num& n) {
  LV v;
  v.exact = true;
  v.num = n;
  if (n.exact) {
    v.sign = sgn(n.q);
    if (v.sign != 0) {
      long en = 0, ed = 0;
      double dn = mpz_get_d_2exp(&en, n.q.get_num_mpz_t());
      double dd = mpz_get_d_2exp(&ed, n.q.get_den_mpz_t());
      v.l = std::log2(std::fabs(dn)) + double(en) - std::log2(dd) - double(ed);
    }
  } else {
    v.sign = n.d > 0 ? 1 : (n.d < 0 ? -1 : 0);
    if (v.sign != 0) v.l = std::log2(std::fabs(n.d));
  }
  return v;
}

LV from_log(int sign, double l) {
  LV v;
  v.exact = false;
  v.sign = sign;
  v.l = sign == 0 ? 0.0 : l;
  return v;
}

bool finite(const LV& v) { return v.exact || std::isfinite(v.l); }

// Same sign: magnitudes add. Opposite signs: the larger dominates unless the
// two are too close to resolve in double precision.
std::optional<LV> log_add(const LV& a, const LV& b) {
  if (a.sign == 0) return b;
  if (b.sign == 0) return a;
  const LV& hi = a.l >= b.l ? a : b;
  const LV& lo = a.l >= b.l ? b : a;
  double d = lo.l - hi.l;
  if (a.sign == b.sign) return from_log(a.sign, hi.l + std::log2(1.0 + std::exp2(d)));
  if (d > -1e-9) return std::nullopt;
  return from_log(hi.sign, hi.l + std::log2(1.0 - std::exp2(d)));
}

int lv_cmp(const LV& a, const LV& b) {
  if (a.exact && b.exact) return num_cmp(a.num, b.num);
  if (a.sign != b.sign) return a.sign < b.sign ? -1 : 1;
  if (a.sign == 0) return 0;
  int c = a.l < b.l ? -1 : (a.l > b.l ? 1 : 0);
  return a.sign > 0 ? c : -c;
}

double as_double(const LV& v) {
  if (v.exact) return v.num.to_double();
  return v.sign * std::exp2(v.l);
}

std::optional<LV> lv_eval(const Expr& e, const Env& env);

std::optional<bool> lv_bool(const BoolExpr& c, const Env& env) {
  switch (c.kind()) {
    case BoolKind::True: return true;
    case BoolKind::Not: {
      auto x = lv_bool(c.children()[0], env);
      if (!x) return std::nullopt;
      return !*x;
    }
    case BoolKind::And:
    case BoolKind::Or: {
      bool conj = c.kind() == BoolKind::And;
      for (const auto& k : c.children()) {
        auto x = lv_bool(k, env);
        if (!x) return std::nullopt;
        if (*x != conj) return !conj;
      }
      return conj;
    }
    case BoolKind::Cmp: {
      auto a = lv_eval(c.lhs(), env);
      auto b = lv_eval(c.rhs(), env);
      if (!a || !b) return std::nullopt;
      int r = lv_cmp(*a, *b);
      switch (c.op()) {
        case CmpOp::Eq: return r == 0;
        case CmpOp::Ne: return r != 0;
        case CmpOp::Lt: return r < 0;
        case CmpOp::Le: return r <= 0;
        case CmpOp::Gt: return r > 0;
        case CmpOp::Ge: return r >= 0;
      }
    }
  }
  return std::nullopt;
}

template <class F>
std::optional<LV> exact_or(F&& exact_op, const std::function<std::optional<LV>()>& fallback) {
  try {
    return from_num(exact_op());
  } catch (const EvalError& err) {
    if (err.kind() != EvalErrorKind::Overflow) return std::nullopt;
  }
  return fallback();
}

std::optional<LV> lv_eval(const Expr& e, const Env& env) {
  switch (e.kind()) {
    case ExprKind::Const: return from_num(Num(e.value()));
    case ExprKind::Var: {
      auto it = env.find(e.name());
      if (it == env.end()) return std::nullopt;
      return from_num(Num(mpq_class(it->second)));
    }
    case ExprKind::Call: return std::nullopt;
    case ExprKind::Ite: {
      auto c = lv_bool(e.cond(), env);
      if (!c) return std::nullopt;
      return lv_eval(e.arg(*c ? 0 : 1), env);
    }
    default: break;
  }

  std::vector<LV> xs;
  for (const auto& a : e.args()) {
    auto v = lv_eval(a, env);
    if (!v || !finite(*v)) return std::nullopt;
    xs.push_back(*v);
  }
  bool all_exact = std::all_of(xs.begin(), xs.end(), [](const LV& v) { return v.exact; });
  auto logs = [&]() -> std::optional<LV> {
    const LV& a = xs[0];
    switch (e.kind()) {
      case ExprKind::Add: return log_add(a, xs[1]);
      case ExprKind::Sub: {
        LV nb = xs[1];
        nb.sign = -nb.sign;
        nb.exact = false;
        return log_add(a, nb);
      }
      case ExprKind::Mul: return from_log(a.sign * xs[1].sign, a.l + xs[1].l);
      case ExprKind::Div:
        if (xs[1].sign == 0) return std::nullopt;
        return from_log(a.sign * xs[1].sign, a.l - xs[1].l);
      case ExprKind::Pow: {
        double k = as_double(xs[1]);
        if (!std::isfinite(k)) return std::nullopt;
        if (a.sign == 0) return k > 0 ? std::optional<LV>(from_num(Num(0L))) : std::nullopt;
        int s = 1;
        if (a.sign < 0) {
          if (std::floor(k) != k) return std::nullopt;
          s = std::fmod(std::fabs(k), 2.0) == 1.0 ? -1 : 1;
        }
        return from_log(s, k * a.l);
      }
      case ExprKind::Floor:
      case ExprKind::Ceil: return from_log(a.sign, a.l);  // integral part dominates at this size
      case ExprKind::Log2: {
        if (a.sign <= 0) return std::nullopt;
        return from_num(Num::real(a.l));
      }
      case ExprKind::Factorial: {
        double n = as_double(a);
        if (!std::isfinite(n) || n < 0 || std::floor(n) != n) return std::nullopt;
        return from_log(1, std::lgamma(n + 1.0) / std::log(2.0));
      }
      case ExprKind::Max: return lv_cmp(a, xs[1]) >= 0 ? a : xs[1];
      case ExprKind::Min: return lv_cmp(a, xs[1]) <= 0 ? a : xs[1];
      default: return std::nullopt;
    }
  };
  if (!all_exact) return logs();
  return exact_or(
      [&]() -> Num {
        const Num& a = xs[0].num;
        switch (e.kind()) {
          case ExprKind::Add: return num_add(a, xs[1].num);
          case ExprKind::Sub: return num_sub(a, xs[1].num);
          case ExprKind::Mul: return num_mul(a, xs[1].num);
          case ExprKind::Div: return num_div(a, xs[1].num);
          case ExprKind::Pow: return num_pow(a, xs[1].num);
          case ExprKind::Floor: return num_floor(a);
          case ExprKind::Ceil: return num_ceil(a);
          case ExprKind::Log2: return num_log2(a);
          case ExprKind::Factorial: return num_factorial(a);
          case ExprKind::Max: return num_cmp(a, xs[1].num) >= 0 ? a : xs[1].num;
          case ExprKind::Min: return num_cmp(a, xs[1].num) <= 0 ? a : xs[1].num;
          default: throw EvalError(EvalErrorKind::CallInGround, "unexpected node");
        }
      },
      logs);
}

std::optional<LogValue> to_public(const std::optional<LV>& v) {
  if (!v || !finite(*v)) return std::nullopt;
  return LogValue{v->sign, v->l};
}

}  // namespace

std::optional<LogValue> log_eval(const Expr& e, const Env& env) { return to_public(lv_eval(e, env)); }

std::optional<LogValue> log_eval(const PiecewiseClosedForm& cf, const Env& env) {
  if (cf.empty()) return std::nullopt;
  return log_eval(cf.as_expr(), env);
}

// ---- classification ---------------------------------------------------------

namespace {

std::optional<Num> safe_eval(const PiecewiseClosedForm& cf, const Env& env) {
  try {
    return cf.eval(env);
  } catch (const EvalError&) {
    return std::nullopt;
  }
}

bool safe_pre(const BoolExpr& pre, const Env& env) {
  try {
    return eval_bool(pre, env);
  } catch (const EvalError&) {
    return false;
  }
}

// Calls fn on every point of [0,b]^m.
template <class F>
void for_grid(size_t m, long b, F&& fn) {
  std::vector<long> x(m, 0);
  for (;;) {
    fn(x);
    size_t i = 0;
    while (i < m && x[i] == b) x[i++] = 0;
    if (i == m) return;
    ++x[i];
  }
}

long grid_bound(size_t m, const ClassifyConfig& cfg) {
  long b = cfg.grid_bound;
  while (b > 1 && std::pow(double(b + 1), double(m)) > double(cfg.grid_cap)) --b;
  return b;
}

Env env_of(const std::vector<std::string>& params, const std::vector<long>& x) {
  Env env;
  for (size_t i = 0; i < params.size(); ++i) env[params[i]] = x[i];
  return env;
}

enum class RayMode { Ratio, LogRatio };

// Every ray whose tail meets the precondition must keep the ratio in band.
bool ray_test(const Expr& cand, const Expr& expect, const FuncDef& f, const ClassifyConfig& cfg, RayMode mode) {
  const size_t m = f.arity();
  std::vector<std::vector<long>> bases{std::vector<long>(m, 0)};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<long> coord(0, cfg.grid_bound);
  for (int tries = 0; int(bases.size()) < cfg.ray_bases + 1 && tries < 1000; ++tries) {
    std::vector<long> b(m);
    for (auto& c : b) c = coord(rng);
    if (safe_pre(f.pre, env_of(f.params, b))) bases.push_back(b);
  }
  std::vector<std::pair<std::vector<long>, std::vector<long>>> rays;  // base, direction
  for (const auto& b : bases)
    for (size_t i = 0; i < m; ++i) {
      std::vector<long> d(m, 0);
      d[i] = 1;
      rays.push_back({b, d});
    }
  rays.push_back({std::vector<long>(m, 0), std::vector<long>(m, 1)});

  const double band = std::log2(cfg.band);
  const int tail_from = (cfg.ray_lo + cfg.ray_hi) / 2;
  size_t tested = 0;
  for (const auto& [b, d] : rays) {
    size_t valid = 0;
    for (int k = tail_from; k <= cfg.ray_hi; ++k) {
      long t = 1L << k;
      std::vector<long> x(m);
      for (size_t i = 0; i < m; ++i) x[i] = b[i] + t * d[i];
      Env env = env_of(f.params, x);
      if (!safe_pre(f.pre, env)) continue;
      auto c = log_eval(cand, env);
      auto e = log_eval(expect, env);
      if (!c || !e) return false;
      if (mode == RayMode::Ratio && c->sign == 0 && e->sign == 0) {
        ++valid;
        continue;
      }
      if (c->sign == 0 || e->sign == 0) return false;
      if (mode == RayMode::Ratio) {
        if (c->sign != e->sign || std::fabs(c->log2 - e->log2) > band) return false;
      } else {
        if (c->sign < 0 || e->sign < 0 || c->log2 == 0.0 || e->log2 == 0.0) return false;
        double r = c->log2 / e->log2;
        if (!(r > 0) || std::fabs(std::log2(r)) > band) return false;
      }
      ++valid;
    }
    if (valid > 0) ++tested;
  }
  return tested > 0;
}

}  // namespace

Classification classify(const PiecewiseClosedForm& cand, const std::optional<PiecewiseClosedForm>& expect,
                        const VerificationResult* verification, const FuncDef& f, const ClassifyConfig& cfg) {
  if (cand.empty()) return Classification::None;
  if (verification && verification->verdict == Verdict::Proved) return Classification::Exact;
  bool refuted = verification && verification->verdict == Verdict::Disproved && verification->confirmed;

  const size_t m = f.arity();
  const long b = grid_bound(m, cfg);
  bool cand_finite = true;
  bool varies = false;
  std::optional<Num> first;
  bool equal = true;
  size_t compared = 0;
  for_grid(m, b, [&](const std::vector<long>& x) {
    Env env = env_of(f.params, x);
    if (!safe_pre(f.pre, env)) return;
    auto c = safe_eval(cand, env);
    if (!c) {
      cand_finite = false;
    } else if (!first) {
      first = c;
    } else if (!num_eq(*first, *c)) {
      varies = true;
    }
    if (expect && equal) {
      auto e = safe_eval(*expect, env);
      if (!e) return;
      ++compared;
      if (!c || !num_eq(*c, *e)) equal = false;
    }
  });

  if (expect) {
    if (equal && compared > 0 && !refuted) return Classification::Exact;
    Expr ce = cand.as_expr();
    Expr ee = expect->as_expr();
    if (ray_test(ce, ee, f, cfg, RayMode::Ratio)) return Classification::Theta;
    if (ray_test(ce, ee, f, cfg, RayMode::LogRatio)) return Classification::ExpTheta;
  }
  if (cand_finite && first && varies) return Classification::NonTrivial;
  return Classification::None;
}

// ---- runs ---------------------------------------------------------------------

namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Outcome errors of a guess; anything else is internal.
bool expected_failure(const std::exception& e) {
  return dynamic_cast<const SampleError*>(&e) || dynamic_cast<const LinearError*>(&e) ||
         dynamic_cast<const EvalError*>(&e) || dynamic_cast<const ModelError*>(&e);
}

struct Attempt {
  PiecewiseClosedForm cf;
  Method method;
};

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkFile& file, const RunConfig& cfg) {
  BenchmarkResult res;
  res.name = file.name;
  res.category = file.category;
  res.reconstructed = file.reconstructed();
  res.domsplit = cfg.domsplit;
  res.seed = cfg.seed;
  res.expect = file.expect;
  res.method = method_name(cfg.method);

  const FuncDef* entry = nullptr;
  try {
    entry = &file.system.entry_function();
  } catch (const std::exception& e) {
    res.errors.push_back(std::string("model: ") + e.what());
    res.internal_error = true;
    return res;
  }

  std::optional<Attempt> best;
  auto run_method = [&](Method m) {
    for (int r = 0; r < std::max(1, cfg.repeat); ++r) {
      SampleConfig sc = cfg.sample;
      sc.seed = cfg.seed + uint64_t(r) * 1000003ULL;
      try {
        PiecewiseClosedForm cf;
        if (m == Method::Lasso) {
          LinearGuess g = guess_linear(file.system, entry->name, cfg.lasso, sc, cfg.domsplit);
          res.times.sample += g.sample_seconds;
          res.times.fit += g.fit_seconds;
          cf = g.cf;
        } else {
          SymbolicConfig s = cfg.symreg;
          s.gp.seed = sc.seed;
          SymbolicGuess g = guess_symbolic(file.system, entry->name, s, sc, cfg.domsplit);
          res.times.sample += g.sample_seconds;
          res.times.fit += g.fit_seconds;
          cf = g.cf;
        }
        if (cf.empty()) continue;
        if (!best || cf.score > best->cf.score) best = Attempt{cf, m};
      } catch (const std::exception& e) {
        res.errors.push_back(std::string("guess: ") + e.what());
        if (!expected_failure(e)) res.internal_error = true;
      }
    }
  };

  if (cfg.method == Method::Symreg) {
    run_method(Method::Symreg);
  } else {
    run_method(Method::Lasso);
    if (cfg.method == Method::Auto && (!best || best->cf.score < cfg.auto_threshold)) run_method(Method::Symreg);
  }

  if (!best) {
    res.errors.push_back("guess: no candidate");
    return res;
  }
  res.candidate = best->cf;
  res.score = best->cf.score;
  res.method = method_name(best->method);

  if (cfg.verify) {
    auto t0 = std::chrono::steady_clock::now();
    try {
      res.verification = verify(file.system, *res.candidate, cfg.solver);
    } catch (const std::exception& e) {
      res.errors.push_back(std::string("verify: ") + e.what());
      res.internal_error = true;
    }
    res.times.verify = since(t0);
  }
  res.classification = classify(*res.candidate, res.expect, res.verification ? &*res.verification : nullptr, *entry,
                                cfg.classify);
  return res;
}

BenchmarkResult run_benchmark_file(const std::string& path, const RunConfig& cfg) {
  BenchmarkFile file;
  try {
    file = load_benchmark(path);
  } catch (const std::exception& e) {
    BenchmarkResult res;
    res.name = std::filesystem::path(path).stem().string();
    res.seed = cfg.seed;
    res.domsplit = cfg.domsplit;
    res.method = method_name(cfg.method);
    res.errors.push_back(std::string("parse: ") + e.what());
    res.internal_error = true;
    return res;
  }
  return run_benchmark(file, cfg);
}

std::vector<std::string> corpus_files(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".rec") out.push_back(e.path().string());
  std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
    return std::filesystem::path(a).filename() < std::filesystem::path(b).filename();
  });
  return out;
}

std::vector<BenchmarkResult> run_corpus(const std::string& dir, const RunConfig& cfg) {
  const std::vector<std::string> files = corpus_files(dir);
  std::vector<BenchmarkResult> out(files.size());
  size_t workers = cfg.jobs > 0 ? size_t(cfg.jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<size_t>(1, files.size()));
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i; (i = next++) < files.size();) out[i] = run_benchmark_file(files[i], cfg);
  };
  std::vector<std::thread> pool;
  for (size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace recsolve
