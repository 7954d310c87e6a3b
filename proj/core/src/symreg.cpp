#include "recsolve/symreg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include "recsolve/rewriter.hpp"

namespace recsolve {

namespace {

using Clock = std::chrono::steady_clock;

const double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kInf = std::numeric_limits<double>::infinity();
const double kLimit = std::ldexp(1.0, 512);

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double bounded(double v) { return std::fabs(v) <= kLimit ? v : kNaN; }

double apply_unary(GpOp op, double v) {
  switch (op) {
    case GpOp::Floor: return std::floor(v);
    case GpOp::Ceil: return std::ceil(v);
    case GpOp::Square: return bounded(v * v);
    case GpOp::Cube: return bounded(v * v * v);
    case GpOp::Log2: return v > 0 ? std::log2(v) : kNaN;
    case GpOp::Exp2: return bounded(std::exp2(v));
    case GpOp::Fact: {
      if (!(v >= 0) || v != std::floor(v) || v > 170) return kNaN;
      double r = 1.0;
      for (int k = 2; k <= static_cast<int>(v); ++k) r *= k;
      return bounded(r);
    }
    default: return kNaN;
  }
}

double apply_binary(GpOp op, double a, double b) {
  switch (op) {
    case GpOp::Add: return bounded(a + b);
    case GpOp::Sub: return bounded(a - b);
    case GpOp::Mul: return bounded(a * b);
    case GpOp::Max: return std::max(a, b);
    case GpOp::Div: return b == 0 ? kNaN : bounded(a / b);
    case GpOp::Pow:
      if (a < 0 && b != std::floor(b)) return kNaN;
      if (a == 0 && b < 0) return kNaN;
      return bounded(std::pow(a, b));
    default: return kNaN;
  }
}

size_t eval_rec(const GpTree& t, size_t i, const GpData& d, std::vector<double>& out) {
  const GpNode& nd = t[i];
  if (nd.op == GpOp::Const) {
    out.assign(d.rows(), nd.value);
    return i + 1;
  }
  if (nd.op == GpOp::Var) {
    out = d.cols[nd.var];
    return i + 1;
  }
  if (gp_arity(nd.op) == 1) {
    size_t j = eval_rec(t, i + 1, d, out);
    for (auto& v : out) v = apply_unary(nd.op, v);
    return j;
  }
  std::vector<double> rhs;
  size_t j = eval_rec(t, i + 1, d, out);
  size_t k = eval_rec(t, j, d, rhs);
  for (size_t r = 0; r < out.size(); ++r) out[r] = apply_binary(nd.op, out[r], rhs[r]);
  return k;
}

size_t to_expr_rec(const GpTree& t, size_t i, const std::vector<std::string>& params,
                   const std::function<mpq_class(double)>& lit, Expr& out) {
  const GpNode& nd = t[i];
  switch (nd.op) {
    case GpOp::Const: out = Expr::constant(lit(nd.value)); return i + 1;
    case GpOp::Var: out = Expr::var(params[nd.var]); return i + 1;
    default: break;
  }
  Expr a;
  size_t j = to_expr_rec(t, i + 1, params, lit, a);
  if (gp_arity(nd.op) == 1) {
    switch (nd.op) {
      case GpOp::Floor: out = floor(a); break;
      case GpOp::Ceil: out = ceil(a); break;
      case GpOp::Square: out = pow(a, Expr::constant(2L)); break;
      case GpOp::Cube: out = pow(a, Expr::constant(3L)); break;
      case GpOp::Log2: out = log2(a); break;
      case GpOp::Exp2: out = pow(Expr::constant(2L), a); break;
      default: out = factorial(a); break;
    }
    return j;
  }
  Expr b;
  size_t k = to_expr_rec(t, j, params, lit, b);
  switch (nd.op) {
    case GpOp::Add: out = a + b; break;
    case GpOp::Sub: out = a - b; break;
    case GpOp::Mul: out = a * b; break;
    case GpOp::Div: out = a / b; break;
    case GpOp::Max: out = max(a, b); break;
    default: out = pow(a, b); break;
  }
  return k;
}

Expr to_expr_with(const GpTree& t, const std::vector<std::string>& params, const std::function<mpq_class(double)>& lit) {
  Expr e;
  to_expr_rec(t, 0, params, lit, e);
  return e;
}

std::mt19937_64 island_rng(uint64_t seed, uint64_t island) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(island),
                    0x9e37u};
  return std::mt19937_64(seq);
}

struct Individual {
  GpTree tree;
  double loss = kInf;
  int complexity = 0;
};

bool better(const Individual& a, const Individual& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  return a.complexity < b.complexity;
}

GpNode random_leaf(size_t nvars, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  GpNode n;
  if (nvars > 0 && u(rng) < 0.65) {
    n.op = GpOp::Var;
    n.var = static_cast<int>(std::uniform_int_distribution<size_t>(0, nvars - 1)(rng));
    return n;
  }
  n.op = GpOp::Const;
  if (u(rng) < 0.5)
    n.value = static_cast<double>(std::uniform_int_distribution<int>(1, 3)(rng));
  else
    n.value = std::uniform_real_distribution<double>(-3, 3)(rng);
  return n;
}

void grow(GpTree& t, const OperatorSet& ops, size_t nvars, std::mt19937_64& rng, int depth, int max_depth) {
  std::uniform_real_distribution<double> u(0, 1);
  bool no_ops = ops.binary.empty() && ops.unary.empty();
  if (no_ops || depth >= max_depth || (depth > 0 && u(rng) < 0.3)) {
    t.push_back(random_leaf(nvars, rng));
    return;
  }
  bool bin = ops.unary.empty() || (!ops.binary.empty() && u(rng) < 0.65);
  const auto& pool = bin ? ops.binary : ops.unary;
  GpNode n;
  n.op = pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng)];
  t.push_back(n);
  for (int c = 0; c < gp_arity(n.op); ++c) grow(t, ops, nvars, rng, depth + 1, max_depth);
}

class Island {
 public:
  Island(const GpData& d, const OperatorSet& ops, const GPConfig& cfg, size_t nvars, uint64_t index)
      : d_(d), ops_(ops), cfg_(cfg), nvars_(nvars), rng_(island_rng(cfg.seed, index)) {}

  void init() {
    pop_.clear();
    for (size_t v = 0; v < nvars_ && pop_.size() < size_t(cfg_.population_size); ++v)
      add(GpTree{GpNode{GpOp::Var, int(v), 0.0}});
    int k = 0;
    while (pop_.size() < size_t(cfg_.population_size)) {
      GpTree t = random_tree(ops_, nvars_, rng_, 1 + (k++ % 4));
      if (complexity(t, ops_) <= cfg_.max_complexity) add(std::move(t));
    }
    record();
  }

  void step() {
    std::sort(pop_.begin(), pop_.end(), better);
    std::vector<Individual> next(pop_.begin(), pop_.begin() + std::min<size_t>(2, pop_.size()));
    while (next.size() < size_t(cfg_.population_size)) next.push_back(evaluate(make_child()));
    pop_ = std::move(next);
    std::sort(pop_.begin(), pop_.end(), better);
    for (int i = 0; i < cfg_.optimize_top && i < int(pop_.size()); ++i) {
      GpTree t = optimize_constants(pop_[i].tree, d_, cfg_.max_const_evals);
      Individual c = evaluate(std::move(t));
      if (c.loss < pop_[i].loss) pop_[i] = std::move(c);
    }
    record();
  }

  const Individual& best() const { return *std::min_element(pop_.begin(), pop_.end(), better); }

  void immigrate(const Individual& in) {
    auto worst = std::max_element(pop_.begin(), pop_.end(), better);
    *worst = in;
  }

  const std::map<int, Individual>& hall() const { return hall_; }

 private:
  Individual evaluate(GpTree t) {
    Individual ind;
    ind.complexity = complexity(t, ops_);
    ind.loss = gp_loss(t, d_);
    ind.tree = std::move(t);
    return ind;
  }

  void add(GpTree t) { pop_.push_back(evaluate(std::move(t))); }

  void record() {
    for (const auto& ind : pop_) {
      if (!std::isfinite(ind.loss)) continue;
      auto it = hall_.find(ind.complexity);
      if (it == hall_.end() || ind.loss < it->second.loss) hall_[ind.complexity] = ind;
    }
  }

  const Individual& tournament() {
    std::uniform_int_distribution<size_t> pick(0, pop_.size() - 1);
    const Individual* b = &pop_[pick(rng_)];
    for (int i = 1; i < cfg_.tournament; ++i) {
      const Individual* c = &pop_[pick(rng_)];
      if (better(*c, *b)) b = c;
    }
    return *b;
  }

  size_t random_node(const GpTree& t) { return std::uniform_int_distribution<size_t>(0, t.size() - 1)(rng_); }

  GpTree crossover(const GpTree& a, const GpTree& b) {
    size_t i = random_node(a), j = random_node(b);
    GpTree c(a.begin(), a.begin() + i);
    c.insert(c.end(), b.begin() + j, b.begin() + subtree_end(b, j));
    c.insert(c.end(), a.begin() + subtree_end(a, i), a.end());
    return c;
  }

  GpTree point_mutation(const GpTree& a) {
    GpTree c = a;
    size_t i = random_node(c);
    int ar = gp_arity(c[i].op);
    if (ar == 0) {
      c[i] = random_leaf(nvars_, rng_);
    } else {
      const auto& pool = ar == 1 ? ops_.unary : ops_.binary;
      if (!pool.empty()) c[i].op = pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng_)];
    }
    return c;
  }

  GpTree subtree_mutation(const GpTree& a) {
    size_t i = random_node(a);
    GpTree sub = random_tree(ops_, nvars_, rng_, std::uniform_int_distribution<int>(0, 3)(rng_));
    GpTree c(a.begin(), a.begin() + i);
    c.insert(c.end(), sub.begin(), sub.end());
    c.insert(c.end(), a.begin() + subtree_end(a, i), a.end());
    return c;
  }

  GpTree perturb_constant(const GpTree& a) {
    std::vector<size_t> consts;
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i].op == GpOp::Const) consts.push_back(i);
    if (consts.empty()) return subtree_mutation(a);
    GpTree c = a;
    std::normal_distribution<double> nd(0.0, 1.0);
    size_t i = consts[std::uniform_int_distribution<size_t>(0, consts.size() - 1)(rng_)];
    c[i].value = c[i].value * (1.0 + 0.3 * nd(rng_)) + 0.1 * nd(rng_);
    return c;
  }

  GpTree make_child() {
    std::uniform_real_distribution<double> u(0, 1);
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Individual& p = tournament();
      double r = u(rng_);
      GpTree c;
      if (r < cfg_.p_crossover)
        c = crossover(p.tree, tournament().tree);
      else if (r < cfg_.p_crossover + cfg_.p_mutation)
        c = u(rng_) < 0.5 ? point_mutation(p.tree) : subtree_mutation(p.tree);
      else
        c = perturb_constant(p.tree);
      if (complexity(c, ops_) <= cfg_.max_complexity) return c;
    }
    return tournament().tree;
  }

  const GpData& d_;
  const OperatorSet& ops_;
  const GPConfig& cfg_;
  size_t nvars_;
  std::mt19937_64 rng_;
  std::vector<Individual> pop_;
  std::map<int, Individual> hall_;
};

}  // namespace

int gp_arity(GpOp op) {
  switch (op) {
    case GpOp::Const:
    case GpOp::Var: return 0;
    case GpOp::Add:
    case GpOp::Sub:
    case GpOp::Max:
    case GpOp::Mul:
    case GpOp::Div:
    case GpOp::Pow: return 2;
    default: return 1;
  }
}

const char* gp_name(GpOp op) {
  switch (op) {
    case GpOp::Const: return "const";
    case GpOp::Var: return "var";
    case GpOp::Add: return "+";
    case GpOp::Sub: return "-";
    case GpOp::Max: return "max";
    case GpOp::Mul: return "*";
    case GpOp::Div: return "/";
    case GpOp::Pow: return "pow";
    case GpOp::Floor: return "floor";
    case GpOp::Ceil: return "ceil";
    case GpOp::Square: return "square";
    case GpOp::Cube: return "cube";
    case GpOp::Log2: return "log2";
    case GpOp::Exp2: return "exp2";
    case GpOp::Fact: return "fact";
  }
  return "?";
}

int OperatorSet::cost(GpOp op) const {
  switch (op) {
    case GpOp::Floor:
    case GpOp::Ceil: return 2;
    case GpOp::Pow: return 3;
    default: return 1;
  }
}

bool OperatorSet::allows(GpOp op) const {
  if (gp_arity(op) == 0) return true;
  const auto& pool = gp_arity(op) == 1 ? unary : binary;
  return std::find(pool.begin(), pool.end(), op) != pool.end();
}

OperatorSet OperatorSet::full() {
  OperatorSet s;
  s.binary = {GpOp::Add, GpOp::Sub, GpOp::Max, GpOp::Mul, GpOp::Div, GpOp::Pow};
  s.unary = {GpOp::Floor, GpOp::Ceil, GpOp::Square, GpOp::Cube, GpOp::Log2, GpOp::Exp2, GpOp::Fact};
  return s;
}

OperatorSet OperatorSet::exp_sum() {
  OperatorSet s;
  s.binary = {GpOp::Add, GpOp::Mul};
  s.unary = {GpOp::Exp2};
  return s;
}

int complexity(const GpTree& t, const OperatorSet& ops) {
  int c = 0;
  for (const auto& n : t) c += ops.cost(n.op);
  return c;
}

size_t subtree_end(const GpTree& t, size_t i) {
  int need = 1;
  while (need > 0) {
    need += gp_arity(t[i].op) - 1;
    ++i;
  }
  return i;
}

GpData make_gp_data(const std::vector<Point>& inputs, const std::vector<double>& y, size_t nvars) {
  GpData d;
  d.cols.assign(nvars, std::vector<double>(inputs.size()));
  for (size_t r = 0; r < inputs.size(); ++r)
    for (size_t v = 0; v < nvars; ++v) d.cols[v][r] = inputs[r][v].get_d();
  d.y = y;
  return d;
}

std::vector<double> gp_eval(const GpTree& t, const GpData& d) {
  std::vector<double> out;
  eval_rec(t, 0, d, out);
  return out;
}

double gp_loss(const GpTree& t, const GpData& d) {
  if (d.rows() == 0) return kInf;
  std::vector<double> p = gp_eval(t, d);
  double s = 0.0;
  for (size_t r = 0; r < p.size(); ++r) {
    if (std::isnan(p[r])) return kInf;
    double e = p[r] - d.y[r];
    s += e * e;
  }
  s /= static_cast<double>(p.size());
  return std::isfinite(s) ? s : kInf;
}

Expr gp_to_expr(const GpTree& t, const std::vector<std::string>& params) {
  return to_expr_with(t, params, [](double v) { return exact_rational(v); });
}

GpTree random_tree(const OperatorSet& ops, size_t nvars, std::mt19937_64& rng, int max_depth) {
  GpTree t;
  grow(t, ops, nvars, rng, 0, max_depth);
  return t;
}

GpTree optimize_constants(const GpTree& t, const GpData& d, int max_evals) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < t.size(); ++i)
    if (t[i].op == GpOp::Const) idx.push_back(i);
  if (idx.empty() || max_evals <= 0) return t;
  const size_t n = idx.size();
  GpTree work = t;
  int evals = 0;
  auto f = [&](const std::vector<double>& x) {
    for (size_t k = 0; k < n; ++k) work[idx[k]].value = x[k];
    ++evals;
    return gp_loss(work, d);
  };

  std::vector<double> x0(n);
  for (size_t k = 0; k < n; ++k) x0[k] = t[idx[k]].value;
  std::vector<std::vector<double>> s(n + 1, x0);
  std::vector<double> fs(n + 1);
  fs[0] = f(x0);
  const double f0 = fs[0];
  for (size_t k = 0; k < n; ++k) {
    s[k + 1][k] += x0[k] != 0 ? 0.25 * std::fabs(x0[k]) : 0.5;
    fs[k + 1] = f(s[k + 1]);
  }
  std::vector<size_t> order(n + 1);
  // evaluations held back for snapping to nearby rationals
  const int reserve = static_cast<int>(n) + 1;
  while (evals < max_evals - reserve) {
    for (size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return fs[a] < fs[b]; });
    size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (std::isfinite(fs[worst]) && fs[worst] - fs[best] <= 1e-15 * (1 + std::fabs(fs[best]))) break;
    std::vector<double> c(n, 0.0);
    for (size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (size_t k = 0; k < n; ++k) c[k] += s[i][k] / n;
    auto along = [&](double a) {
      std::vector<double> p(n);
      for (size_t k = 0; k < n; ++k) p[k] = c[k] + a * (s[worst][k] - c[k]);
      return p;
    };
    std::vector<double> xr = along(-1.0);
    double fr = f(xr);
    if (fr < fs[best]) {
      std::vector<double> xe = along(-2.0);
      double fe = f(xe);
      if (fe < fr) s[worst] = xe, fs[worst] = fe;
      else s[worst] = xr, fs[worst] = fr;
    } else if (fr < fs[second]) {
      s[worst] = xr;
      fs[worst] = fr;
    } else {
      std::vector<double> xc = fr < fs[worst] ? along(-0.5) : along(0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fs[worst])) {
        s[worst] = xc;
        fs[worst] = fc;
      } else {
        for (size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (size_t k = 0; k < n; ++k) s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
          fs[i] = f(s[i]);
        }
      }
    }
  }
  size_t best = static_cast<size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  std::vector<double> x = s[best];
  double fx = fs[best];
  auto snapped = [](double v) {
    auto r = rationalize_value(v, 1e-6, 64);
    return r ? r->get_d() : v;
  };
  std::vector<double> all = x;
  for (auto& v : all) v = snapped(v);
  if (all != x && evals < max_evals) {
    double fa = f(all);
    if (fa <= fx) x = all, fx = fa;
  }
  for (size_t k = 0; k < n && evals < max_evals; ++k) {
    double v = snapped(x[k]);
    if (v == x[k]) continue;
    std::vector<double> y = x;
    y[k] = v;
    double fy = f(y);
    if (fy <= fx) x = y, fx = fy;
  }
  if (!(fx < f0)) return t;
  GpTree out = t;
  for (size_t k = 0; k < n; ++k) out[idx[k]].value = x[k];
  return out;
}

ParetoFront evolve(const GpData& d, const OperatorSet& ops, const GPConfig& cfg) {
  const size_t nvars = d.cols.size();
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(cfg.time_budget));
  std::vector<Island> islands;
  islands.reserve(cfg.populations);
  for (int i = 0; i < cfg.populations; ++i) islands.emplace_back(d, ops, cfg, nvars, static_cast<uint64_t>(i));

  size_t threads = cfg.threads > 0 ? size_t(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, islands.size());
  auto for_islands = [&](const std::function<void(Island&)>& fn) {
    if (threads <= 1) {
      for (auto& is : islands) fn(is);
      return;
    }
    std::vector<std::thread> pool;
    for (size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (size_t i = w; i < islands.size(); i += threads) fn(islands[i]);
      });
    for (auto& th : pool) th.join();
  };

  ParetoFront front;
  for_islands([](Island& is) { is.init(); });
  for (int it = 0; it < cfg.iterations; ++it) {
    if (Clock::now() > deadline) {
      front.budget_exhausted = true;
      break;
    }
    for_islands([](Island& is) { is.step(); });
    front.iterations_run = it + 1;
    if (cfg.migration_interval > 0 && (it + 1) % cfg.migration_interval == 0 && islands.size() > 1) {
      std::vector<Individual> emigrants;
      for (const auto& is : islands) emigrants.push_back(is.best());
      for (size_t i = 0; i < islands.size(); ++i) islands[(i + 1) % islands.size()].immigrate(emigrants[i]);
    }
  }

  std::map<int, Individual> hall;
  for (const auto& is : islands)
    for (const auto& [c, ind] : is.hall()) {
      auto h = hall.find(c);
      if (h == hall.end() || ind.loss < h->second.loss) hall[c] = ind;
    }
  double best = kInf;
  for (const auto& [c, ind] : hall) {
    if (ind.loss < best) {
      front.entries.push_back(FrontEntry{ind.tree, ind.loss, c});
      best = ind.loss;
    }
  }
  return front;
}

SymbolicGuess guess_symbolic(const RecurrenceSystem& sys, const std::string& func, const SymbolicConfig& cfg,
                             const SampleConfig& scfg, bool domsplit) {
  const FuncDef* f = sys.find(func);
  if (!f) throw ModelError("unknown function " + func);
  const std::vector<Subdomain> doms = regression_domains(*f, domsplit);

  SymbolicGuess out;
  bool failed = false;
  double worst = 1.0;
  for (size_t i = 0; i < doms.size(); ++i) {
    SymbolicPieceReport rep;
    rep.domain = doms[i].constraint;
    rep.case_index = doms[i].case_index;
    auto t0 = Clock::now();
    Dataset ds;
    try {
      ds = build_dataset(sys, func, doms[i].constraint, scfg, 2, i);
    } catch (const SampleError& e) {
      out.sample_seconds += seconds_since(t0);
      rep.error = std::string("EmptyDomain: ") + e.what();
      if (!domsplit) failed = true;
      out.pieces.push_back(rep);
      continue;
    }
    out.sample_seconds += seconds_since(t0);
    rep.bound = ds.bound;
    rep.train_rows = ds.train.size();
    rep.test_rows = ds.test.size();
    if (ds.train.empty()) {
      rep.error = "EmptyTrainingSet: every sampled evaluation failed";
      failed = true;
      out.pieces.push_back(rep);
      continue;
    }
    auto t1 = Clock::now();
    const std::vector<Point>& score_pts = ds.test.empty() ? ds.train : ds.test;
    const std::vector<double>& score_y = ds.test.empty() ? ds.train_y : ds.test_y;
    const BoolExpr domain = simplify(ds.domain);

    std::vector<FrontEntry> candidates;
    if (ds.train.size() < 5) {
      // too few rows for a search; fit the mean
      double mean = 0.0;
      for (double y : ds.train_y) mean += y;
      mean /= ds.train_y.size();
      candidates.push_back(FrontEntry{GpTree{GpNode{GpOp::Const, 0, mean}}, 0.0, 1});
    } else {
      GPConfig g = cfg.gp;
      g.seed = cfg.gp.seed + 1000003ull * i;
      ParetoFront front = evolve(make_gp_data(ds.train, ds.train_y, ds.params.size()), cfg.ops, g);
      rep.front_size = front.entries.size();
      rep.iterations_run = front.iterations_run;
      rep.budget_exhausted = front.budget_exhausted;
      candidates = front.entries;
      out.fronts.push_back(std::move(front));
    }

    std::optional<Piece> best;
    int best_cx = 0;
    for (const auto& c : candidates) {
      bool exact = true;
      Expr rational = to_expr_with(c.tree, ds.params, [&](double v) {
        if (auto r = rationalize_value(v, cfg.rational_tol)) return *r;
        exact = false;
        return exact_rational(v);
      });
      Expr raw = gp_to_expr(c.tree, ds.params);
      double sr = score_expr(rational, ds.params, score_pts, score_y);
      double sw = score_expr(raw, ds.params, score_pts, score_y);
      Piece p;
      p.domain = domain;
      if (sr + 1e-12 >= sw) {
        p.body = rational;
        p.score = sr;
        p.exact = exact;
      } else {
        p.body = raw;
        p.score = sw;
        p.exact = false;
      }
      bool take = !best || p.score > best->score + 1e-12 ||
                  (std::fabs(p.score - best->score) <= 1e-12 && c.complexity < best_cx);
      if (take) {
        best = p;
        best_cx = c.complexity;
      }
    }
    out.fit_seconds += seconds_since(t1);
    if (best) {
      rep.complexity = best_cx;
      worst = std::min(worst, best->score);
      out.cf.pieces.push_back(*best);
    } else {
      rep.error = "empty front";
      failed = true;
    }
    out.pieces.push_back(rep);
  }
  out.cf.score = out.cf.pieces.empty() ? 0.0 : worst;
  if (failed) out.cf.score = std::min(out.cf.score, 0.0);
  return out;
}

}  // namespace recsolve
