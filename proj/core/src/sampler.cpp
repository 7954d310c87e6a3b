#include "recsolve/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <map>
#include <random>

#include "recsolve/rewriter.hpp"

namespace recsolve {

namespace {

std::mt19937_64 make_rng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(stream),
                    static_cast<uint32_t>(stream >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

bool holds(const BoolExpr& c, const std::vector<std::string>& params, const Point& p) {
  try {
    return eval_bool(c, make_env(params, p));
  } catch (const EvalError&) {
    return false;
  }
}

}  // namespace

SampleSet sample_inputs(const BoolExpr& pre, const std::vector<std::string>& params, int bound,
                        const SampleConfig& cfg, uint64_t stream, const std::set<Point>* exclude, size_t count) {
  const size_t want = count ? count : cfg.n;
  const size_t m = params.size();
  auto rng = make_rng(cfg.seed, stream);
  SampleSet out;

  double box = 1.0;
  for (size_t i = 0; i < m; ++i) box *= bound + 1;
  if (box <= 50000) {
    // Small box: enumerate the satisfying points and draw without replacement,
    // which has the same law as rejection sampling with deduplication.
    std::vector<Point> all;
    Point p(m, 0);
    while (true) {
      if (holds(pre, params, p) && !(exclude && exclude->count(p))) all.push_back(p);
      size_t i = 0;
      while (i < m) {
        p[i] += 1;
        if (p[i] <= bound) break;
        p[i] = 0;
        ++i;
      }
      if (i == m) break;
    }
    if (all.empty()) throw SampleError(SampleErrorKind::EmptyDomain, "no input satisfies the domain constraint");
    for (size_t i = 0; i < all.size() && i < want; ++i) {
      std::uniform_int_distribution<size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    if (all.size() <= want) {
      out.shortfall = all.size() < want;
      out.points = std::move(all);
    } else {
      out.points.assign(all.begin(), all.begin() + want);
    }
    return out;
  }

  std::uniform_int_distribution<long> coord(0, bound);
  std::set<Point> seen;
  size_t misses = 0;
  while (out.points.size() < want && misses < cfg.rejection_cap) {
    Point p(m);
    for (auto& x : p) x = coord(rng);
    if (seen.count(p) || (exclude && exclude->count(p)) || !holds(pre, params, p)) {
      ++misses;
      continue;
    }
    misses = 0;
    seen.insert(p);
    out.points.push_back(std::move(p));
  }
  if (out.points.empty()) throw SampleError(SampleErrorKind::EmptyDomain, "no input satisfies the domain constraint");
  out.shortfall = out.points.size() < want;
  return out;
}

SampleSet sample_inputs(const BoolExpr& pre, const std::vector<std::string>& params, const SampleConfig& cfg) {
  int bound = cfg.fixed_bound > 0 ? cfg.fixed_bound : cfg.bounds.front();
  return sample_inputs(pre, params, bound, cfg);
}

BoolExpr positive_domain(const FuncDef& f) {
  std::vector<BoolExpr> cs{f.pre};
  for (const auto& p : f.params) cs.push_back(BoolExpr::cmp(CmpOp::Gt, Expr::var(p), Expr::constant(0L)));
  return BoolExpr::conj(cs);
}

BoundChoice choose_bound(const RecurrenceSystem& sys, const std::string& func, const SampleConfig& cfg) {
  const FuncDef* f = sys.find(func);
  if (!f) throw ModelError("unknown function " + func);
  return choose_bound(sys, func, positive_domain(*f), cfg);
}

BoundChoice choose_bound(const RecurrenceSystem& sys, const std::string& func, const BoolExpr& domain,
                         const SampleConfig& cfg, Evaluator* ev) {
  const FuncDef* f = sys.find(func);
  if (!f) throw ModelError("unknown function " + func);
  EvalBudget budget;
  budget.wall_seconds = cfg.time_limit;
  Evaluator local(sys, budget);
  Evaluator& e = ev ? *ev : local;
  BoundChoice choice;
  for (size_t i = 0; i < cfg.bounds.size(); ++i) {
    int b = cfg.bounds[i];
    bool last = i + 1 == cfg.bounds.size();
    auto t0 = std::chrono::steady_clock::now();
    SampleSet s;
    try {
      s = sample_inputs(domain, f->params, b, cfg);
    } catch (const SampleError&) {
      if (last) return BoundChoice{b, true, true};
      continue;
    }
    auto res = e.batch_eval(func, s.points);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    size_t ok = 0;
    bool clock_hit = false;
    for (const auto& r : res) {
      if (r.ok()) ++ok;
      else if (r.message.find("wall-clock") != std::string::npos) clock_hit = true;
    }
    bool good = secs <= cfg.time_limit && !clock_hit && ok > 0;
    if (good) return BoundChoice{b, false, false};
    if (last) {
      choice = BoundChoice{b, true, ok == 0};
      return choice;
    }
  }
  return choice;
}

std::vector<Subdomain> split_domains(const FuncDef& f) {
  std::vector<Subdomain> out;
  std::vector<BoolExpr> prior;
  for (size_t i = 0; i < f.cases.size(); ++i) {
    std::vector<BoolExpr> cs{f.cases[i].guard};
    for (const auto& p : prior) cs.push_back(BoolExpr::negate(p));
    BoolExpr c = BoolExpr::conj(cs);
    out.push_back(Subdomain{simplify(c), i});
    prior.push_back(f.cases[i].guard);
  }
  return out;
}

std::vector<Subdomain> regression_domains(const FuncDef& f, bool domsplit) {
  if (!domsplit) return {Subdomain{simplify(positive_domain(f)), 0}};
  std::vector<Subdomain> out;
  for (auto s : split_domains(f)) {
    s.constraint = simplify(BoolExpr::conj({f.pre, s.constraint}));
    out.push_back(s);
  }
  return out;
}

Splits make_splits(const std::vector<Point>& samples, const SampleConfig& cfg, int folds,
                   const std::vector<Point>& fresh_test) {
  if (folds < 2) folds = 2;
  if (samples.size() < static_cast<size_t>(folds) + 1)
    throw SampleError(SampleErrorKind::InsufficientSamples,
                      "need at least " + std::to_string(folds + 1) + " samples, got " + std::to_string(samples.size()));
  Splits out;
  std::vector<Point> pts = samples;
  auto rng = make_rng(cfg.seed, 0x51u);
  std::shuffle(pts.begin(), pts.end(), rng);
  if (!fresh_test.empty()) {
    out.test.assign(fresh_test.begin(), fresh_test.begin() + std::min(fresh_test.size(), cfg.test_size));
  } else {
    size_t hold = std::min(cfg.test_size, pts.size() / 4);
    if (pts.size() - hold < static_cast<size_t>(2 * folds)) hold = 0;
    if (hold > 0) {
      out.test.assign(pts.end() - hold, pts.end());
      pts.resize(pts.size() - hold);
      out.test_held_out = true;
    } else {
      out.no_test = true;
    }
  }
  out.train = std::move(pts);
  out.fold_of.resize(out.train.size());
  for (size_t i = 0; i < out.train.size(); ++i) out.fold_of[i] = static_cast<int>(i % folds);
  return out;
}

Dataset build_dataset(const RecurrenceSystem& sys, const std::string& func, const BoolExpr& domain,
                      const SampleConfig& cfg, int folds, uint64_t stream) {
  const FuncDef* f = sys.find(func);
  if (!f) throw ModelError("unknown function " + func);
  Dataset ds;
  ds.params = f->params;
  ds.domain = domain;
  EvalBudget budget;
  budget.wall_seconds = cfg.time_limit;
  Evaluator ev(sys, budget);
  SampleConfig scfg = cfg;
  scfg.seed = cfg.seed + 7919 * stream;
  if (cfg.fixed_bound > 0) {
    ds.choice = BoundChoice{cfg.fixed_bound, false, false};
  } else {
    ds.choice = choose_bound(sys, func, domain, scfg, &ev);
  }
  ds.bound = ds.choice.bound;

  SampleSet train = sample_inputs(domain, f->params, ds.bound, scfg, 0);
  ds.shortfall = train.shortfall;
  std::map<Point, double> value;
  auto res = ev.batch_eval(func, train.points);
  std::vector<Point> ok_train;
  for (const auto& r : res) {
    if (r.floored) ds.floored = true;
    if (!r.ok()) { ++ds.failures; continue; }
    double y = r.value->to_double();
    if (!std::isfinite(y)) { ++ds.failures; continue; }
    value[r.input] = y;
    ok_train.push_back(r.input);
  }

  std::vector<Point> ok_test;
  if (!train.shortfall) {
    std::set<Point> used(train.points.begin(), train.points.end());
    try {
      SampleSet t = sample_inputs(domain, f->params, ds.bound, scfg, 1, &used, cfg.test_size);
      for (const auto& r : ev.batch_eval(func, t.points)) {
        if (!r.ok()) { ++ds.failures; continue; }
        double y = r.value->to_double();
        if (!std::isfinite(y)) { ++ds.failures; continue; }
        value[r.input] = y;
        ok_test.push_back(r.input);
      }
    } catch (const SampleError&) {
    }
  }

  Splits sp;
  try {
    sp = make_splits(ok_train, scfg, folds, ok_test);
  } catch (const SampleError&) {
    sp.train = ok_train;
    sp.fold_of.assign(ok_train.size(), 0);
    sp.no_test = ok_test.empty();
    sp.test = ok_test;
  }
  ds.train = sp.train;
  ds.fold_of = sp.fold_of;
  ds.test = sp.test;
  ds.test_held_out = sp.test_held_out;
  ds.no_test = sp.no_test;
  for (const auto& p : ds.train) ds.train_y.push_back(value.at(p));
  for (const auto& p : ds.test) ds.test_y.push_back(value.at(p));
  return ds;
}

}  // namespace recsolve
