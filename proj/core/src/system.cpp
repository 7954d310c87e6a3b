#include "recsolve/system.hpp"

#include <set>

namespace recsolve {

const FuncDef* RecurrenceSystem::find(const std::string& name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

const FuncDef& RecurrenceSystem::entry_function() const {
  const FuncDef* f = find(entry);
  if (!f) throw ModelError("entry function '" + entry + "' is not defined");
  return *f;
}

Num PiecewiseClosedForm::eval(const Env& env, const EvalOptions& opt) const {
  if (pieces.empty()) throw ModelError("empty closed form");
  for (size_t i = 0; i + 1 < pieces.size(); ++i)
    if (eval_bool(pieces[i].domain, env, opt)) return eval_ground(pieces[i].body, env, opt);
  return eval_ground(pieces.back().body, env, opt);
}

Expr PiecewiseClosedForm::as_expr() const {
  if (pieces.empty()) throw ModelError("empty closed form");
  Expr acc = pieces.back().body;
  for (size_t i = pieces.size() - 1; i-- > 0;) acc = Expr::ite(pieces[i].domain, pieces[i].body, acc);
  return acc;
}

bool PiecewiseClosedForm::exact() const {
  for (const auto& p : pieces)
    if (!p.exact) return false;
  return !pieces.empty();
}

namespace {

void check_calls(const RecurrenceSystem& sys, const Expr& e, const std::string& where) {
  if (e.kind() == ExprKind::Call) {
    const FuncDef* g = sys.find(e.name());
    if (!g) throw ModelError("unknown function '" + e.name() + "' in " + where);
    if (g->arity() != e.args().size())
      throw ModelError("arity mismatch calling '" + e.name() + "' in " + where + ": expected " +
                       std::to_string(g->arity()) + ", got " + std::to_string(e.args().size()));
  }
  for (const auto& a : e.args()) check_calls(sys, a, where);
  if (e.kind() == ExprKind::Ite && contains_call(e.cond()))
    throw ModelError("call inside a condition in " + where);
}

}  // namespace

void validate(const RecurrenceSystem& sys) {
  std::set<std::string> names;
  for (const auto& f : sys.functions) {
    if (!names.insert(f.name).second) throw ModelError("function '" + f.name + "' defined twice");
    if (f.params.empty()) throw ModelError("function '" + f.name + "' has no parameters");
    std::set<std::string> ps(f.params.begin(), f.params.end());
    if (ps.size() != f.params.size()) throw ModelError("duplicate parameter in '" + f.name + "'");
    if (f.cases.empty()) throw ModelError("function '" + f.name + "' has no cases");
    if (contains_call(f.pre)) throw ModelError("precondition of '" + f.name + "' contains a call");
    bool base = false;
    for (const auto& c : f.cases) {
      if (contains_call(c.guard)) throw ModelError("guard of '" + f.name + "' contains a call");
      check_calls(sys, c.body, "'" + f.name + "'");
      if (!contains_call(c.body)) base = true;
      for (const auto& v : free_vars(c.body))
        if (!ps.count(v)) throw ModelError("unbound variable '" + v + "' in '" + f.name + "'");
      for (const auto& v : free_vars(c.guard))
        if (!ps.count(v)) throw ModelError("unbound variable '" + v + "' in '" + f.name + "'");
    }
    for (const auto& v : free_vars(f.pre))
      if (!ps.count(v)) throw ModelError("unbound variable '" + v + "' in '" + f.name + "'");
    if (!base) throw ModelError("function '" + f.name + "' has no base case");
  }
  if (!sys.find(sys.entry)) throw ModelError("entry function '" + sys.entry + "' is not defined");
}

Env make_env(const std::vector<std::string>& params, const std::vector<mpz_class>& point) {
  Env env;
  for (size_t i = 0; i < params.size() && i < point.size(); ++i) env[params[i]] = point[i];
  return env;
}

std::optional<Env> find_uncovered_point(const FuncDef& f, int bound, size_t max_points) {
  const size_t m = f.arity();
  // Walk the grid [0,bound]^m in odometer order, capped at max_points.
  std::vector<mpz_class> pt(m, 0);
  for (size_t visited = 0; visited < max_points; ++visited) {
    Env env = make_env(f.params, pt);
    bool in_pre = false;
    try {
      in_pre = eval_bool(f.pre, env);
    } catch (const EvalError&) {
    }
    if (in_pre) {
      bool covered = false;
      for (const auto& c : f.cases) {
        try {
          if (eval_bool(c.guard, env)) { covered = true; break; }
        } catch (const EvalError&) {
        }
      }
      if (!covered) return env;
    }
    size_t i = 0;
    while (i < m) {
      pt[i] += 1;
      if (pt[i] <= bound) break;
      pt[i] = 0;
      ++i;
    }
    if (i == m) break;
  }
  return std::nullopt;
}

void check_totality(const RecurrenceSystem& sys) {
  for (const auto& f : sys.functions) {
    int bound = f.arity() <= 2 ? 20 : (f.arity() == 3 ? 10 : 5);
    if (auto env = find_uncovered_point(f, bound, 20000)) {
      std::string pt;
      for (const auto& [k, v] : *env) pt += (pt.empty() ? "" : ", ") + k + "=" + v.get_str();
      throw ModelError("function '" + f.name + "' is not total: no guard holds at " + pt);
    }
  }
}

bool structurally_equal(const RecurrenceSystem& a, const RecurrenceSystem& b) {
  if (a.entry != b.entry || a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const auto& f = a.functions[i];
    const auto& g = b.functions[i];
    if (f.name != g.name || f.params != g.params || f.pre != g.pre || f.cases.size() != g.cases.size())
      return false;
    for (size_t j = 0; j < f.cases.size(); ++j)
      if (f.cases[j].guard != g.cases[j].guard || f.cases[j].body != g.cases[j].body) return false;
  }
  return true;
}

bool structurally_equal(const PiecewiseClosedForm& a, const PiecewiseClosedForm& b) {
  if (a.pieces.size() != b.pieces.size()) return false;
  for (size_t i = 0; i < a.pieces.size(); ++i)
    if (a.pieces[i].domain != b.pieces[i].domain || a.pieces[i].body != b.pieces[i].body) return false;
  return true;
}

}  // namespace recsolve
