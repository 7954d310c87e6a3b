#include "recsolve/rewriter.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

namespace recsolve {

namespace {

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// Product of atoms with integer powers and of constant-base exponentials.
struct Mono {
  std::vector<std::pair<Expr, int>> atoms;       // sorted, nonzero powers
  std::vector<std::pair<mpq_class, Expr>> exps;  // sorted by base, exponent in normal form

  bool empty() const { return atoms.empty() && exps.empty(); }
};

struct Term {
  Mono mono;
  mpq_class coef;
};

using Poly = std::map<Expr, Term, ExprLess>;

class Simplifier {
 public:
  explicit Simplifier(const SimplifyOptions& opt) : opt_(opt) {}

  Expr run(const Expr& e) { return from_poly(to_poly(e)); }
  BoolExpr run(const BoolExpr& c) { return simp_bool(c); }

 private:
  const SimplifyOptions& opt_;

  // ---- monomials ----
  static Expr mono_expr(const Mono& m) {
    std::vector<Expr> num, den;
    for (const auto& [a, k] : m.atoms) {
      int p = k < 0 ? -k : k;
      Expr f = p == 1 ? a : pow(a, Expr::constant(long(p)));
      (k > 0 ? num : den).push_back(f);
    }
    for (const auto& [b, x] : m.exps) num.push_back(pow(Expr::constant(b), x));
    auto product = [](const std::vector<Expr>& fs) {
      Expr acc = fs[0];
      for (size_t i = 1; i < fs.size(); ++i) acc = acc * fs[i];
      return acc;
    };
    if (num.empty() && den.empty()) return Expr::constant(1L);
    if (den.empty()) return product(num);
    return (num.empty() ? Expr::constant(1L) : product(num)) / product(den);
  }

  static int degree(const Mono& m) {
    int d = 0;
    for (const auto& [a, k] : m.atoms) d += k;
    return d + static_cast<int>(m.exps.size());
  }

  static Poly constant(const mpq_class& q) {
    Poly p;
    if (q != 0) p[Expr::constant(1L)] = Term{Mono{}, q};
    return p;
  }

  static void add_term(Poly& p, const Mono& m, const mpq_class& c) {
    if (c == 0) return;
    Expr key = mono_expr(m);
    auto it = p.find(key);
    if (it == p.end()) {
      p.emplace(key, Term{m, c});
      return;
    }
    it->second.coef += c;
    if (it->second.coef == 0) p.erase(it);
  }

  static Poly atom(const Expr& e) {
    Poly p;
    Mono m;
    m.atoms.push_back({e, 1});
    add_term(p, m, 1);
    return p;
  }

  static bool is_constant(const Poly& p) {
    return p.empty() || (p.size() == 1 && p.begin()->second.mono.empty());
  }
  static mpq_class const_value(const Poly& p) {
    for (const auto& [k, t] : p)
      if (t.mono.empty()) return t.coef;
    return 0;
  }

  static Poly add(const Poly& a, const Poly& b, const mpq_class& sb = 1) {
    Poly r = a;
    for (const auto& [k, t] : b) add_term(r, t.mono, sb * t.coef);
    return r;
  }

  static Poly scale(const Poly& a, const mpq_class& s) {
    Poly r;
    if (s == 0) return r;
    for (const auto& [k, t] : a) r.emplace(k, Term{t.mono, t.coef * s});
    return r;
  }

  // c^P split into a rational factor and a residual exponential.
  std::pair<mpq_class, std::optional<Expr>> make_exp(const mpq_class& base, const Poly& exponent) {
    mpq_class k = const_value(exponent);
    Poly rest = exponent;
    mpq_class factor = 1;
    if (k.get_den() == 1 && abs(k) <= 64) {
      rest = add(exponent, constant(k), -1);
      Num v = num_pow(Num(base), Num(k));
      factor = v.q;
    }
    if (rest.empty()) return {factor, std::nullopt};
    return {factor, from_poly(rest)};
  }

  // Returns coefficient multiplier and product monomial.
  std::pair<mpq_class, Mono> mono_mul(const Mono& a, const Mono& b) {
    Mono r;
    std::map<Expr, int, ExprLess> atoms;
    for (const auto& [e, k] : a.atoms) atoms[e] += k;
    for (const auto& [e, k] : b.atoms) atoms[e] += k;
    for (const auto& [e, k] : atoms)
      if (k != 0) r.atoms.push_back({e, k});
    std::map<mpq_class, Poly> exps;
    for (const auto* m : {&a, &b})
      for (const auto& [base, x] : m->exps) exps[base] = add(exps[base], to_poly(x));
    mpq_class coef = 1;
    for (const auto& [base, x] : exps) {
      auto [f, residual] = make_exp(base, x);
      coef *= f;
      if (residual) r.exps.push_back({base, *residual});
    }
    return {coef, r};
  }

  std::optional<std::pair<mpq_class, Mono>> mono_pow(const Mono& m, long k) {
    Mono r;
    for (const auto& [e, p] : m.atoms) {
      long q = long(p) * k;
      if (q > 1000 || q < -1000) return std::nullopt;
      r.atoms.push_back({e, static_cast<int>(q)});
    }
    mpq_class coef = 1;
    for (const auto& [base, x] : m.exps) {
      auto [f, residual] = make_exp(base, scale(to_poly(x), k));
      coef *= f;
      if (residual) r.exps.push_back({base, *residual});
    }
    return std::make_pair(coef, r);
  }

  std::optional<Poly> mul(const Poly& a, const Poly& b) {
    if (a.size() * b.size() > opt_.max_terms) return std::nullopt;
    Poly r;
    for (const auto& [ka, ta] : a)
      for (const auto& [kb, tb] : b) {
        auto [f, m] = mono_mul(ta.mono, tb.mono);
        add_term(r, m, ta.coef * tb.coef * f);
      }
    return r;
  }

  // ---- predicates ----
  bool int_valued(const Expr& e) { return int_valued_poly(to_poly(e)); }

  bool int_valued_atom(const Expr& a) {
    switch (a.kind()) {
      case ExprKind::Var:
      case ExprKind::Floor:
      case ExprKind::Ceil:
      case ExprKind::Factorial: return true;
      case ExprKind::Max:
      case ExprKind::Min: return int_valued(a.arg(0)) && int_valued(a.arg(1));
      case ExprKind::Ite: return int_valued(a.arg(0)) && int_valued(a.arg(1));
      default: return false;
    }
  }

  bool int_valued_mono(const Mono& m) {
    for (const auto& [a, k] : m.atoms)
      if (k < 0 || !int_valued_atom(a)) return false;
    for (const auto& [base, x] : m.exps) {
      if (base.get_den() != 1) return false;
      Poly px = to_poly(x);
      if (!int_valued_poly(px) || !nonneg_poly(px)) return false;
    }
    return true;
  }

  bool int_valued_poly(const Poly& p) {
    for (const auto& [k, t] : p)
      if (t.coef.get_den() != 1 || !int_valued_mono(t.mono)) return false;
    return true;
  }

  bool nonneg_atom(const Expr& a) {
    switch (a.kind()) {
      case ExprKind::Var: return opt_.naturals;
      case ExprKind::Factorial: return true;
      case ExprKind::Floor:
      case ExprKind::Ceil: return nonneg_poly(to_poly(a.arg(0)));
      case ExprKind::Max: return nonneg_poly(to_poly(a.arg(0))) || nonneg_poly(to_poly(a.arg(1)));
      case ExprKind::Min: return nonneg_poly(to_poly(a.arg(0))) && nonneg_poly(to_poly(a.arg(1)));
      default: return false;
    }
  }

  bool nonneg_mono(const Mono& m) {
    for (const auto& [a, k] : m.atoms)
      if (k % 2 != 0 && !nonneg_atom(a)) return false;
    for (const auto& [base, x] : m.exps)
      if (base <= 0) return false;
    return true;
  }

  bool nonneg_poly(const Poly& p) {
    for (const auto& [k, t] : p)
      if (t.coef < 0 || !nonneg_mono(t.mono)) return false;
    return true;
  }

  // ---- expression normal form ----
  Expr from_poly(const Poly& p) {
    if (p.empty()) return Expr::constant(0L);
    std::vector<const Term*> terms;
    const Term* konst = nullptr;
    for (const auto& [k, t] : p) {
      if (t.mono.empty()) konst = &t;
      else terms.push_back(&t);
    }
    std::stable_sort(terms.begin(), terms.end(),
                     [](const Term* a, const Term* b) { return degree(a->mono) > degree(b->mono); });
    if (konst) terms.push_back(konst);
    auto term_expr = [](const Term& t, const mpq_class& c) {
      if (t.mono.empty()) return Expr::constant(c);
      Expr m = mono_expr(t.mono);
      if (c == 1) return m;
      if (m.kind() == ExprKind::Div && m.arg(0).is_const(1)) return Expr::constant(c) / m.arg(1);
      return Expr::constant(c) * m;
    };
    Expr acc = term_expr(*terms[0], terms[0]->coef);
    for (size_t i = 1; i < terms.size(); ++i) {
      const Term& t = *terms[i];
      if (t.coef < 0) acc = acc - term_expr(t, -t.coef);
      else acc = acc + term_expr(t, t.coef);
    }
    return acc;
  }

  Poly to_poly(const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Const: return constant(e.value());
      case ExprKind::Var: return atom(e);
      case ExprKind::Add: return add(to_poly(e.arg(0)), to_poly(e.arg(1)));
      case ExprKind::Sub: return add(to_poly(e.arg(0)), to_poly(e.arg(1)), -1);
      case ExprKind::Mul: {
        Poly a = to_poly(e.arg(0)), b = to_poly(e.arg(1));
        if (auto r = mul(a, b)) return *r;
        return atom(from_poly(a) * from_poly(b));
      }
      case ExprKind::Div: return div(to_poly(e.arg(0)), to_poly(e.arg(1)));
      case ExprKind::Pow: return power(e.arg(0), e.arg(1));
      case ExprKind::Floor:
      case ExprKind::Ceil: return rounding(e.kind(), to_poly(e.arg(0)));
      case ExprKind::Log2: return log2_of(to_poly(e.arg(0)));
      case ExprKind::Factorial: {
        Poly a = to_poly(e.arg(0));
        if (is_constant(a)) {
          mpq_class v = const_value(a);
          if (v.get_den() == 1 && v >= 0 && v <= 20) return constant(num_factorial(Num(v)).q);
        }
        return atom(factorial(from_poly(a)));
      }
      case ExprKind::Max:
      case ExprKind::Min: {
        Poly a = to_poly(e.arg(0)), b = to_poly(e.arg(1));
        if (is_constant(a) && is_constant(b)) {
          mpq_class x = const_value(a), y = const_value(b);
          return constant(e.kind() == ExprKind::Max ? (x >= y ? x : y) : (x <= y ? x : y));
        }
        Expr ea = from_poly(a), eb = from_poly(b);
        if (ea == eb) return a;
        if (eb < ea) std::swap(ea, eb);
        return atom(Expr::binary(e.kind(), ea, eb));
      }
      case ExprKind::Call: {
        std::vector<Expr> args;
        for (const auto& a : e.args()) args.push_back(from_poly(to_poly(a)));
        return atom(Expr::call(e.name(), std::move(args)));
      }
      case ExprKind::Ite: {
        BoolExpr c = simp_bool(e.cond());
        if (c.is_true()) return to_poly(e.arg(0));
        if (c.is_false()) return to_poly(e.arg(1));
        Poly a = to_poly(e.arg(0)), b = to_poly(e.arg(1));
        Expr ea = from_poly(a), eb = from_poly(b);
        if (ea == eb) return a;
        return atom(Expr::ite(c, ea, eb));
      }
    }
    return atom(e);
  }

  Poly div(const Poly& a, const Poly& b) {
    if (is_constant(b)) {
      mpq_class c = const_value(b);
      if (c != 0) return scale(a, 1 / c);
    } else if (b.size() == 1) {
      const Term& t = b.begin()->second;
      if (auto inv = mono_pow(t.mono, -1)) {
        Poly m;
        add_term(m, inv->second, inv->first / t.coef);
        if (auto r = mul(a, m)) return *r;
      }
    }
    return atom(from_poly(a) / from_poly(b));
  }

  Poly power(const Expr& base, const Expr& exponent) {
    Poly b = to_poly(base);
    Poly x = to_poly(exponent);
    if (is_constant(x)) {
      mpq_class k = const_value(x);
      if (is_constant(b)) {
        try {
          Num v = num_pow(Num(const_value(b)), Num(k));
          if (v.exact) return constant(v.q);
        } catch (const EvalError&) {
        }
        return atom(pow(from_poly(b), from_poly(x)));
      }
      if (k.get_den() == 1 && abs(k) <= 64) {
        long kk = k.get_num().get_si();
        if (kk == 0) return constant(1);
        if (b.size() == 1) {
          const Term& t = b.begin()->second;
          auto mp = mono_pow(t.mono, kk);
          if (mp) {
            Num c = num_pow(Num(t.coef), Num(kk));
            Poly r;
            add_term(r, mp->second, c.q * mp->first);
            return r;
          }
        } else if (kk >= 2 && kk <= 6) {
          std::optional<Poly> acc = b;
          for (long i = 1; i < kk && acc; ++i) acc = mul(*acc, b);
          if (acc) return *acc;
        }
      }
      return atom(pow(from_poly(b), from_poly(x)));
    }
    if (is_constant(b)) {
      mpq_class c = const_value(b);
      if (c == 1) return constant(1);
      if (c > 0) {
        Expr ex = from_poly(x);
        if (c == 2 && ex.kind() == ExprKind::Log2) return to_poly(ex.arg(0));
        auto [f, residual] = make_exp(c, x);
        Poly r;
        Mono m;
        if (residual) m.exps.push_back({c, *residual});
        add_term(r, m, f);
        return r;
      }
      return atom(pow(from_poly(b), from_poly(x)));
    }
    // (c^e)^x -> c^(e*x)
    if (b.size() == 1) {
      const Term& t = b.begin()->second;
      if (t.coef == 1 && t.mono.atoms.empty() && !t.mono.exps.empty()) {
        Poly acc = constant(1);
        for (const auto& [c, e] : t.mono.exps) {
          auto prod = mul(to_poly(e), x);
          if (!prod) return atom(pow(from_poly(b), from_poly(x)));
          auto [f, residual] = make_exp(c, *prod);
          Poly r;
          Mono m;
          if (residual) m.exps.push_back({c, *residual});
          add_term(r, m, f);
          auto next = mul(acc, r);
          if (!next) return atom(pow(from_poly(b), from_poly(x)));
          acc = *next;
        }
        return acc;
      }
    }
    return atom(pow(from_poly(b), from_poly(x)));
  }

  Poly rounding(ExprKind k, const Poly& a) {
    if (is_constant(a)) {
      Num v = k == ExprKind::Floor ? num_floor(Num(const_value(a))) : num_ceil(Num(const_value(a)));
      return constant(v.q);
    }
    if (int_valued_poly(a)) return a;
    Poly ints, rest;
    for (const auto& [key, t] : a) {
      if (t.coef.get_den() == 1 && int_valued_mono(t.mono)) ints.emplace(key, t);
      else rest.emplace(key, t);
    }
    Poly r = atom(Expr::unary(k, from_poly(rest)));
    return add(ints, r);
  }

  Poly log2_of(const Poly& a) {
    if (is_constant(a)) {
      mpq_class v = const_value(a);
      if (v > 0) {
        Num n = num_log2(Num(v));
        if (n.exact) return constant(n.q);
      }
      return atom(log2(from_poly(a)));
    }
    if (a.size() == 1) {
      const Term& t = a.begin()->second;
      bool only_base2 = t.mono.atoms.empty() && !t.mono.exps.empty();
      for (const auto& [c, e] : t.mono.exps)
        if (c != 2) only_base2 = false;
      if (only_base2 && t.coef > 0) {
        Num n = num_log2(Num(t.coef));
        if (n.exact) {
          Poly r = constant(n.q);
          for (const auto& [c, e] : t.mono.exps) r = add(r, to_poly(e));
          return r;
        }
      }
    }
    return atom(log2(from_poly(a)));
  }

  // ---- booleans ----
  static BoolExpr negated(const BoolExpr& c) {
    switch (c.kind()) {
      case BoolKind::True: return BoolExpr::falsity();
      case BoolKind::Not: return c.children()[0];
      case BoolKind::And:
      case BoolKind::Or: {
        std::vector<BoolExpr> cs;
        for (const auto& x : c.children()) cs.push_back(negated(x));
        return c.kind() == BoolKind::And ? BoolExpr::disj(cs) : BoolExpr::conj(cs);
      }
      case BoolKind::Cmp: {
        static const std::map<CmpOp, CmpOp> flip = {{CmpOp::Eq, CmpOp::Ne}, {CmpOp::Ne, CmpOp::Eq},
                                                    {CmpOp::Lt, CmpOp::Ge}, {CmpOp::Ge, CmpOp::Lt},
                                                    {CmpOp::Le, CmpOp::Gt}, {CmpOp::Gt, CmpOp::Le}};
        return BoolExpr::cmp(flip.at(c.op()), c.lhs(), c.rhs());
      }
    }
    return c;
  }

  struct Interval {
    std::optional<mpz_class> lo, hi;
    std::set<mpz_class> ne;
    bool empty = false;
  };

  std::optional<mpz_class> natural_floor(const Expr& l) {
    if (nonneg_poly(to_poly(l))) return mpz_class(0);
    return std::nullopt;
  }

  // Canonical atom for an integer-valued left side: L > c, L < c, L = c, L != c.
  std::optional<std::pair<Expr, Interval>> as_interval(const BoolExpr& c) {
    if (c.kind() != BoolKind::Cmp || !c.rhs().is_const() || c.rhs().value().get_den() != 1) return std::nullopt;
    if (!int_valued(c.lhs())) return std::nullopt;
    mpz_class v = c.rhs().value().get_num();
    Interval iv;
    switch (c.op()) {
      case CmpOp::Gt: iv.lo = v + 1; break;
      case CmpOp::Lt: iv.hi = v - 1; break;
      case CmpOp::Eq: iv.lo = v; iv.hi = v; break;
      case CmpOp::Ne: iv.ne.insert(v); break;
      default: return std::nullopt;
    }
    return std::make_pair(c.lhs(), iv);
  }

  static void intersect(Interval& a, const Interval& b) {
    if (b.lo && (!a.lo || *b.lo > *a.lo)) a.lo = b.lo;
    if (b.hi && (!a.hi || *b.hi < *a.hi)) a.hi = b.hi;
    a.ne.insert(b.ne.begin(), b.ne.end());
    a.empty = a.empty || b.empty;
  }

  BoolExpr emit_interval(const Expr& l, Interval iv) {
    auto nat = natural_floor(l);
    if (nat && (!iv.lo || *iv.lo < *nat)) iv.lo = nat;
    while (iv.lo && iv.ne.count(*iv.lo)) iv.lo = *iv.lo + 1;
    while (iv.hi && iv.ne.count(*iv.hi)) iv.hi = *iv.hi - 1;
    if (iv.empty || (iv.lo && iv.hi && *iv.lo > *iv.hi)) return BoolExpr::falsity();
    if (iv.lo && iv.hi && *iv.lo == *iv.hi) return BoolExpr::cmp(CmpOp::Eq, l, Expr::constant(mpq_class(*iv.lo)));
    std::vector<BoolExpr> out;
    if (iv.lo && !(nat && *iv.lo == *nat))
      out.push_back(BoolExpr::cmp(CmpOp::Gt, l, Expr::constant(mpq_class(*iv.lo - 1))));
    if (iv.hi) out.push_back(BoolExpr::cmp(CmpOp::Lt, l, Expr::constant(mpq_class(*iv.hi + 1))));
    for (const auto& v : iv.ne)
      if ((!iv.lo || v > *iv.lo) && (!iv.hi || v < *iv.hi))
        out.push_back(BoolExpr::cmp(CmpOp::Ne, l, Expr::constant(mpq_class(v))));
    return BoolExpr::conj(out);
  }

  BoolExpr simp_cmp(CmpOp op, const Expr& lhs, const Expr& rhs) {
    Poly d = add(to_poly(lhs), to_poly(rhs), -1);
    if (is_constant(d)) {
      mpq_class v = const_value(d);
      bool r = false;
      switch (op) {
        case CmpOp::Eq: r = v == 0; break;
        case CmpOp::Ne: r = v != 0; break;
        case CmpOp::Lt: r = v < 0; break;
        case CmpOp::Le: r = v <= 0; break;
        case CmpOp::Gt: r = v > 0; break;
        case CmpOp::Ge: r = v >= 0; break;
      }
      return r ? BoolExpr::truth() : BoolExpr::falsity();
    }
    mpq_class c = -const_value(d);
    Poly l = add(d, constant(const_value(d)), -1);
    // normalize: coprime integer coefficients, leading term positive
    Expr lead_key = from_poly(l);
    const Term* lead = nullptr;
    {
      std::vector<const Term*> ts;
      for (const auto& [k, t] : l) ts.push_back(&t);
      std::stable_sort(ts.begin(), ts.end(),
                       [](const Term* a, const Term* b) { return degree(a->mono) > degree(b->mono); });
      lead = ts.front();
    }
    mpz_class g_num = 0, g_den = 1;
    for (const auto& [k, t] : l) {
      mpz_gcd(g_num.get_mpz_t(), g_num.get_mpz_t(), t.coef.get_num_mpz_t());
      mpz_lcm(g_den.get_mpz_t(), g_den.get_mpz_t(), t.coef.get_den_mpz_t());
    }
    mpq_class g(g_num, g_den);
    g.canonicalize();
    if (lead->coef < 0) g = -g;
    if (g != 1) {
      l = scale(l, 1 / g);
      c /= g;
      if (g < 0) {
        static const std::map<CmpOp, CmpOp> mirror = {{CmpOp::Eq, CmpOp::Eq}, {CmpOp::Ne, CmpOp::Ne},
                                                      {CmpOp::Lt, CmpOp::Gt}, {CmpOp::Gt, CmpOp::Lt},
                                                      {CmpOp::Le, CmpOp::Ge}, {CmpOp::Ge, CmpOp::Le}};
        op = mirror.at(op);
      }
    }
    Expr le = from_poly(l);
    if (!int_valued_poly(l)) return BoolExpr::cmp(op, le, Expr::constant(c));
    Interval iv;
    mpz_class fl, ce;
    mpz_fdiv_q(fl.get_mpz_t(), c.get_num_mpz_t(), c.get_den_mpz_t());
    mpz_cdiv_q(ce.get_mpz_t(), c.get_num_mpz_t(), c.get_den_mpz_t());
    bool integral = c.get_den() == 1;
    switch (op) {
      case CmpOp::Eq:
        if (!integral) return BoolExpr::falsity();
        iv.lo = fl;
        iv.hi = fl;
        break;
      case CmpOp::Ne:
        if (!integral) return BoolExpr::truth();
        iv.ne.insert(fl);
        break;
      case CmpOp::Gt: iv.lo = fl + 1; break;
      case CmpOp::Ge: iv.lo = ce; break;
      case CmpOp::Lt: iv.hi = ce - 1; break;
      case CmpOp::Le: iv.hi = fl; break;
    }
    return emit_interval(le, iv);
  }

  static void flatten(BoolKind k, const BoolExpr& c, std::vector<BoolExpr>& out) {
    if (c.kind() == k) {
      for (const auto& x : c.children()) flatten(k, x, out);
    } else {
      out.push_back(c);
    }
  }

  static void sort_unique(std::vector<BoolExpr>& cs) {
    std::sort(cs.begin(), cs.end(), [](const BoolExpr& a, const BoolExpr& b) { return compare(a, b) < 0; });
    cs.erase(std::unique(cs.begin(), cs.end(), [](const BoolExpr& a, const BoolExpr& b) { return a == b; }),
             cs.end());
  }

  static bool has_child(const BoolExpr& c, const BoolExpr& x) {
    for (const auto& y : c.children())
      if (y == x) return true;
    return false;
  }

  BoolExpr simp_and(const std::vector<BoolExpr>& raw) {
    std::vector<BoolExpr> parts;
    for (const auto& c : raw) flatten(BoolKind::And, simp_bool(c), parts);
    std::map<Expr, Interval, ExprLess> groups;
    std::vector<Expr> order;
    std::vector<BoolExpr> rest;
    for (const auto& p : parts) {
      if (p.is_true()) continue;
      if (p.is_false()) return BoolExpr::falsity();
      if (auto iv = as_interval(p)) {
        auto it = groups.find(iv->first);
        if (it == groups.end()) {
          groups.emplace(iv->first, iv->second);
          order.push_back(iv->first);
        } else {
          intersect(it->second, iv->second);
        }
        continue;
      }
      rest.push_back(p);
    }
    for (const auto& l : order) {
      BoolExpr b = emit_interval(l, groups.at(l));
      if (b.is_false()) return b;
      flatten(BoolKind::And, b, rest);
    }
    std::vector<BoolExpr> kept;
    for (const auto& p : rest)
      if (!p.is_true()) kept.push_back(p);
    sort_unique(kept);
    // absorption: a and (a or b) -> a
    std::vector<BoolExpr> out;
    for (const auto& p : kept) {
      bool absorbed = false;
      if (p.kind() == BoolKind::Or)
        for (const auto& q : kept)
          if (q != p && has_child(p, q)) absorbed = true;
      if (!absorbed) out.push_back(p);
    }
    return BoolExpr::conj(out);
  }

  BoolExpr simp_or(const std::vector<BoolExpr>& raw) {
    std::vector<BoolExpr> parts;
    for (const auto& c : raw) flatten(BoolKind::Or, simp_bool(c), parts);
    std::map<Expr, std::vector<Interval>, ExprLess> groups;
    std::vector<Expr> order;
    std::vector<BoolExpr> rest;
    for (const auto& p : parts) {
      if (p.is_false()) continue;
      if (p.is_true()) return BoolExpr::truth();
      auto iv = as_interval(p);
      if (iv && iv->second.ne.empty()) {
        if (!groups.count(iv->first)) order.push_back(iv->first);
        groups[iv->first].push_back(iv->second);
        continue;
      }
      rest.push_back(p);
    }
    for (const auto& l : order) {
      auto ivs = groups.at(l);
      auto nat = natural_floor(l);
      for (auto& iv : ivs)
        if (nat && (!iv.lo || *iv.lo < *nat)) iv.lo = nat;
      // merge overlapping or adjacent integer intervals
      std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) {
        if (!a.lo) return bool(b.lo);
        if (!b.lo) return false;
        return *a.lo < *b.lo;
      });
      std::vector<Interval> merged;
      for (const auto& iv : ivs) {
        if (iv.lo && iv.hi && *iv.lo > *iv.hi) continue;
        if (!merged.empty()) {
          Interval& m = merged.back();
          if (!m.hi || (iv.lo && *iv.lo <= *m.hi + 1) || !iv.lo) {
            if (!m.hi || !iv.hi) m.hi.reset();
            else if (*iv.hi > *m.hi) m.hi = iv.hi;
            continue;
          }
        }
        merged.push_back(iv);
      }
      for (const auto& m : merged) {
        bool all = (!m.lo || (nat && *m.lo == *nat)) && !m.hi;
        if (all) return BoolExpr::truth();
        flatten(BoolKind::Or, emit_interval(l, m), rest);
      }
    }
    std::vector<BoolExpr> kept;
    for (const auto& p : rest)
      if (!p.is_false()) kept.push_back(p);
    sort_unique(kept);
    for (const auto& p : kept)
      for (const auto& q : kept)
        if (negated(p) == q) return BoolExpr::truth();
    std::vector<BoolExpr> out;
    for (const auto& p : kept) {
      bool absorbed = false;
      if (p.kind() == BoolKind::And)
        for (const auto& q : kept)
          if (q != p && has_child(p, q)) absorbed = true;
      if (!absorbed) out.push_back(p);
    }
    return BoolExpr::disj(out);
  }

  BoolExpr simp_bool(const BoolExpr& c) {
    switch (c.kind()) {
      case BoolKind::True: return c;
      case BoolKind::Not: {
        const BoolExpr& x = c.children()[0];
        if (x.is_true()) return c;
        return simp_bool(negated(x));
      }
      case BoolKind::Cmp: return simp_cmp(c.op(), c.lhs(), c.rhs());
      case BoolKind::And: return simp_and(c.children());
      case BoolKind::Or: return simp_or(c.children());
    }
    return c;
  }
};

}  // namespace

Expr simplify(const Expr& e, const SimplifyOptions& opt, SimplifyStats* stats) {
  Simplifier s(opt);
  Expr cur = e;
  SimplifyStats st;
  for (int i = 0; i < opt.max_passes; ++i) {
    Expr next = s.run(cur);
    ++st.passes;
    if (next == cur) {
      st.fixpoint = true;
      break;
    }
    cur = next;
  }
  if (stats) *stats = st;
  return cur;
}

BoolExpr simplify(const BoolExpr& c, const SimplifyOptions& opt, SimplifyStats* stats) {
  Simplifier s(opt);
  BoolExpr cur = c;
  SimplifyStats st;
  for (int i = 0; i < opt.max_passes; ++i) {
    BoolExpr next = s.run(cur);
    ++st.passes;
    if (next == cur) {
      st.fixpoint = true;
      break;
    }
    cur = next;
  }
  if (stats) *stats = st;
  return cur;
}

bool integer_valued(const Expr& e) {
  SimplifyOptions opt;
  Expr s = simplify(e, opt);
  // An integer-valued expression is left unchanged by floor removal.
  return simplify(floor(s), opt) == s;
}

namespace {

void collect_unsupported(const Expr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case ExprKind::Factorial: out.insert("Factorial"); break;
    case ExprKind::Log2: out.insert("Log2"); break;
    case ExprKind::Pow: {
      const Expr& b = e.arg(0);
      const Expr& x = e.arg(1);
      if (x.is_const()) {
        if (x.value().get_den() != 1 && !b.is_const()) out.insert("Pow");
      } else if (!b.is_const() || !integer_valued(x)) {
        out.insert("Pow");
      }
      break;
    }
    default: break;
  }
  if (e.kind() == ExprKind::Ite) {
    std::vector<const BoolExpr*> stack{&e.cond()};
    while (!stack.empty()) {
      const BoolExpr* c = stack.back();
      stack.pop_back();
      if (c->kind() == BoolKind::Cmp) {
        collect_unsupported(c->lhs(), out);
        collect_unsupported(c->rhs(), out);
      }
      for (const auto& x : c->children()) stack.push_back(&x);
    }
  }
  for (const auto& a : e.args()) collect_unsupported(a, out);
}

}  // namespace

std::vector<std::string> contains_unsupported(const Expr& e) {
  std::set<std::string> out;
  collect_unsupported(simplify(e), out);
  return {out.begin(), out.end()};
}

std::vector<std::string> contains_unsupported(const PiecewiseClosedForm& cf) {
  std::set<std::string> out;
  for (const auto& p : cf.pieces) {
    collect_unsupported(simplify(p.body), out);
    if (!p.exact) out.insert("InexactConstant");
  }
  return {out.begin(), out.end()};
}

}  // namespace recsolve
