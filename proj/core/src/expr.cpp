#include "recsolve/expr.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace recsolve {

const char* kind_name(ExprKind k) {
  switch (k) {
    case ExprKind::Const: return "Const";
    case ExprKind::Var: return "Var";
    case ExprKind::Add: return "Add";
    case ExprKind::Sub: return "Sub";
    case ExprKind::Mul: return "Mul";
    case ExprKind::Div: return "Div";
    case ExprKind::Pow: return "Pow";
    case ExprKind::Floor: return "Floor";
    case ExprKind::Ceil: return "Ceil";
    case ExprKind::Log2: return "Log2";
    case ExprKind::Factorial: return "Factorial";
    case ExprKind::Max: return "Max";
    case ExprKind::Min: return "Min";
    case ExprKind::Call: return "Call";
    case ExprKind::Ite: return "Ite";
  }
  return "?";
}

const char* cmp_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

const char* error_name(EvalErrorKind k) {
  switch (k) {
    case EvalErrorKind::DivisionByZero: return "DivisionByZero";
    case EvalErrorKind::Log2Domain: return "Log2Domain";
    case EvalErrorKind::FactorialDomain: return "FactorialDomain";
    case EvalErrorKind::PowDomain: return "PowDomain";
    case EvalErrorKind::Overflow: return "Overflow";
    case EvalErrorKind::UnboundVariable: return "UnboundVariable";
    case EvalErrorKind::CallInGround: return "CallInGround";
    case EvalErrorKind::NoMatchingCase: return "NoMatchingCase";
    case EvalErrorKind::BudgetExceeded: return "BudgetExceeded";
  }
  return "?";
}

// ---- construction ---------------------------------------------------------

namespace {

std::shared_ptr<ExprNode> make_node(ExprKind k) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  return n;
}

}  // namespace

Expr::Expr() : Expr(constant(0L)) {}

Expr Expr::constant(const mpq_class& v) {
  auto n = make_node(ExprKind::Const);
  n->value = v;
  n->value.canonicalize();
  return Expr(n);
}

Expr Expr::constant(long v) { return constant(mpq_class(v)); }

Expr Expr::var(const std::string& name) {
  auto n = make_node(ExprKind::Var);
  n->name = name;
  return Expr(n);
}

Expr Expr::binary(ExprKind k, const Expr& a, const Expr& b) {
  auto n = make_node(k);
  n->args = {a, b};
  return Expr(n);
}

Expr Expr::unary(ExprKind k, const Expr& a) {
  auto n = make_node(k);
  n->args = {a};
  return Expr(n);
}

Expr Expr::call(const std::string& fn, std::vector<Expr> args) {
  auto n = make_node(ExprKind::Call);
  n->name = fn;
  n->args = std::move(args);
  return Expr(n);
}

Expr Expr::ite(const BoolExpr& c, const Expr& a, const Expr& b) {
  auto n = make_node(ExprKind::Ite);
  n->args = {a, b};
  n->conds = {c};
  return Expr(n);
}

ExprKind Expr::kind() const { return n_->kind; }
const mpq_class& Expr::value() const { return n_->value; }
const std::string& Expr::name() const { return n_->name; }
const std::vector<Expr>& Expr::args() const { return n_->args; }
const BoolExpr& Expr::cond() const { return n_->conds.at(0); }

bool Expr::is_const(long v) const { return is_const() && value() == v; }

BoolExpr::BoolExpr() : BoolExpr(truth()) {}

BoolExpr BoolExpr::truth() {
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolKind::True;
  return BoolExpr(n);
}

BoolExpr BoolExpr::falsity() { return negate(truth()); }

BoolExpr BoolExpr::cmp(CmpOp op, const Expr& a, const Expr& b) {
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolKind::Cmp;
  n->op = op;
  n->terms = {a, b};
  return BoolExpr(n);
}

BoolExpr BoolExpr::conj(std::vector<BoolExpr> cs) {
  if (cs.empty()) return truth();
  if (cs.size() == 1) return cs[0];
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolKind::And;
  n->children = std::move(cs);
  return BoolExpr(n);
}

BoolExpr BoolExpr::disj(std::vector<BoolExpr> cs) {
  if (cs.empty()) return falsity();
  if (cs.size() == 1) return cs[0];
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolKind::Or;
  n->children = std::move(cs);
  return BoolExpr(n);
}

BoolExpr BoolExpr::negate(const BoolExpr& c) {
  auto n = std::make_shared<BoolNode>();
  n->kind = BoolKind::Not;
  n->children = {c};
  return BoolExpr(n);
}

BoolKind BoolExpr::kind() const { return n_->kind; }
CmpOp BoolExpr::op() const { return n_->op; }
const Expr& BoolExpr::lhs() const { return n_->terms.at(0); }
const Expr& BoolExpr::rhs() const { return n_->terms.at(1); }
const std::vector<BoolExpr>& BoolExpr::children() const { return n_->children; }

bool BoolExpr::is_false() const {
  return kind() == BoolKind::Not && children()[0].is_true();
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Div, a, b); }
Expr pow(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Pow, a, b); }
Expr floor(const Expr& a) { return Expr::unary(ExprKind::Floor, a); }
Expr ceil(const Expr& a) { return Expr::unary(ExprKind::Ceil, a); }
Expr log2(const Expr& a) { return Expr::unary(ExprKind::Log2, a); }
Expr factorial(const Expr& a) { return Expr::unary(ExprKind::Factorial, a); }
Expr max(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Max, a, b); }
Expr min(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Min, a, b); }

BoolExpr operator&&(const BoolExpr& a, const BoolExpr& b) { return BoolExpr::conj({a, b}); }
BoolExpr operator||(const BoolExpr& a, const BoolExpr& b) { return BoolExpr::disj({a, b}); }
BoolExpr operator!(const BoolExpr& a) { return BoolExpr::negate(a); }

// ---- structural order -----------------------------------------------------

int compare(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case ExprKind::Const: {
      int c = cmp(a.value(), b.value());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case ExprKind::Var: return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    case ExprKind::Call:
      if (a.name() != b.name()) return a.name() < b.name() ? -1 : 1;
      break;
    case ExprKind::Ite: {
      int c = compare(a.cond(), b.cond());
      if (c) return c;
      break;
    }
    default: break;
  }
  const auto& xa = a.args();
  const auto& xb = b.args();
  if (xa.size() != xb.size()) return xa.size() < xb.size() ? -1 : 1;
  for (size_t i = 0; i < xa.size(); ++i) {
    int c = compare(xa[i], xb[i]);
    if (c) return c;
  }
  return 0;
}

int compare(const BoolExpr& a, const BoolExpr& b) {
  if (a.node() == b.node()) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (a.kind() == BoolKind::True) return 0;
  if (a.kind() == BoolKind::Cmp) {
    if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
    int c = compare(a.lhs(), b.lhs());
    if (c) return c;
    return compare(a.rhs(), b.rhs());
  }
  const auto& xa = a.children();
  const auto& xb = b.children();
  if (xa.size() != xb.size()) return xa.size() < xb.size() ? -1 : 1;
  for (size_t i = 0; i < xa.size(); ++i) {
    int c = compare(xa[i], xb[i]);
    if (c) return c;
  }
  return 0;
}

size_t node_count(const Expr& e) {
  size_t n = 1;
  for (const auto& a : e.args()) n += node_count(a);
  return n;
}

// ---- numerics -------------------------------------------------------------

namespace {

[[noreturn]] void fail(EvalErrorKind k, const std::string& msg) { throw EvalError(k, msg); }

const double kOverflowDouble = std::ldexp(1.0, kOverflowBits);

bool too_big(const mpz_class& z) { return mpz_sizeinbase(z.get_mpz_t(), 2) > kOverflowBits; }

Num checked_real(double d) {
  if (std::isnan(d)) fail(EvalErrorKind::PowDomain, "not a number");
  if (!std::isfinite(d) || std::fabs(d) >= kOverflowDouble) fail(EvalErrorKind::Overflow, "magnitude exceeds 2^512");
  return Num::real(d);
}

long bits(const mpz_class& z) { return static_cast<long>(mpz_sizeinbase(z.get_mpz_t(), 2)); }

// Overflow is a matter of magnitude; a small value whose exact form is too
// wide continues as a double.
Num checked(mpq_class q) {
  q.canonicalize();
  if (!too_big(q.get_num()) && !too_big(q.get_den())) return Num(q);
  if (q != 0 && bits(q.get_num()) - bits(q.get_den()) >= static_cast<long>(kOverflowBits))
    fail(EvalErrorKind::Overflow, "magnitude exceeds 2^512");
  return checked_real(q.get_d());
}

bool is_power_of_two(const mpz_class& z) {
  return z > 0 && mpz_scan1(z.get_mpz_t(), 0) == mpz_sizeinbase(z.get_mpz_t(), 2) - 1;
}

// floor(log2(q)) for q > 0.
long floor_log2(const mpq_class& q) {
  const mpz_class& p = q.get_num();
  const mpz_class& d = q.get_den();
  long k = bits(p) - bits(d);
  mpz_class lhs = p, rhs = d;
  if (k >= 0) rhs <<= k; else lhs <<= -k;
  return lhs >= rhs ? k : k - 1;
}

bool exact_log2(const mpq_class& q, long& out) {
  if (q.get_den() == 1 && is_power_of_two(q.get_num())) {
    out = bits(q.get_num()) - 1;
    return true;
  }
  if (q.get_num() == 1 && is_power_of_two(q.get_den())) {
    out = -(bits(q.get_den()) - 1);
    return true;
  }
  return false;
}

bool exact_root(const mpz_class& z, unsigned long k, mpz_class& r) {
  if (z < 0) return false;
  return mpz_root(r.get_mpz_t(), z.get_mpz_t(), k) != 0;
}

}  // namespace

Num Num::real(double v) {
  Num n;
  n.exact = false;
  n.d = v;
  return n;
}

double Num::to_double() const { return exact ? q.get_d() : d; }

bool Num::is_integer() const {
  if (exact) return q.get_den() == 1;
  return std::isfinite(d) && std::floor(d) == d;
}

mpz_class Num::floor_int() const {
  if (exact) {
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
  }
  if (!std::isfinite(d) || std::fabs(d) >= kOverflowDouble) fail(EvalErrorKind::Overflow, "magnitude exceeds 2^512");
  return mpz_class(std::floor(d));
}

std::string Num::str() const {
  if (exact) return q.get_str();
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

Num num_add(const Num& a, const Num& b) {
  if (a.exact && b.exact) return checked(a.q + b.q);
  return checked_real(a.to_double() + b.to_double());
}

Num num_sub(const Num& a, const Num& b) {
  if (a.exact && b.exact) return checked(a.q - b.q);
  return checked_real(a.to_double() - b.to_double());
}

Num num_mul(const Num& a, const Num& b) {
  if (a.exact && b.exact) return checked(a.q * b.q);
  return checked_real(a.to_double() * b.to_double());
}

Num num_div(const Num& a, const Num& b, bool guarded) {
  bool zero = b.exact ? b.q == 0 : b.d == 0.0;
  if (zero) {
    if (guarded) return Num(0L);
    fail(EvalErrorKind::DivisionByZero, "division by zero");
  }
  if (a.exact && b.exact) return checked(a.q / b.q);
  return checked_real(a.to_double() / b.to_double());
}

Num num_pow(const Num& a, const Num& b) {
  if (a.exact && b.exact) {
    const mpq_class& base = a.q;
    if (b.q.get_den() == 1) {
      const mpz_class& e = b.q.get_num();
      if (e == 0) return Num(1L);
      if (base == 0) {
        if (e < 0) fail(EvalErrorKind::DivisionByZero, "zero to a negative power");
        return Num(0L);
      }
      if (base == 1) return Num(1L);
      if (base == -1) return Num(mpz_odd_p(e.get_mpz_t()) ? -1L : 1L);
      mpz_class ae = abs(e);
      // log2 of the result's magnitude, from floor(log2|base|) bounds
      long lg = floor_log2(abs(base));
      double lo = e > 0 ? double(lg) : -double(lg + 1);
      if (!ae.fits_ulong_p() || lo * ae.get_d() >= double(kOverflowBits))
        fail(EvalErrorKind::Overflow, "magnitude exceeds 2^512");
      unsigned long ue = ae.get_ui();
      if (double(bits(base.get_num()) + bits(base.get_den())) * ue > 8.0 * kOverflowBits)
        return checked_real(std::pow(base.get_d(), e.get_d()));
      mpz_class num, den;
      mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), ue);
      mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), ue);
      mpq_class r = e > 0 ? mpq_class(num, den) : mpq_class(den, num);
      return checked(r);
    }
    // rational exponent p/k: exact when the base is a perfect k-th power
    if (base >= 0 && b.q.get_den().fits_ulong_p() && b.q.get_num().fits_slong_p()) {
      unsigned long k = b.q.get_den().get_ui();
      mpz_class rn, rd;
      if (exact_root(base.get_num(), k, rn) && exact_root(base.get_den(), k, rd))
        return num_pow(Num(mpq_class(rn, rd)), Num(mpq_class(b.q.get_num())));
    }
  }
  double x = a.to_double(), y = b.to_double();
  if (x < 0 && std::floor(y) != y) fail(EvalErrorKind::PowDomain, "negative base with fractional exponent");
  if (x == 0 && y < 0) fail(EvalErrorKind::DivisionByZero, "zero to a negative power");
  return checked_real(std::pow(x, y));
}

Num num_floor(const Num& a) {
  if (a.exact) return Num(mpq_class(a.floor_int()));
  return checked(mpq_class(a.floor_int()));
}

Num num_ceil(const Num& a) {
  if (a.exact) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), a.q.get_num_mpz_t(), a.q.get_den_mpz_t());
    return Num(mpq_class(r));
  }
  if (!std::isfinite(a.d) || std::fabs(a.d) >= kOverflowDouble) fail(EvalErrorKind::Overflow, "magnitude exceeds 2^512");
  return Num(mpq_class(mpz_class(std::ceil(a.d))));
}

Num num_log2(const Num& a, bool guarded) {
  bool below_one = a.exact ? a.q < 1 : a.d < 1.0;
  if (guarded && below_one) return Num(0L);
  bool nonpos = a.exact ? a.q <= 0 : a.d <= 0.0;
  if (nonpos) fail(EvalErrorKind::Log2Domain, "log2 of a non-positive value");
  if (a.exact) {
    long k;
    if (exact_log2(a.q, k)) return Num(k);
  }
  return checked_real(std::log2(a.to_double()));
}

Num num_factorial(const Num& a) {
  if (!a.is_integer()) fail(EvalErrorKind::FactorialDomain, "factorial of a non-integer");
  mpz_class n = a.floor_int();
  if (n < 0) fail(EvalErrorKind::FactorialDomain, "factorial of a negative value");
  if (n > 200) fail(EvalErrorKind::Overflow, "magnitude exceeds 2^512");
  mpz_class r;
  mpz_fac_ui(r.get_mpz_t(), n.get_ui());
  return checked(mpq_class(r));
}

int num_cmp(const Num& a, const Num& b) {
  if (a.exact && b.exact) {
    int c = cmp(a.q, b.q);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  double x = a.to_double(), y = b.to_double();
  return x < y ? -1 : (x > y ? 1 : 0);
}

bool num_eq(const Num& a, const Num& b) { return num_cmp(a, b) == 0; }

mpq_class exact_rational(double v) {
  mpq_class q(v);
  q.canonicalize();
  return q;
}

// ---- evaluation -----------------------------------------------------------

namespace {

// floor/ceil of log2 and of k-th roots, computed without rounding.
bool exact_rounding(const Expr& e, const Env& env, const EvalOptions& opt, bool up, Num& out) {
  const Expr& inner = e.arg(0);
  if (inner.kind() == ExprKind::Log2) {
    Num v = eval_ground(inner.arg(0), env, opt);
    if (!v.exact) return false;
    if (v.q < 1 && opt.guarded) { out = Num(0L); return true; }
    if (v.q <= 0) fail(EvalErrorKind::Log2Domain, "log2 of a non-positive value");
    long k = floor_log2(v.q);
    long exact_k;
    if (up && !exact_log2(v.q, exact_k)) ++k;
    out = Num(k);
    return true;
  }
  if (inner.kind() == ExprKind::Pow) {
    const Expr& ex = inner.arg(1);
    if (!ex.is_const() || ex.value().get_num() != 1 || ex.value().get_den() == 1) return false;
    if (!ex.value().get_den().fits_ulong_p()) return false;
    Num v = eval_ground(inner.arg(0), env, opt);
    if (!v.exact || v.q.get_den() != 1 || v.q < 0) return false;
    unsigned long k = ex.value().get_den().get_ui();
    mpz_class r;
    bool is_exact = mpz_root(r.get_mpz_t(), v.q.get_num_mpz_t(), k) != 0;
    if (up && !is_exact) r += 1;
    out = Num(mpq_class(r));
    return true;
  }
  return false;
}

}  // namespace

Num eval_ground(const Expr& e, const Env& env, const EvalOptions& opt) {
  switch (e.kind()) {
    case ExprKind::Const: return Num(e.value());
    case ExprKind::Var: {
      auto it = env.find(e.name());
      if (it == env.end()) fail(EvalErrorKind::UnboundVariable, "unbound variable " + e.name());
      return Num(mpq_class(it->second));
    }
    case ExprKind::Add: return num_add(eval_ground(e.arg(0), env, opt), eval_ground(e.arg(1), env, opt));
    case ExprKind::Sub: return num_sub(eval_ground(e.arg(0), env, opt), eval_ground(e.arg(1), env, opt));
    case ExprKind::Mul: return num_mul(eval_ground(e.arg(0), env, opt), eval_ground(e.arg(1), env, opt));
    case ExprKind::Div:
      return num_div(eval_ground(e.arg(0), env, opt), eval_ground(e.arg(1), env, opt), opt.guarded);
    case ExprKind::Pow: return num_pow(eval_ground(e.arg(0), env, opt), eval_ground(e.arg(1), env, opt));
    case ExprKind::Floor:
    case ExprKind::Ceil: {
      bool up = e.kind() == ExprKind::Ceil;
      Num r;
      if (exact_rounding(e, env, opt, up, r)) return r;
      Num v = eval_ground(e.arg(0), env, opt);
      return up ? num_ceil(v) : num_floor(v);
    }
    case ExprKind::Log2: return num_log2(eval_ground(e.arg(0), env, opt), opt.guarded);
    case ExprKind::Factorial: return num_factorial(eval_ground(e.arg(0), env, opt));
    case ExprKind::Max:
    case ExprKind::Min: {
      Num a = eval_ground(e.arg(0), env, opt);
      Num b = eval_ground(e.arg(1), env, opt);
      int c = num_cmp(a, b);
      if (e.kind() == ExprKind::Max) return c >= 0 ? a : b;
      return c <= 0 ? a : b;
    }
    case ExprKind::Call: fail(EvalErrorKind::CallInGround, "call to " + e.name() + " in ground expression");
    case ExprKind::Ite:
      return eval_bool(e.cond(), env, opt) ? eval_ground(e.arg(0), env, opt) : eval_ground(e.arg(1), env, opt);
  }
  fail(EvalErrorKind::CallInGround, "unknown node");
}

bool eval_bool(const BoolExpr& c, const Env& env, const EvalOptions& opt) {
  switch (c.kind()) {
    case BoolKind::True: return true;
    case BoolKind::Not: return !eval_bool(c.children()[0], env, opt);
    case BoolKind::And:
      for (const auto& x : c.children())
        if (!eval_bool(x, env, opt)) return false;
      return true;
    case BoolKind::Or:
      for (const auto& x : c.children())
        if (eval_bool(x, env, opt)) return true;
      return false;
    case BoolKind::Cmp: {
      int r = num_cmp(eval_ground(c.lhs(), env, opt), eval_ground(c.rhs(), env, opt));
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
  return false;
}

// ---- traversal ------------------------------------------------------------

Expr substitute(const Expr& e, const std::map<std::string, Expr>& b) {
  switch (e.kind()) {
    case ExprKind::Const: return e;
    case ExprKind::Var: {
      auto it = b.find(e.name());
      return it == b.end() ? e : it->second;
    }
    case ExprKind::Call: {
      std::vector<Expr> args;
      for (const auto& a : e.args()) args.push_back(substitute(a, b));
      return Expr::call(e.name(), std::move(args));
    }
    case ExprKind::Ite:
      return Expr::ite(substitute(e.cond(), b), substitute(e.arg(0), b), substitute(e.arg(1), b));
    default:
      if (e.args().size() == 1) return Expr::unary(e.kind(), substitute(e.arg(0), b));
      return Expr::binary(e.kind(), substitute(e.arg(0), b), substitute(e.arg(1), b));
  }
}

BoolExpr substitute(const BoolExpr& c, const std::map<std::string, Expr>& b) {
  switch (c.kind()) {
    case BoolKind::True: return c;
    case BoolKind::Cmp: return BoolExpr::cmp(c.op(), substitute(c.lhs(), b), substitute(c.rhs(), b));
    case BoolKind::Not: return BoolExpr::negate(substitute(c.children()[0], b));
    case BoolKind::And:
    case BoolKind::Or: {
      std::vector<BoolExpr> cs;
      for (const auto& x : c.children()) cs.push_back(substitute(x, b));
      return c.kind() == BoolKind::And ? BoolExpr::conj(std::move(cs)) : BoolExpr::disj(std::move(cs));
    }
  }
  return c;
}

namespace {

void collect_vars(const Expr& e, std::set<std::string>& out);

void collect_vars(const BoolExpr& c, std::set<std::string>& out) {
  if (c.kind() == BoolKind::Cmp) {
    collect_vars(c.lhs(), out);
    collect_vars(c.rhs(), out);
  }
  for (const auto& x : c.children()) collect_vars(x, out);
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.kind() == ExprKind::Var) out.insert(e.name());
  if (e.kind() == ExprKind::Ite) collect_vars(e.cond(), out);
  for (const auto& a : e.args()) collect_vars(a, out);
}

}  // namespace

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_vars(e, out);
  return out;
}

std::set<std::string> free_vars(const BoolExpr& c) {
  std::set<std::string> out;
  collect_vars(c, out);
  return out;
}

bool contains_call(const Expr& e, const std::string& fn) {
  if (e.kind() == ExprKind::Call && (fn.empty() || e.name() == fn)) return true;
  if (e.kind() == ExprKind::Ite && contains_call(e.cond(), fn)) return true;
  for (const auto& a : e.args())
    if (contains_call(a, fn)) return true;
  return false;
}

bool contains_call(const BoolExpr& c, const std::string& fn) {
  if (c.kind() == BoolKind::Cmp) return contains_call(c.lhs(), fn) || contains_call(c.rhs(), fn);
  for (const auto& x : c.children())
    if (contains_call(x, fn)) return true;
  return false;
}

bool contains_kind(const Expr& e, ExprKind k) {
  if (e.kind() == k) return true;
  for (const auto& a : e.args())
    if (contains_kind(a, k)) return true;
  return false;
}

}  // namespace recsolve
