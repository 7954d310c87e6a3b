#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace recsolve {

enum class ExprKind {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Floor,
  Ceil,
  Log2,
  Factorial,
  Max,
  Min,
  Call,
  Ite,  // internal: produced when piecewise candidates are inlined
};

enum class BoolKind { Cmp, And, Or, Not, True };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

const char* kind_name(ExprKind k);
const char* cmp_symbol(CmpOp op);

struct ExprNode;
struct BoolNode;
class BoolExpr;

class Expr {
 public:
  Expr();  // constant 0

  static Expr constant(const mpq_class& v);
  static Expr constant(long v);
  static Expr var(const std::string& name);
  static Expr binary(ExprKind k, const Expr& a, const Expr& b);
  static Expr unary(ExprKind k, const Expr& a);
  static Expr call(const std::string& fn, std::vector<Expr> args);
  static Expr ite(const BoolExpr& c, const Expr& a, const Expr& b);

  ExprKind kind() const;
  const mpq_class& value() const;  // Const only
  const std::string& name() const;  // Var and Call
  const std::vector<Expr>& args() const;
  const Expr& arg(size_t i) const { return args()[i]; }
  const BoolExpr& cond() const;  // Ite only

  bool is_const() const { return kind() == ExprKind::Const; }
  bool is_const(long v) const;
  bool is_var() const { return kind() == ExprKind::Var; }

  const ExprNode* node() const { return n_.get(); }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : n_(std::move(n)) {}
  std::shared_ptr<const ExprNode> n_;
};

class BoolExpr {
 public:
  BoolExpr();  // true

  static BoolExpr truth();
  static BoolExpr falsity();  // not true
  static BoolExpr cmp(CmpOp op, const Expr& a, const Expr& b);
  static BoolExpr conj(std::vector<BoolExpr> cs);
  static BoolExpr disj(std::vector<BoolExpr> cs);
  static BoolExpr negate(const BoolExpr& c);

  BoolKind kind() const;
  CmpOp op() const;
  const Expr& lhs() const;
  const Expr& rhs() const;
  const std::vector<BoolExpr>& children() const;

  bool is_true() const { return kind() == BoolKind::True; }
  bool is_false() const;

  const BoolNode* node() const { return n_.get(); }

 private:
  explicit BoolExpr(std::shared_ptr<const BoolNode> n) : n_(std::move(n)) {}
  std::shared_ptr<const BoolNode> n_;
};

struct ExprNode {
  ExprKind kind;
  mpq_class value;
  std::string name;
  std::vector<Expr> args;
  std::vector<BoolExpr> conds;
};

struct BoolNode {
  BoolKind kind;
  CmpOp op = CmpOp::Eq;
  std::vector<Expr> terms;
  std::vector<BoolExpr> children;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& a, const Expr& b);
Expr floor(const Expr& a);
Expr ceil(const Expr& a);
Expr log2(const Expr& a);
Expr factorial(const Expr& a);
Expr max(const Expr& a, const Expr& b);
Expr min(const Expr& a, const Expr& b);

BoolExpr operator&&(const BoolExpr& a, const BoolExpr& b);
BoolExpr operator||(const BoolExpr& a, const BoolExpr& b);
BoolExpr operator!(const BoolExpr& a);

// Structural total order; 0 iff structurally equal.
int compare(const Expr& a, const Expr& b);
int compare(const BoolExpr& a, const BoolExpr& b);
inline bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }
inline bool operator!=(const Expr& a, const Expr& b) { return compare(a, b) != 0; }
inline bool operator<(const Expr& a, const Expr& b) { return compare(a, b) < 0; }
inline bool operator==(const BoolExpr& a, const BoolExpr& b) { return compare(a, b) == 0; }
inline bool operator!=(const BoolExpr& a, const BoolExpr& b) { return compare(a, b) != 0; }

size_t node_count(const Expr& e);

// ---- numerics -------------------------------------------------------------

enum class EvalErrorKind {
  DivisionByZero,
  Log2Domain,
  FactorialDomain,
  PowDomain,
  Overflow,
  UnboundVariable,
  CallInGround,
  NoMatchingCase,
  BudgetExceeded,
};

const char* error_name(EvalErrorKind k);

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind_(k) {}
  EvalErrorKind kind() const { return kind_; }

 private:
  EvalErrorKind kind_;
};

// Exact rational when possible, double otherwise.
struct Num {
  bool exact = true;
  mpq_class q;
  double d = 0.0;

  Num() = default;
  explicit Num(const mpq_class& v) : exact(true), q(v) {}
  explicit Num(long v) : exact(true), q(v) {}
  static Num real(double v);

  double to_double() const;
  bool is_integer() const;  // exact integer, or a double with integral value
  mpz_class floor_int() const;
  std::string str() const;
};

constexpr unsigned kOverflowBits = 512;

Num num_add(const Num& a, const Num& b);
Num num_sub(const Num& a, const Num& b);
Num num_mul(const Num& a, const Num& b);
Num num_div(const Num& a, const Num& b, bool guarded = false);
Num num_pow(const Num& a, const Num& b);
Num num_floor(const Num& a);
Num num_ceil(const Num& a);
Num num_log2(const Num& a, bool guarded = false);
Num num_factorial(const Num& a);
int num_cmp(const Num& a, const Num& b);
bool num_eq(const Num& a, const Num& b);

using Env = std::map<std::string, mpz_class>;

struct EvalOptions {
  // Guarded feature semantics: log2(x) = 0 for x < 1 and x/0 = 0.
  bool guarded = false;
};

Num eval_ground(const Expr& e, const Env& env, const EvalOptions& opt = {});
bool eval_bool(const BoolExpr& c, const Env& env, const EvalOptions& opt = {});

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);
BoolExpr substitute(const BoolExpr& c, const std::map<std::string, Expr>& bindings);

std::set<std::string> free_vars(const Expr& e);
std::set<std::string> free_vars(const BoolExpr& c);

bool contains_call(const Expr& e, const std::string& fn = "");
bool contains_call(const BoolExpr& c, const std::string& fn = "");
bool contains_kind(const Expr& e, ExprKind k);

// Convert a double to the exact rational it represents.
mpq_class exact_rational(double v);

}  // namespace recsolve
