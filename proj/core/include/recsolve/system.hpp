#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recsolve/expr.hpp"

namespace recsolve {

struct CaseDef {
  BoolExpr guard;
  Expr body;
};

struct FuncDef {
  std::string name;
  std::vector<std::string> params;
  BoolExpr pre;
  std::vector<CaseDef> cases;

  size_t arity() const { return params.size(); }
};

struct RecurrenceSystem {
  std::vector<FuncDef> functions;  // definition order
  std::string entry;

  const FuncDef* find(const std::string& name) const;
  const FuncDef& entry_function() const;
};

struct Piece {
  BoolExpr domain;
  Expr body;
  double score = 0.0;
  bool exact = true;  // every constant came from a successful rationalization
};

struct PiecewiseClosedForm {
  std::vector<Piece> pieces;
  double score = 0.0;

  bool empty() const { return pieces.empty(); }
  // First piece whose domain holds; the last piece is the fallback.
  Num eval(const Env& env, const EvalOptions& opt = {}) const;
  // Nested if-then-else over the piece domains.
  Expr as_expr() const;
  bool exact() const;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural checks: call targets, arities, call-free guards, base cases, entry.
void validate(const RecurrenceSystem& sys);

// Samples points of the precondition on [0, bound]^m and returns the first one
// that satisfies no guard, if any.
std::optional<Env> find_uncovered_point(const FuncDef& f, int bound = 12, size_t max_points = 4000);
void check_totality(const RecurrenceSystem& sys);

Env make_env(const std::vector<std::string>& params, const std::vector<mpz_class>& point);

bool structurally_equal(const RecurrenceSystem& a, const RecurrenceSystem& b);
bool structurally_equal(const PiecewiseClosedForm& a, const PiecewiseClosedForm& b);

}  // namespace recsolve
