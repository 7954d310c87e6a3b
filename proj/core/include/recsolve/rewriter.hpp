#pragma once

#include <string>
#include <vector>

#include "recsolve/system.hpp"

namespace recsolve {

struct SimplifyOptions {
  // Variables range over the naturals; enables bound reasoning such as
  // x > 0 and not (x = 0) -> x > 0.
  bool naturals = true;
  int max_passes = 20;
  // Products expanding past this many terms are kept factored.
  size_t max_terms = 256;
};

struct SimplifyStats {
  int passes = 0;
  bool fixpoint = false;
};

Expr simplify(const Expr& e, const SimplifyOptions& opt = {}, SimplifyStats* stats = nullptr);
BoolExpr simplify(const BoolExpr& c, const SimplifyOptions& opt = {}, SimplifyStats* stats = nullptr);

// Node kinds with no SMT encoding: "Factorial", "Log2", "Pow", "InexactConstant".
std::vector<std::string> contains_unsupported(const Expr& e);
std::vector<std::string> contains_unsupported(const PiecewiseClosedForm& cf);

// True when e evaluates to an integer at every natural point where it is defined.
bool integer_valued(const Expr& e);

}  // namespace recsolve
