#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "recsolve/evaluator.hpp"
#include "recsolve/system.hpp"

namespace recsolve {

struct SolverConfig {
  // Shell command; "{}" is replaced by the path of a query file, otherwise the
  // query goes to standard input. Empty: $RECSOLVE_SOLVER, then "z3 -in".
  std::string command;
  double timeout = 10.0;  // seconds per query
  std::string debug_dir;  // queries and replies are saved here when set
  // Real-sorted parameters plus integrality constraints instead of Int sorts.
  bool real_encoding = false;
};

std::string resolve_solver_command(const std::string& configured);

class SolverNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedSolverOutput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverStatus { Sat, Unsat, Unknown, Timeout, Crash };

struct SolverReply {
  SolverStatus status = SolverStatus::Unknown;
  std::string output;
  int exit_code = 0;
  double seconds = 0.0;
};

// One solver process per call; killed at the timeout.
SolverReply run_solver(const std::string& smtlib, const SolverConfig& cfg, const std::string& label = "query");

// Constant-base exponential c^g appearing in an encoded formula.
struct PowTerm {
  std::string fn;
  mpq_class base;
  Expr exponent;
  std::string exponent_smt;
};

struct SmtJob {
  std::string logic = "ALL";
  std::string func;
  std::vector<std::string> params;
  std::map<std::string, std::string> names;  // parameter -> SMT symbol
  std::vector<std::string> declarations;
  std::vector<std::string> axioms;  // recursive power definitions
  std::vector<std::string> side;    // quotient bounds and integrality, outside the negation
  std::string assertion;            // pre and not Formula
  std::vector<PowTerm> pow_terms;
  bool real_encoding = false;
  std::string command;
  double timeout = 10.0;
  std::string debug_dir;

  // Full SMT-LIB2 script. Without quantifiers the power axioms are replaced by
  // their ground instances at the exponents in pow_terms plus `facts`.
  std::string text(bool quantified = true, const std::vector<std::string>& facts = {}) const;
};

class SmtUnsupported : public std::runtime_error {
 public:
  SmtUnsupported(std::vector<std::string> kinds, std::string offending)
      : std::runtime_error("unsupported: " + offending), kinds_(std::move(kinds)), offending_(std::move(offending)) {}
  const std::vector<std::string>& kinds() const { return kinds_; }
  const std::string& offending() const { return offending_; }

 private:
  std::vector<std::string> kinds_;
  std::string offending_;
};

enum class Verdict { Proved, Disproved, Unknown, Unsupported };
const char* verdict_name(Verdict v);

struct VerificationResult {
  Verdict verdict = Verdict::Unknown;
  std::map<std::string, mpz_class> counterexample;  // Disproved
  bool confirmed = false;                            // Disproved: the evaluator reproduces the violation
  std::string reason;                                // Unknown: "timeout", "solver-unknown" or "solver-crash"
  std::vector<std::string> unsupported;              // Unsupported: construct names
  std::string offending;                             // Unsupported: printed subterm
  int solver_calls = 0;
  double seconds = 0.0;
};

bool contains_calls(const Expr& e, const std::string& func);

// Inlines cand at every call to f whose argument provably satisfies f.pre
// under f.pre and phi. Other calls are left in place.
Expr replace_calls(const Expr& e, const FuncDef& f, const PiecewiseClosedForm& cand, const BoolExpr& phi,
                   const SolverConfig& cfg = {}, int* solver_calls = nullptr);

// Validity of premise => goal over integer parameters; nullopt when undecided.
std::optional<bool> entails(const std::vector<std::string>& params, const BoolExpr& premise, const BoolExpr& goal,
                            const SolverConfig& cfg = {}, int* solver_calls = nullptr);

// Cases of f must be call-free. Throws SmtUnsupported.
SmtJob encode(const FuncDef& f, const PiecewiseClosedForm& cand, const SolverConfig& cfg = {});

// Disproved counterexamples are minimal in L1 norm among confirmed ones the solver finds.
VerificationResult check(const SmtJob& job, const RecurrenceSystem& sys, const PiecewiseClosedForm& cand);

VerificationResult verify(const RecurrenceSystem& sys, const PiecewiseClosedForm& cand, const SolverConfig& cfg = {});

}  // namespace recsolve
