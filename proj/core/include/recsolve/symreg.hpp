#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "recsolve/linear.hpp"
#include "recsolve/sampler.hpp"

namespace recsolve {

enum class GpOp : uint8_t {
  Const, Var,
  Add, Sub, Max, Mul, Div, Pow,
  Floor, Ceil, Square, Cube, Log2, Exp2, Fact
};

int gp_arity(GpOp op);
const char* gp_name(GpOp op);

struct GpNode {
  GpOp op = GpOp::Const;
  int var = 0;
  double value = 0.0;
};

// Prefix order.
using GpTree = std::vector<GpNode>;

struct OperatorSet {
  std::vector<GpOp> binary;
  std::vector<GpOp> unary;

  int cost(GpOp op) const;
  bool allows(GpOp op) const;

  static OperatorSet full();
  // {+, *, 2^(.)}
  static OperatorSet exp_sum();
};

int complexity(const GpTree& t, const OperatorSet& ops);
size_t subtree_end(const GpTree& t, size_t i);

// Column-major inputs: cols[v][row].
struct GpData {
  std::vector<std::vector<double>> cols;
  std::vector<double> y;

  size_t rows() const { return y.size(); }
};

GpData make_gp_data(const std::vector<Point>& inputs, const std::vector<double>& y, size_t nvars);

// NaN where the expression is undefined: log2 of a non-positive value,
// division by zero, factorial outside the naturals, overflow past 2^512.
std::vector<double> gp_eval(const GpTree& t, const GpData& d);
// Mean squared error; infinite if any row is undefined.
double gp_loss(const GpTree& t, const GpData& d);

Expr gp_to_expr(const GpTree& t, const std::vector<std::string>& params);

GpTree random_tree(const OperatorSet& ops, size_t nvars, std::mt19937_64& rng, int max_depth);

struct GPConfig {
  int populations = 45;
  int population_size = 33;
  int iterations = 40;
  uint64_t seed = 1;
  double time_budget = 180.0;  // seconds per subdomain
  int max_complexity = 30;
  int tournament = 3;
  double p_crossover = 0.6;
  double p_mutation = 0.3;
  double p_constant = 0.1;
  int migration_interval = 5;
  int optimize_top = 2;  // individuals per island sent to constant optimization each iteration
  int max_const_evals = 200;
  int threads = 0;  // 0: hardware concurrency
};

struct FrontEntry {
  GpTree tree;
  double loss = 0.0;
  int complexity = 0;
};

struct ParetoFront {
  std::vector<FrontEntry> entries;  // increasing complexity, strictly decreasing loss
  bool budget_exhausted = false;
  int iterations_run = 0;
};

ParetoFront evolve(const GpData& d, const OperatorSet& ops, const GPConfig& cfg);

// Nelder-Mead over the constant leaves; never returns a worse tree.
GpTree optimize_constants(const GpTree& t, const GpData& d, int max_evals = 200);

struct SymbolicConfig {
  GPConfig gp;
  OperatorSet ops = OperatorSet::full();
  double rational_tol = 1e-4;
};

struct SymbolicPieceReport {
  BoolExpr domain;
  size_t case_index = 0;
  int bound = 0;
  size_t train_rows = 0;
  size_t test_rows = 0;
  size_t front_size = 0;
  int iterations_run = 0;
  bool budget_exhausted = false;
  int complexity = 0;
  std::string error;
};

struct SymbolicGuess {
  PiecewiseClosedForm cf;
  std::vector<SymbolicPieceReport> pieces;
  std::vector<ParetoFront> fronts;  // one per fitted piece
  double sample_seconds = 0.0;
  double fit_seconds = 0.0;
};

SymbolicGuess guess_symbolic(const RecurrenceSystem& sys, const std::string& func, const SymbolicConfig& cfg,
                             const SampleConfig& scfg, bool domsplit);

}  // namespace recsolve
