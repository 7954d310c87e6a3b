#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "recsolve/evaluator.hpp"

namespace recsolve {

struct SampleConfig {
  size_t n = 100;
  std::vector<int> bounds = {20, 10, 5, 3};
  uint64_t seed = 1;
  size_t rejection_cap = 100000;  // consecutive misses tolerated per required sample
  size_t test_size = 30;
  double time_limit = 2.0;  // seconds, sampling plus evaluation per bound
  int fixed_bound = 0;      // > 0 disables the ladder
};

enum class SampleErrorKind { EmptyDomain, InsufficientSamples };

class SampleError : public std::runtime_error {
 public:
  SampleError(SampleErrorKind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  SampleErrorKind kind() const { return kind_; }

 private:
  SampleErrorKind kind_;
};

struct SampleSet {
  std::vector<Point> points;
  bool shortfall = false;
};

// Uniform draws from [0,bound]^m kept iff they satisfy pre; deduplicated.
// stream selects an independent RNG stream derived from cfg.seed.
SampleSet sample_inputs(const BoolExpr& pre, const std::vector<std::string>& params, int bound,
                        const SampleConfig& cfg, uint64_t stream = 0, const std::set<Point>* exclude = nullptr,
                        size_t count = 0);
SampleSet sample_inputs(const BoolExpr& pre, const std::vector<std::string>& params, const SampleConfig& cfg);

struct BoundChoice {
  int bound = 0;
  bool fallback = false;    // the smallest bound was taken without meeting the limit
  bool all_failed = false;  // every sample errored at the chosen bound
};

// domain defaults to the precondition restricted to positive coordinates.
BoundChoice choose_bound(const RecurrenceSystem& sys, const std::string& func, const SampleConfig& cfg);
BoundChoice choose_bound(const RecurrenceSystem& sys, const std::string& func, const BoolExpr& domain,
                         const SampleConfig& cfg, Evaluator* ev = nullptr);

struct Subdomain {
  BoolExpr constraint;
  size_t case_index = 0;
};

std::vector<Subdomain> split_domains(const FuncDef& f);

// Precondition conjoined with x_i > 0 for every parameter.
BoolExpr positive_domain(const FuncDef& f);

// Regression domains: each case subdomain conjoined with the precondition when
// splitting, otherwise the single positive domain.
std::vector<Subdomain> regression_domains(const FuncDef& f, bool domsplit);

struct Splits {
  std::vector<Point> train;
  std::vector<int> fold_of;  // fold index per training point
  std::vector<Point> test;
  bool test_held_out = false;
  bool no_test = false;
};

Splits make_splits(const std::vector<Point>& samples, const SampleConfig& cfg, int folds,
                   const std::vector<Point>& fresh_test = {});

// Sampled and evaluated data for one regression domain.
struct Dataset {
  std::vector<std::string> params;
  BoolExpr domain;
  int bound = 0;
  BoundChoice choice;
  std::vector<Point> train;
  std::vector<double> train_y;
  std::vector<int> fold_of;
  std::vector<Point> test;
  std::vector<double> test_y;
  bool shortfall = false;
  bool test_held_out = false;
  bool no_test = false;
  bool floored = false;
  size_t failures = 0;  // inputs whose evaluation errored
};

Dataset build_dataset(const RecurrenceSystem& sys, const std::string& func, const BoolExpr& domain,
                      const SampleConfig& cfg, int folds, uint64_t stream = 0);

}  // namespace recsolve
