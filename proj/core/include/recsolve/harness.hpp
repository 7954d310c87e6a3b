#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recsolve/dsl.hpp"
#include "recsolve/linear.hpp"
#include "recsolve/smt.hpp"
#include "recsolve/symreg.hpp"

namespace recsolve {

enum class Method { Lasso, Symreg, Auto };
const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& s);

enum class Classification { Exact, Theta, ExpTheta, NonTrivial, None };
const char* classification_name(Classification c);

struct ClassifyConfig {
  int grid_bound = 30;
  size_t grid_cap = 200000;  // the bound shrinks until the grid fits
  double band = 8.0;         // ratio band [1/band, band]
  int ray_lo = 4;            // t = 2^ray_lo .. 2^ray_hi
  int ray_hi = 20;
  int ray_bases = 3;
  uint64_t seed = 17;
};

struct RunConfig {
  Method method = Method::Lasso;
  bool domsplit = false;
  uint64_t seed = 1;
  int repeat = 2;
  double auto_threshold = 0.999999;
  SampleConfig sample;
  LinearConfig lasso;
  SymbolicConfig symreg;
  bool verify = false;
  SolverConfig solver;
  ClassifyConfig classify;
  int jobs = 0;  // corpus workers; 0: logical cores
};

struct StageTimes {
  double sample = 0.0;
  double fit = 0.0;
  double verify = 0.0;
};

struct BenchmarkResult {
  std::string name;
  std::string category;
  bool reconstructed = false;
  std::string method;  // method that produced the kept candidate
  bool domsplit = false;
  uint64_t seed = 0;
  std::optional<PiecewiseClosedForm> candidate;
  std::optional<PiecewiseClosedForm> expect;
  double score = 0.0;
  std::optional<VerificationResult> verification;
  Classification classification = Classification::None;
  StageTimes times;
  std::vector<std::string> errors;  // "stage: message"
  bool internal_error = false;
};

// Probe-grid equality, then ray tests in log space. Disproved with a
// confirmed counterexample rules out Exact.
Classification classify(const PiecewiseClosedForm& cand, const std::optional<PiecewiseClosedForm>& expect,
                        const VerificationResult* verification, const FuncDef& f, const ClassifyConfig& cfg = {});

// log2 |e| and the sign of e at env, without overflow; nullopt where undefined.
struct LogValue {
  int sign = 0;  // -1, 0, 1
  double log2 = 0.0;
};
std::optional<LogValue> log_eval(const Expr& e, const Env& env);
std::optional<LogValue> log_eval(const PiecewiseClosedForm& cf, const Env& env);

BenchmarkResult run_benchmark(const BenchmarkFile& file, const RunConfig& cfg);
BenchmarkResult run_benchmark_file(const std::string& path, const RunConfig& cfg);

// Every ".rec" file in dir, sorted by file name; results in the same order.
std::vector<BenchmarkResult> run_corpus(const std::string& dir, const RunConfig& cfg);

std::vector<std::string> corpus_files(const std::string& dir);

}  // namespace recsolve
