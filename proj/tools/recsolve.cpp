// recsolve: guess and verify closed forms of recurrence systems.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "recsolve/dsl.hpp"
#include "recsolve/harness.hpp"
#include "recsolve/report.hpp"

using namespace recsolve;
namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 1;
constexpr int kInternal = 2;

struct Options {
  std::string method = "lasso";
  bool domsplit = false;
  uint64_t seed = 1;
  size_t samples = 100;
  std::string bound = "auto";
  double epsilon = 0.05;
  int folds = 2;
  std::string lambda_grid;
  int repeat = 2;
  bool verify = false;
  std::string solver;
  double smt_timeout = 10.0;
  std::string out;
  std::string csv;
  bool debug_smt = false;
  int jobs = 0;
  double auto_threshold = 0.999999;
  double gp_time = 180.0;
  double band = 8.0;
  bool real_encoding = false;
};

void add_run_flags(CLI::App* app, Options& o) {
  app->add_option("--method", o.method, "lasso, symreg or auto")->check(CLI::IsMember({"lasso", "symreg", "auto"}));
  app->add_flag("--domsplit", o.domsplit, "fit one piece per recursive case");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--samples", o.samples, "training samples per piece");
  app->add_option("--bound", o.bound, "sampling bound: auto or a positive integer");
  app->add_option("--epsilon", o.epsilon, "lasso coefficient pruning threshold");
  app->add_option("--folds", o.folds, "cross-validation folds")->check(CLI::Range(2, 100));
  app->add_option("--lambda-grid", o.lambda_grid, "LO:HI:COUNT, geometric");
  app->add_option("--repeat", o.repeat, "guess runs per benchmark, best kept")->check(CLI::Range(1, 1000));
  app->add_flag("--verify", o.verify, "check candidates with the SMT solver");
  app->add_option("--solver", o.solver, "solver command; {} stands for a query file");
  app->add_option("--smt-timeout", o.smt_timeout, "seconds per solver query");
  app->add_option("--out", o.out, "JSONL report path");
  app->add_option("--csv", o.csv, "CSV report path");
  app->add_flag("--debug-smt", o.debug_smt, "keep solver queries and replies");
  app->add_option("--jobs", o.jobs, "corpus workers, 0 for all cores");
  app->add_option("--auto-threshold", o.auto_threshold, "lasso score below which auto tries symreg");
  app->add_option("--gp-time", o.gp_time, "symbolic regression seconds per piece");
  app->add_option("--band", o.band, "ratio band for the Theta test");
  app->add_flag("--real-encoding", o.real_encoding, "Real-sorted SMT parameters with integrality constraints");
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> lambda_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("--lambda-grid expects LO:HI:COUNT");
  double lo = 0, hi = 0;
  long count = 0;
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    count = std::stol(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("--lambda-grid expects LO:HI:COUNT");
  }
  if (!(lo > 0) || !(hi >= lo) || count < 1) throw UsageError("--lambda-grid needs 0 < LO <= HI and COUNT >= 1");
  std::vector<double> out;
  for (long i = 0; i < count; ++i)
    out.push_back(count == 1 ? lo : lo * std::pow(hi / lo, double(i) / double(count - 1)));
  return out;
}

SolverConfig solver_config(const Options& o) {
  SolverConfig s;
  s.command = o.solver;
  s.timeout = o.smt_timeout;
  s.real_encoding = o.real_encoding;
  if (o.debug_smt) {
    fs::path base = o.out.empty() ? fs::current_path() : fs::absolute(o.out).parent_path();
    s.debug_dir = (base / "smt-debug").string();
    fs::create_directories(s.debug_dir);
  }
  return s;
}

RunConfig run_config(const Options& o) {
  RunConfig c;
  c.method = *parse_method(o.method);
  c.domsplit = o.domsplit;
  c.seed = o.seed;
  c.repeat = o.repeat;
  c.auto_threshold = o.auto_threshold;
  c.sample.n = o.samples;
  c.sample.seed = o.seed;
  if (o.bound != "auto") {
    try {
      size_t used = 0;
      int b = std::stoi(o.bound, &used);
      if (used != o.bound.size() || b < 1) throw std::invalid_argument("bound");
      c.sample.fixed_bound = b;
    } catch (const std::exception&) {
      throw UsageError("--bound expects auto or a positive integer");
    }
  }
  c.lasso.lasso.epsilon = o.epsilon;
  c.lasso.lasso.folds = o.folds;
  if (!o.lambda_grid.empty()) c.lasso.lasso.lambdas = lambda_grid(o.lambda_grid);
  c.symreg.gp.time_budget = o.gp_time;
  c.verify = o.verify;
  c.solver = solver_config(o);
  c.classify.band = o.band;
  c.jobs = o.jobs;
  return c;
}

void write_reports(const std::vector<BenchmarkResult>& results, const Options& o, const std::string& command) {
  ReportMeta meta{command, o.method, o.domsplit, o.seed, o.repeat, o.verify};
  std::string jsonl = to_jsonl(results, meta);
  if (o.out.empty()) {
    if (command == "corpus") std::cout << jsonl;
  } else {
    std::ofstream(o.out) << jsonl;
  }
  if (!o.csv.empty()) std::ofstream(o.csv) << to_csv(results);
}

void print_result(const BenchmarkResult& r) {
  std::cout << "benchmark: " << r.name << "\n";
  std::cout << "method: " << r.method << (r.domsplit ? " +domsplit" : "") << "\n";
  std::cout << "candidate: " << (r.candidate ? print_inline(*r.candidate) : "-") << "\n";
  std::cout << "score: " << r.score << "\n";
  if (r.verification) {
    std::cout << "verification: " << verdict_name(r.verification->verdict);
    if (!r.verification->counterexample.empty()) {
      std::cout << " at";
      for (const auto& [k, v] : r.verification->counterexample) std::cout << " " << k << "=" << v.get_str();
      std::cout << (r.verification->confirmed ? " (confirmed)" : " (unconfirmed)");
    }
    if (!r.verification->reason.empty()) std::cout << " (" << r.verification->reason << ")";
    if (!r.verification->offending.empty()) std::cout << " [" << r.verification->offending << "]";
    std::cout << "\n";
  }
  std::cout << "classification: " << classification_name(r.classification) << "\n";
  for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
}

int cmd_solve(const std::string& path, const Options& o) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
  BenchmarkFile file;
  try {
    file = load_benchmark(path);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kUsage;
  }
  BenchmarkResult r = run_benchmark(file, run_config(o));
  print_result(r);
  write_reports({r}, o, "solve");
  return r.internal_error ? kInternal : 0;
}

int cmd_corpus(const std::string& dir, const Options& o) {
  if (!fs::is_directory(dir)) throw UsageError("no such directory: " + dir);
  std::vector<BenchmarkResult> results = run_corpus(dir, run_config(o));
  write_reports(results, o, "corpus");
  Summary s = summarize(results);
  std::cerr << s.total << " benchmarks:";
  for (const auto& [k, v] : s.classes) std::cerr << " " << k << "=" << v;
  std::cerr << " internal-errors=" << s.internal_errors << "\n";
  return s.internal_errors == 0 ? 0 : kInternal;
}

int cmd_check(const std::string& path, const std::string& candidate, const Options& o) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
  BenchmarkFile file;
  PiecewiseClosedForm cand;
  try {
    file = load_benchmark(path);
    cand = parse_closed_form(candidate);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  BenchmarkResult r;
  r.name = file.name;
  r.category = file.category;
  r.method = "manual";
  r.seed = o.seed;
  r.candidate = cand;
  r.expect = file.expect;
  try {
    r.verification = verify(file.system, cand, solver_config(o));
  } catch (const std::exception& e) {
    r.errors.push_back(std::string("verify: ") + e.what());
    r.internal_error = true;
  }
  r.classification = classify(cand, file.expect, r.verification ? &*r.verification : nullptr,
                              file.system.entry_function());
  print_result(r);
  write_reports({r}, o, "check");
  return r.internal_error ? kInternal : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed forms for recurrence systems"};
  app.require_subcommand(1);
  Options opts;
  std::string target, candidate;

  auto* solve = app.add_subcommand("solve", "guess (and optionally verify) one benchmark file");
  solve->add_option("file", target, "benchmark file")->required();
  add_run_flags(solve, opts);

  auto* corpus = app.add_subcommand("corpus", "run every .rec file of a directory");
  corpus->add_option("dir", target, "benchmark directory")->required();
  add_run_flags(corpus, opts);

  auto* check = app.add_subcommand("check", "verify a hand-written closed form");
  check->add_option("file", target, "benchmark file")->required();
  check->add_option("--candidate", candidate, "closed form text")->required();
  check->add_option("--solver", opts.solver, "solver command; {} stands for a query file");
  check->add_option("--smt-timeout", opts.smt_timeout, "seconds per solver query");
  check->add_flag("--debug-smt", opts.debug_smt, "keep solver queries and replies");
  check->add_option("--out", opts.out, "JSONL report path");
  check->add_flag("--real-encoding", opts.real_encoding, "Real-sorted SMT parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*solve) return cmd_solve(target, opts);
    if (*corpus) return cmd_corpus(target, opts);
    return cmd_check(target, candidate, opts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
