#include <benchmark/benchmark.h>

#include "recsolve/dsl.hpp"
#include "recsolve/evaluator.hpp"
#include "recsolve/linear.hpp"
#include "recsolve/rewriter.hpp"
#include "recsolve/sampler.hpp"
#include "recsolve/symreg.hpp"

using namespace recsolve;

namespace {

BenchmarkFile load(const std::string& name) {
  return load_benchmark(std::string(RECSOLVE_CORPUS_DIR) + "/" + name + ".rec");
}

// Lasso with cross-validation on one tier of a two-variable catalog.
void BM_CvLasso(benchmark::State& st) {
  Catalog cat = catalog({"x", "y"});
  const FeatureSet& fs = cat.at(static_cast<Tier>(st.range(0)));
  SampleConfig sc;
  auto pts = sample_inputs(parse_bool("x > 0 and y > 0"), {"x", "y"}, 20, sc).points;
  std::vector<double> y;
  for (const auto& p : pts) y.push_back(double(3 * p[0].get_si() * p[1].get_si() - 2 * p[1].get_si() + 7));
  TrainingSet t = build_training_set(fs, {"x", "y"}, pts, y);
  for (auto _ : st) benchmark::DoNotOptimize(cv_lasso(t));
  st.counters["features"] = double(fs.size());
}
BENCHMARK(BM_CvLasso)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_GuessLinear(benchmark::State& st) {
  BenchmarkFile b = load(st.range(0) ? "merge" : "nested");
  for (auto _ : st)
    benchmark::DoNotOptimize(guess_linear(b.system, b.system.entry, LinearConfig{}, SampleConfig{}, true));
}
BENCHMARK(BM_GuessLinear)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Fresh evaluator per iteration so the memo starts empty.
void BM_EvaluateFresh(benchmark::State& st) {
  BenchmarkFile b = load("mccarthy91");
  const long x = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(Evaluator(b.system).try_eval(b.system.entry, {mpz_class(x)}));
}
BENCHMARK(BM_EvaluateFresh)->Arg(10)->Arg(100)->Arg(1000);

void BM_Simplify(benchmark::State& st) {
  const Expr e = parse_expr("(x + y)^3 - x^3 - 3*x^2*y - 3*x*y^2 + 2^(x+1) - 2*2^x + y^3");
  for (auto _ : st) benchmark::DoNotOptimize(simplify(e));
}
BENCHMARK(BM_Simplify);

void BM_GpEval(benchmark::State& st) {
  GpData d;
  d.cols.resize(2);
  for (int x = 0; x < 20; ++x)
    for (int y = 0; y < 20; ++y) {
      d.cols[0].push_back(x);
      d.cols[1].push_back(y);
      d.y.push_back(x * y + x);
    }
  GpTree t = {{GpOp::Add}, {GpOp::Mul}, {GpOp::Var, 0}, {GpOp::Var, 1}, {GpOp::Var, 0}};
  for (auto _ : st) benchmark::DoNotOptimize(gp_loss(t, d));
}
BENCHMARK(BM_GpEval);

}  // namespace
BENCHMARK_MAIN();
