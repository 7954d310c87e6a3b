#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "recsolve/dsl.hpp"
#include "recsolve/harness.hpp"
#include "recsolve/report.hpp"

using namespace recsolve;
using nlohmann::json;

namespace {

const char* kMerge =
    "def merge(x,y) pre x>=0 and y>=0 { case x=0 or y=0 -> 0 "
    "case x>0 and y>0 -> max(merge(x-1,y)+1, merge(x,y-1)+1) } entry merge "
    "expect piece x>0 and y>0 -> x+y-1 piece true -> 0 category max-heavy";

const char* kEq1 =
    "def f(x) pre x>=0 { case x=0 -> 0 case x>0 -> f(f(x-1))+1 } entry f expect piece true -> x category nested";

bool have_solver() {
  return std::system("command -v z3 >/dev/null 2>&1") == 0 || std::getenv("RECSOLVE_SOLVER") != nullptr;
}

#define REQUIRE_SOLVER() \
  if (!have_solver()) GTEST_SKIP() << "no SMT solver on PATH"

PiecewiseClosedForm cf(const std::string& s) { return parse_closed_form(s); }

}  // namespace

TEST(Classify, MaxIsThetaOfSum) {
  BenchmarkFile m = parse(kMerge);
  const FuncDef& f = m.system.entry_function();
  EXPECT_EQ(classify(cf("max(x,y)"), cf("x+y"), nullptr, f), Classification::Theta);
}

TEST(Classify, GlobalMergeCandidateIsNotTheta) {
  BenchmarkFile m = parse(kMerge);
  Classification c = classify(cf("x+y-1"), m.expect, nullptr, m.system.entry_function());
  EXPECT_NE(c, Classification::Exact);
  EXPECT_NE(c, Classification::Theta);
  EXPECT_EQ(c, Classification::NonTrivial);
}

TEST(Classify, ExponentialOfSquareIsExpTheta) {
  BenchmarkFile m = parse(kEq1);
  const FuncDef& f = m.system.entry_function();
  EXPECT_EQ(classify(cf("2^(2*x)"), cf("2^x"), nullptr, f), Classification::ExpTheta);
  EXPECT_EQ(classify(cf("3*2^x"), cf("2^x"), nullptr, f), Classification::Theta);
}

TEST(Classify, WithoutExpect) {
  BenchmarkFile m = parse(kEq1);
  const FuncDef& f = m.system.entry_function();
  VerificationResult proved;
  proved.verdict = Verdict::Proved;
  EXPECT_EQ(classify(cf("x"), std::nullopt, &proved, f), Classification::Exact);
  EXPECT_EQ(classify(cf("x"), std::nullopt, nullptr, f), Classification::NonTrivial);
  EXPECT_EQ(classify(cf("5"), std::nullopt, nullptr, f), Classification::None);
  EXPECT_EQ(classify(PiecewiseClosedForm{}, cf("x"), nullptr, f), Classification::None);
}

TEST(Classify, ConfirmedCounterexampleRulesOutExact) {
  BenchmarkFile m = parse(kEq1);
  VerificationResult refuted;
  refuted.verdict = Verdict::Disproved;
  refuted.confirmed = true;
  EXPECT_NE(classify(cf("x"), cf("x"), &refuted, m.system.entry_function()), Classification::Exact);
}

TEST(LogEval, MatchesExactWhereItFits) {
  Env env{{"x", 40}, {"y", 7}};
  for (const char* s : {"2^x-x*y", "fact(y)*3/4", "max(x,y)-min(x,y)", "floor(x/3)+log2(x)"}) {
    auto lv = log_eval(parse_expr(s), env);
    ASSERT_TRUE(lv.has_value()) << s;
    double v = eval_ground(parse_expr(s), env).to_double();
    EXPECT_EQ(lv->sign, v > 0 ? 1 : -1) << s;
    EXPECT_NEAR(lv->log2, std::log2(std::fabs(v)), 1e-9) << s;
  }
}

TEST(LogEval, SurvivesOverflow) {
  Env env{{"x", 1 << 20}};
  auto a = log_eval(parse_expr("(5^(x+1)-2^(x+1))/3"), env);
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->sign, 1);
  EXPECT_NEAR(a->log2, (double(1 << 20) + 1) * std::log2(5.0) - std::log2(3.0), 1e-3);
  auto f = log_eval(parse_expr("fact(x)"), env);
  ASSERT_TRUE(f.has_value());
  EXPECT_NEAR(f->log2, std::lgamma(double(1 << 20) + 1) / std::log(2.0), 1e-3);
  EXPECT_FALSE(log_eval(parse_expr("2^x-2^x"), env).has_value());
}

TEST(Report, EmptyHasZeroCounts) {
  std::string text = to_jsonl({}, ReportMeta{});
  std::vector<json> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(json::parse(l));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["format-version"], 1);
  EXPECT_EQ(lines[1]["type"], "summary");
  EXPECT_EQ(lines[1]["total"], 0);
  for (auto& [k, v] : lines[1]["classifications"].items()) EXPECT_EQ(v, 0) << k;
  EXPECT_NE(to_csv({}).find("format-version: 1"), std::string::npos);
}

TEST(Report, SchemaAndTotals) {
  BenchmarkResult a;
  a.name = "nested";
  a.category = "nested";
  a.method = "lasso";
  a.candidate = cf("x");
  a.score = 1.0;
  a.verification = VerificationResult{};
  a.verification->verdict = Verdict::Proved;
  a.classification = Classification::Exact;
  a.times.fit = 0.25;
  BenchmarkResult b = a;
  b.name = "merge";
  b.category = "max-heavy";
  b.verification.reset();
  b.classification = Classification::NonTrivial;

  std::string text = to_jsonl({a, b}, ReportMeta{"corpus", "lasso", false, 1, 2, true});
  std::istringstream in(text);
  std::vector<json> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(json::parse(l));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1]["classification"], "exact");
  EXPECT_EQ(lines[1]["verification"]["status"], "proved");
  EXPECT_EQ(lines[1]["candidate"], "x");
  EXPECT_EQ(lines[1]["timings"]["fit"], 0.25);
  EXPECT_EQ(lines[2]["verification"]["status"], "skipped");
  size_t sum = 0;
  for (auto& [k, v] : lines[3]["classifications"].items()) sum += v.get<size_t>();
  EXPECT_EQ(sum, lines[3]["total"].get<size_t>());
  EXPECT_EQ(lines[3]["by_category"]["nested"]["exact"], 1);

  std::string stripped = strip_timings(text);
  EXPECT_EQ(stripped.find("timings"), std::string::npos);
  b.times.sample = 9.0;
  EXPECT_EQ(strip_timings(to_jsonl({a, b}, ReportMeta{"corpus", "lasso", false, 1, 2, true})), stripped);
}

TEST(RunBenchmark, WorkedExampleIsProvedExact) {
  REQUIRE_SOLVER();
  RunConfig cfg;
  cfg.verify = true;
  BenchmarkResult r = run_benchmark(parse(kEq1), cfg);
  ASSERT_TRUE(r.candidate.has_value()) << (r.errors.empty() ? "" : r.errors[0]);
  ASSERT_EQ(r.candidate->pieces.size(), 1u);
  EXPECT_EQ(print(r.candidate->pieces[0].body), "1 * x");
  ASSERT_TRUE(r.verification.has_value());
  EXPECT_EQ(r.verification->verdict, Verdict::Proved);
  EXPECT_EQ(r.classification, Classification::Exact);
  EXPECT_FALSE(r.internal_error);
}

TEST(RunBenchmark, MergeNeedsDomainSplit) {
  RunConfig cfg;
  BenchmarkResult flat = run_benchmark(parse(kMerge), cfg);
  ASSERT_TRUE(flat.candidate.has_value());
  ASSERT_EQ(flat.candidate->pieces.size(), 1u);
  for (long x = 0; x < 6; ++x)
    for (long y = 0; y < 6; ++y)
      EXPECT_TRUE(num_eq(flat.candidate->eval({{"x", x}, {"y", y}}), Num(x + y - 1))) << print_inline(*flat.candidate);
  EXPECT_EQ(flat.classification, Classification::NonTrivial);
  cfg.domsplit = true;
  BenchmarkResult split = run_benchmark(parse(kMerge), cfg);
  ASSERT_TRUE(split.candidate.has_value());
  EXPECT_EQ(split.classification, Classification::Exact) << print_inline(*split.candidate);
}

TEST(RunBenchmark, ParseFailureIsRecorded) {
  auto dir = std::filesystem::temp_directory_path() / "recsolve_bad_corpus";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "broken.rec") << "def f(x) pre { }";
  }
  auto res = run_corpus(dir.string(), RunConfig{});
  ASSERT_EQ(res.size(), 1u);
  EXPECT_TRUE(res[0].internal_error);
  EXPECT_EQ(res[0].name, "broken");
  std::filesystem::remove(dir / "broken.rec");
  EXPECT_TRUE(run_corpus(dir.string(), RunConfig{}).empty());
  std::filesystem::remove_all(dir);
}
