#pragma once

#include <map>
#include <string>
#include <vector>

#include "recsolve/harness.hpp"

namespace recsolve {

constexpr int kReportFormatVersion = 1;

struct ReportMeta {
  std::string command;
  std::string method;
  bool domsplit = false;
  uint64_t seed = 0;
  int repeat = 0;
  bool verify = false;
};

struct Summary {
  size_t total = 0;
  std::map<std::string, size_t> classes;                            // classification -> count
  std::map<std::string, std::map<std::string, size_t>> by_category;  // category -> classification -> count
  std::map<std::string, size_t> verification;                       // status -> count
  size_t internal_errors = 0;
};

Summary summarize(const std::vector<BenchmarkResult>& results);

// Header line, one line per benchmark, summary line. Timing lives only under
// "timings" keys.
std::string to_jsonl(const std::vector<BenchmarkResult>& results, const ReportMeta& meta);
std::string to_csv(const std::vector<BenchmarkResult>& results);

// Drops every "timings" member; used to compare runs.
std::string strip_timings(const std::string& jsonl);

}  // namespace recsolve
