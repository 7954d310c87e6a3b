#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "recsolve/system.hpp"

namespace recsolve {

// One ".rec" file.
struct BenchmarkFile {
  std::string name;  // file stem, filled by load_benchmark
  RecurrenceSystem system;
  std::optional<PiecewiseClosedForm> expect;
  std::string category;
  std::map<std::string, std::string> meta;  // "# key: value" header lines

  bool reconstructed() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int col);
  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int line_;
  int col_;
};

const std::vector<std::string>& known_categories();

BenchmarkFile parse(const std::string& text);
Expr parse_expr(const std::string& text);
BoolExpr parse_bool(const std::string& text);
// Either "piece C -> E ..." lines or a single expression (one piece on true).
PiecewiseClosedForm parse_closed_form(const std::string& text);

std::string print(const Expr& e);
std::string print(const BoolExpr& c);
std::string print(const FuncDef& f);
std::string print(const RecurrenceSystem& sys);
std::string print(const PiecewiseClosedForm& cf);
std::string print(const BenchmarkFile& file);
// Single-line rendering used for report candidates.
std::string print_inline(const PiecewiseClosedForm& cf);

BenchmarkFile load_benchmark(const std::string& path);

}  // namespace recsolve
