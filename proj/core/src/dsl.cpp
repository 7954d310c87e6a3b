#include "recsolve/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace recsolve {

ParseError::ParseError(const std::string& msg, int line, int col)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg),
      line_(line),
      col_(col) {}

bool BenchmarkFile::reconstructed() const {
  auto it = meta.find("reconstructed");
  return it != meta.end() && it->second == "true";
}

const std::vector<std::string>& known_categories() {
  static const std::vector<std::string> cats = {"scale", "amortized", "max-heavy", "imp",
                                                "nested", "misc", "CAS-style"};
  return cats;
}

namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
  Tok type;
  std::string text;
  mpq_class num;
  int line, col;
  size_t offset;
};

struct Lexed {
  std::vector<Token> toks;
  std::map<std::string, std::string> meta;
};

Lexed lex(const std::string& s) {
  Lexed out;
  int line = 1, col = 1;
  size_t i = 0;
  bool seen_token = false;
  static const std::regex meta_re(R"(^#\s*([A-Za-z_][A-Za-z0-9_-]*)\s*:\s*(.*?)\s*$)");
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < s.size(); ++k, ++i) {
      if (s[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) { advance(1); continue; }
    if (c == '#') {
      size_t j = s.find('\n', i);
      if (j == std::string::npos) j = s.size();
      std::string comment = s.substr(i, j - i);
      std::smatch m;
      if (!seen_token && std::regex_match(comment, m, meta_re)) out.meta[m[1]] = m[2];
      advance(j - i);
      continue;
    }
    seen_token = true;
    Token t{Tok::Sym, "", 0, line, col, i};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '\'')) ++j;
      t.type = Tok::Ident;
      t.text = s.substr(i, j - i);
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      mpz_class whole(s.substr(i, j - i));
      t.type = Tok::Number;
      if (j + 1 < s.size() && s[j] == '/' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        size_t k = j + 1;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        mpz_class den(s.substr(j + 1, k - j - 1));
        if (den == 0) throw ParseError("zero denominator in rational literal", line, col);
        t.num = mpq_class(whole, den);
        t.num.canonicalize();
        j = k;
      } else if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        size_t k = j + 1;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        std::string frac = s.substr(j + 1, k - j - 1);
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        t.num = mpq_class(whole * scale + mpz_class(frac), scale);
        t.num.canonicalize();
        j = k;
      } else {
        t.num = mpq_class(whole);
      }
      t.text = s.substr(i, j - i);
      advance(j - i);
    } else {
      static const char* two[] = {"->", "<=", ">=", "!=", "=="};
      std::string sym(1, c);
      for (const char* op : two)
        if (s.compare(i, 2, op) == 0) sym = op;
      if (std::string("(){},+-*/^!=<>").find(c) == std::string::npos && sym.size() == 1)
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
      t.text = sym == "==" ? "=" : sym;
      advance(sym.size());
    }
    out.toks.push_back(t);
  }
  out.toks.push_back(Token{Tok::End, "<end of input>", 0, line, col, s.size()});
  return out;
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> kw = {"def", "pre", "case", "entry", "expect", "piece", "category",
                                           "and", "or", "not", "true", "false", "floor", "ceil",
                                           "log2", "fact", "max", "min", "sqrt", "ite"};
  return kw;
}

struct CallSite {
  std::string name;
  size_t arity;
  int line, col;
};

class Parser {
 public:
  explicit Parser(const Lexed& lx) : toks_(lx.toks) {}

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().type == Tok::End; }
  bool is_sym(const std::string& s, size_t k = 0) const { return peek(k).type == Tok::Sym && peek(k).text == s; }
  bool is_kw(const std::string& s, size_t k = 0) const { return peek(k).type == Tok::Ident && peek(k).text == s; }

  [[noreturn]] void error(const std::string& msg, const Token& t) const { throw ParseError(msg, t.line, t.col); }
  [[noreturn]] void error(const std::string& msg) const { error(msg, peek()); }

  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  void expect_sym(const std::string& s) {
    if (!is_sym(s)) error("expected '" + s + "' but found '" + peek().text + "'");
    next();
  }
  void expect_kw(const std::string& s) {
    if (!is_kw(s)) error("expected '" + s + "' but found '" + peek().text + "'");
    next();
  }
  std::string expect_name() {
    if (peek().type != Tok::Ident || reserved().count(peek().text))
      error("expected a name but found '" + peek().text + "'");
    return next().text;
  }

  // ---- expressions ----
  Expr parse_expr() { return parse_sum(); }

  Expr parse_sum() {
    Expr e = parse_product();
    while (is_sym("+") || is_sym("-")) {
      bool add = next().text == "+";
      Expr r = parse_product();
      e = add ? e + r : e - r;
    }
    return e;
  }

  Expr parse_product() {
    Expr e = parse_unary();
    while (is_sym("*") || is_sym("/")) {
      bool mul = next().text == "*";
      Expr r = parse_unary();
      e = mul ? e * r : e / r;
    }
    return e;
  }

  Expr parse_unary() {
    if (is_sym("-")) {
      next();
      Expr e = parse_unary();
      if (e.is_const()) return Expr::constant(-e.value());
      return Expr::constant(0L) - e;
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_postfix();
    if (is_sym("^")) {
      next();
      return pow(base, parse_unary());
    }
    return base;
  }

  Expr parse_postfix() {
    Expr e = parse_primary();
    while (is_sym("!")) {
      next();
      e = factorial(e);
    }
    return e;
  }

  std::vector<Expr> parse_args() {
    expect_sym("(");
    std::vector<Expr> args;
    if (!is_sym(")")) {
      args.push_back(parse_expr());
      while (is_sym(",")) {
        next();
        args.push_back(parse_expr());
      }
    }
    expect_sym(")");
    return args;
  }

  Expr parse_primary() {
    const Token& t = peek();
    if (t.type == Tok::Number) {
      next();
      return Expr::constant(t.num);
    }
    if (is_sym("(")) {
      next();
      Expr e = parse_expr();
      expect_sym(")");
      return e;
    }
    if (t.type == Tok::Ident) {
      static const std::map<std::string, std::pair<ExprKind, size_t>> builtins = {
          {"floor", {ExprKind::Floor, 1}}, {"ceil", {ExprKind::Ceil, 1}},      {"log2", {ExprKind::Log2, 1}},
          {"fact", {ExprKind::Factorial, 1}}, {"max", {ExprKind::Max, 2}},    {"min", {ExprKind::Min, 2}},
          {"sqrt", {ExprKind::Pow, 1}}};
      if (t.text == "ite") {
        next();
        expect_sym("(");
        BoolExpr c = parse_bool();
        expect_sym(",");
        Expr a = parse_expr();
        expect_sym(",");
        Expr b = parse_expr();
        expect_sym(")");
        return Expr::ite(c, a, b);
      }
      auto it = builtins.find(t.text);
      if (it != builtins.end()) {
        Token at = t;
        next();
        auto args = parse_args();
        if (args.size() != it->second.second)
          error("'" + at.text + "' expects " + std::to_string(it->second.second) + " argument(s)", at);
        if (at.text == "sqrt") return pow(args[0], Expr::constant(mpq_class(1, 2)));
        if (args.size() == 1) return Expr::unary(it->second.first, args[0]);
        return Expr::binary(it->second.first, args[0], args[1]);
      }
      if (reserved().count(t.text)) error("unexpected keyword '" + t.text + "'");
      Token at = t;
      next();
      if (is_sym("(")) {
        auto args = parse_args();
        calls.push_back({at.text, args.size(), at.line, at.col});
        return Expr::call(at.text, std::move(args));
      }
      return Expr::var(at.text);
    }
    error("expected an expression but found '" + t.text + "'");
  }

  // ---- booleans ----
  BoolExpr parse_bool() {
    std::vector<BoolExpr> parts{parse_conj()};
    while (is_kw("or")) {
      next();
      parts.push_back(parse_conj());
    }
    return BoolExpr::disj(std::move(parts));
  }

  BoolExpr parse_conj() {
    std::vector<BoolExpr> parts{parse_neg()};
    while (is_kw("and")) {
      next();
      parts.push_back(parse_neg());
    }
    return BoolExpr::conj(std::move(parts));
  }

  BoolExpr parse_neg() {
    if (is_kw("not")) {
      next();
      return BoolExpr::negate(parse_neg());
    }
    return parse_batom();
  }

  static bool is_cmp(const Token& t) {
    return t.type == Tok::Sym && (t.text == "=" || t.text == "!=" || t.text == "<" || t.text == "<=" ||
                                  t.text == ">" || t.text == ">=");
  }

  static bool continues_expr(const Token& t) {
    return t.type == Tok::Sym && (t.text == "+" || t.text == "-" || t.text == "*" || t.text == "/" ||
                                  t.text == "^" || t.text == "!");
  }

  BoolExpr parse_batom() {
    if (is_kw("true")) { next(); return BoolExpr::truth(); }
    if (is_kw("false")) { next(); return BoolExpr::falsity(); }
    if (is_sym("(")) {
      size_t save = pos_;
      size_t ncalls = calls.size();
      try {
        next();
        BoolExpr b = parse_bool();
        expect_sym(")");
        if (!is_cmp(peek()) && !continues_expr(peek())) return b;
      } catch (const ParseError&) {
      }
      pos_ = save;
      calls.resize(ncalls);
    }
    Expr lhs = parse_expr();
    if (!is_cmp(peek())) error("expected a comparison operator but found '" + peek().text + "'");
    std::string op = next().text;
    Expr rhs = parse_expr();
    static const std::map<std::string, CmpOp> ops = {{"=", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<", CmpOp::Lt},
                                                     {"<=", CmpOp::Le}, {">", CmpOp::Gt}, {">=", CmpOp::Ge}};
    return BoolExpr::cmp(ops.at(op), lhs, rhs);
  }

  BoolExpr parse_call_free_bool(const char* what) {
    Token at = peek();
    size_t ncalls = calls.size();
    BoolExpr b = parse_bool();
    if (calls.size() != ncalls) error(std::string(what) + " contains a call", at);
    return b;
  }

  // ---- items ----
  PiecewiseClosedForm parse_pieces() {
    PiecewiseClosedForm cf;
    while (is_kw("piece")) {
      next();
      Piece p;
      p.domain = parse_call_free_bool("piece domain");
      expect_sym("->");
      Token at = peek();
      size_t ncalls = calls.size();
      p.body = parse_expr();
      if (calls.size() != ncalls) error("closed form contains a call", at);
      p.score = 1.0;
      cf.pieces.push_back(p);
    }
    if (cf.pieces.empty()) error("expected 'piece'");
    cf.score = 1.0;
    return cf;
  }

  FuncDef parse_def() {
    expect_kw("def");
    FuncDef f;
    f.name = expect_name();
    expect_sym("(");
    f.params.push_back(expect_name());
    while (is_sym(",")) {
      next();
      f.params.push_back(expect_name());
    }
    expect_sym(")");
    if (is_kw("pre")) {
      next();
      f.pre = parse_call_free_bool("precondition");
    }
    expect_sym("{");
    while (is_kw("case")) {
      next();
      CaseDef c;
      c.guard = parse_call_free_bool("guard");
      expect_sym("->");
      c.body = parse_expr();
      f.cases.push_back(c);
    }
    if (f.cases.empty()) error("expected 'case'");
    expect_sym("}");
    return f;
  }

  std::string parse_category() {
    // category names may contain '-' (max-heavy, CAS-style)
    const Token& first = peek();
    if (first.type != Tok::Ident) error("expected a category name");
    std::string name = next().text;
    size_t end = first.offset + first.text.size();
    while (is_sym("-") && peek().offset == end && peek(1).type == Tok::Ident && peek(1).offset == end + 1) {
      next();
      const Token& t = next();
      name += "-" + t.text;
      end = t.offset + t.text.size();
    }
    return name;
  }

  std::vector<CallSite> calls;

 private:
  const std::vector<Token>& toks_;
  size_t pos_ = 0;
};

void check_call_sites(const RecurrenceSystem& sys, const std::vector<CallSite>& calls) {
  for (const auto& c : calls) {
    const FuncDef* f = sys.find(c.name);
    if (!f) throw ParseError("unknown function '" + c.name + "'", c.line, c.col);
    if (f->arity() != c.arity)
      throw ParseError("arity mismatch calling '" + c.name + "': expected " + std::to_string(f->arity()) +
                           ", got " + std::to_string(c.arity),
                       c.line, c.col);
  }
}

}  // namespace

BenchmarkFile parse(const std::string& text) {
  Lexed lx = lex(text);
  Parser p(lx);
  BenchmarkFile file;
  file.meta = lx.meta;
  bool have_entry = false;
  Token entry_tok{};
  while (!p.at_end()) {
    if (p.is_kw("def")) {
      Token at = p.peek();
      FuncDef f = p.parse_def();
      if (file.system.find(f.name)) throw ParseError("function '" + f.name + "' defined twice", at.line, at.col);
      file.system.functions.push_back(std::move(f));
    } else if (p.is_kw("entry")) {
      p.next();
      entry_tok = p.peek();
      file.system.entry = p.expect_name();
      have_entry = true;
    } else if (p.is_kw("expect")) {
      p.next();
      file.expect = p.parse_pieces();
    } else if (p.is_kw("category")) {
      p.next();
      Token at = p.peek();
      file.category = p.parse_category();
      const auto& cats = known_categories();
      if (std::find(cats.begin(), cats.end(), file.category) == cats.end())
        throw ParseError("unknown category '" + file.category + "'", at.line, at.col);
    } else {
      p.error("expected 'def', 'entry', 'expect' or 'category' but found '" + p.peek().text + "'");
    }
  }
  if (file.system.functions.empty()) throw ParseError("no function definitions", 1, 1);
  if (!have_entry) {
    if (file.system.functions.size() != 1) throw ParseError("missing 'entry' declaration", 1, 1);
    file.system.entry = file.system.functions[0].name;
  } else if (!file.system.find(file.system.entry)) {
    throw ParseError("entry function '" + file.system.entry + "' is not defined", entry_tok.line, entry_tok.col);
  }
  check_call_sites(file.system, p.calls);
  try {
    validate(file.system);
  } catch (const ModelError& e) {
    throw ParseError(e.what(), 1, 1);
  }
  if (file.expect) {
    auto params = file.system.entry_function().params;
    std::set<std::string> ps(params.begin(), params.end());
    for (const auto& piece : file.expect->pieces)
      for (const auto& v : free_vars(piece.body))
        if (!ps.count(v)) throw ParseError("expected form uses unknown variable '" + v + "'", 1, 1);
  }
  return file;
}

Expr parse_expr(const std::string& text) {
  Lexed lx = lex(text);
  Parser p(lx);
  Expr e = p.parse_expr();
  if (!p.at_end()) p.error("unexpected '" + p.peek().text + "'");
  return e;
}

BoolExpr parse_bool(const std::string& text) {
  Lexed lx = lex(text);
  Parser p(lx);
  BoolExpr b = p.parse_bool();
  if (!p.at_end()) p.error("unexpected '" + p.peek().text + "'");
  return b;
}

PiecewiseClosedForm parse_closed_form(const std::string& text) {
  Lexed lx = lex(text);
  Parser p(lx);
  PiecewiseClosedForm cf;
  if (p.is_kw("piece")) {
    cf = p.parse_pieces();
  } else {
    Token at = p.peek();
    Expr e = p.parse_expr();
    if (!p.calls.empty()) p.error("closed form contains a call", at);
    cf.pieces.push_back(Piece{BoolExpr::truth(), e, 1.0, true});
    cf.score = 1.0;
  }
  if (!p.at_end()) p.error("unexpected '" + p.peek().text + "'");
  return cf;
}

// ---- printing -------------------------------------------------------------

namespace {

int level(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Pow: return 4;
    case ExprKind::Const:
      if (e.value() < 0) return 3;
      return 5;
    default: return 5;
  }
}

std::string print_expr(const Expr& e);

std::string wrap(const Expr& e, bool paren) {
  std::string s = print_expr(e);
  return paren ? "(" + s + ")" : s;
}

std::string print_expr(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Const: return e.value().get_str();
    case ExprKind::Var: return e.name();
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      int lv = level(e);
      const char* op = e.kind() == ExprKind::Add ? " + " : e.kind() == ExprKind::Sub ? " - "
                       : e.kind() == ExprKind::Mul ? " * " : " / ";
      const Expr& r = e.arg(1);
      bool frac_r = r.is_const() && r.value().get_den() != 1 && e.kind() == ExprKind::Div;
      return wrap(e.arg(0), level(e.arg(0)) < lv) + op + wrap(r, level(r) <= lv || frac_r);
    }
    case ExprKind::Pow: {
      const Expr& b = e.arg(0);
      const Expr& x = e.arg(1);
      bool frac_b = b.is_const() && b.value().get_den() != 1;
      bool frac_x = x.is_const() && x.value().get_den() != 1;
      return wrap(b, level(b) <= 4 || frac_b) + "^" + wrap(x, level(x) < 3 || frac_x);
    }
    case ExprKind::Floor: return "floor(" + print_expr(e.arg(0)) + ")";
    case ExprKind::Ceil: return "ceil(" + print_expr(e.arg(0)) + ")";
    case ExprKind::Log2: return "log2(" + print_expr(e.arg(0)) + ")";
    case ExprKind::Factorial: return "fact(" + print_expr(e.arg(0)) + ")";
    case ExprKind::Max: return "max(" + print_expr(e.arg(0)) + ", " + print_expr(e.arg(1)) + ")";
    case ExprKind::Min: return "min(" + print_expr(e.arg(0)) + ", " + print_expr(e.arg(1)) + ")";
    case ExprKind::Call: {
      std::string s = e.name() + "(";
      for (size_t i = 0; i < e.args().size(); ++i) s += (i ? ", " : "") + print_expr(e.arg(i));
      return s + ")";
    }
    case ExprKind::Ite:
      return "ite(" + print(e.cond()) + ", " + print_expr(e.arg(0)) + ", " + print_expr(e.arg(1)) + ")";
  }
  return "?";
}

int blevel(const BoolExpr& c) {
  switch (c.kind()) {
    case BoolKind::Or: return 1;
    case BoolKind::And: return 2;
    case BoolKind::Not: return 3;
    default: return 4;
  }
}

std::string print_bool(const BoolExpr& c) {
  switch (c.kind()) {
    case BoolKind::True: return "true";
    case BoolKind::Cmp: return print_expr(c.lhs()) + " " + cmp_symbol(c.op()) + " " + print_expr(c.rhs());
    case BoolKind::Not: {
      const BoolExpr& x = c.children()[0];
      if (x.is_true()) return "not true";
      return "not (" + print_bool(x) + ")";
    }
    case BoolKind::And:
    case BoolKind::Or: {
      int lv = blevel(c);
      std::string s;
      for (size_t i = 0; i < c.children().size(); ++i) {
        const BoolExpr& x = c.children()[i];
        std::string part = print_bool(x);
        if (blevel(x) <= lv) part = "(" + part + ")";
        s += (i ? (lv == 1 ? " or " : " and ") : "") + part;
      }
      return s;
    }
  }
  return "?";
}

}  // namespace

std::string print(const Expr& e) { return print_expr(e); }
std::string print(const BoolExpr& c) { return print_bool(c); }

std::string print(const FuncDef& f) {
  std::string s = "def " + f.name + "(";
  for (size_t i = 0; i < f.params.size(); ++i) s += (i ? ", " : "") + f.params[i];
  s += ") pre " + print(f.pre) + " {\n";
  for (const auto& c : f.cases) s += "  case " + print(c.guard) + " -> " + print(c.body) + "\n";
  return s + "}\n";
}

std::string print(const RecurrenceSystem& sys) {
  std::string s;
  for (const auto& f : sys.functions) s += print(f);
  return s + "entry " + sys.entry + "\n";
}

std::string print(const PiecewiseClosedForm& cf) {
  std::string s;
  for (const auto& p : cf.pieces) s += "  piece " + print(p.domain) + " -> " + print(p.body) + "\n";
  return s;
}

std::string print_inline(const PiecewiseClosedForm& cf) {
  if (cf.pieces.empty()) return "";
  if (cf.pieces.size() == 1 && cf.pieces[0].domain.is_true()) return print(cf.pieces[0].body);
  std::string s;
  for (const auto& p : cf.pieces) s += (s.empty() ? "" : " ") + ("piece " + print(p.domain) + " -> " + print(p.body));
  return s;
}

std::string print(const BenchmarkFile& file) {
  std::string s;
  for (const auto& [k, v] : file.meta) s += "# " + k + ": " + v + "\n";
  if (!file.meta.empty()) s += "\n";
  s += print(file.system);
  if (!file.category.empty()) s += "category " + file.category + "\n";
  if (file.expect) s += "expect\n" + print(*file.expect);
  return s;
}

BenchmarkFile load_benchmark(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  BenchmarkFile file = parse(ss.str());
  file.name = std::filesystem::path(path).stem().string();
  try {
    check_totality(file.system);
  } catch (const ModelError& e) {
    throw ParseError(e.what(), 1, 1);
  }
  return file;
}

}  // namespace recsolve
