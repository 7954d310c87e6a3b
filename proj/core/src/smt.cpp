#include "recsolve/smt.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "recsolve/dsl.hpp"
#include "recsolve/rewriter.hpp"

namespace recsolve {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Proved: return "proved";
    case Verdict::Disproved: return "disproved";
    case Verdict::Unknown: return "unknown";
    case Verdict::Unsupported: return "unsupported";
  }
  return "?";
}

std::string resolve_solver_command(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("RECSOLVE_SOLVER"); env && *env) return env;
  return "z3 -in";
}

// ---- solver process -------------------------------------------------------

namespace {

std::atomic<uint64_t> g_query_id{0};

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string first_line(const std::string& out) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    return line.substr(a, b - a + 1);
  }
  return "";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

SolverReply run_solver(const std::string& smtlib, const SolverConfig& cfg, const std::string& label) {
  auto t0 = std::chrono::steady_clock::now();
  std::string cmd = resolve_solver_command(cfg.command);
  std::string stem;
  if (!cfg.debug_dir.empty()) {
    stem = cfg.debug_dir + "/" + label + "-" + std::to_string(g_query_id++);
    write_file(stem + ".smt2", smtlib);
  }

  std::string tmp;
  bool via_file = cmd.find("{}") != std::string::npos;
  if (via_file) {
    char buf[] = "/tmp/recsolve-XXXXXX.smt2";
    int fd = mkstemps(buf, 5);
    if (fd < 0) throw std::runtime_error("cannot create a query file");
    tmp = buf;
    size_t off = 0;
    while (off < smtlib.size()) {
      ssize_t w = ::write(fd, smtlib.data() + off, smtlib.size() - off);
      if (w <= 0) break;
      off += size_t(w);
    }
    ::close(fd);
    for (size_t p; (p = cmd.find("{}")) != std::string::npos;) cmd.replace(p, 2, "'" + tmp + "'");
  }
  std::string shell_cmd = "exec " + cmd;

  // A socket for stdin lets the parent write with MSG_NOSIGNAL.
  int in_fds[2];
  int out_fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_fds) != 0) throw std::runtime_error("socketpair failed");
  if (pipe2(out_fds, O_CLOEXEC) != 0) {
    ::close(in_fds[0]);
    ::close(in_fds[1]);
    throw std::runtime_error("pipe failed");
  }

  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in_fds[1], 0);
    dup2(out_fds[1], 1);
    dup2(out_fds[1], 2);
    execl("/bin/sh", "sh", "-c", shell_cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(in_fds[1]);
  ::close(out_fds[1]);
  int to_child = in_fds[0];
  int from_child = out_fds[0];
  fcntl(to_child, F_SETFL, O_NONBLOCK);
  if (via_file) {
    ::close(to_child);
    to_child = -1;
  }

  SolverReply r;
  auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(cfg.timeout));
  size_t written = 0;
  bool killed = false;
  char buf[4096];
  while (from_child >= 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      killed = true;
      break;
    }
    pollfd fds[2];
    int n = 0;
    fds[n++] = {from_child, POLLIN, 0};
    if (to_child >= 0) fds[n++] = {to_child, POLLOUT, 0};
    int rc = poll(fds, n, int(std::min<long long>(left.count(), 100)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (to_child >= 0 && n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t w = send(to_child, smtlib.data() + written, smtlib.size() - written, MSG_NOSIGNAL);
      if (w > 0) written += size_t(w);
      if (w < 0 && errno != EAGAIN) written = smtlib.size();
      if (written >= smtlib.size()) {
        shutdown(to_child, SHUT_WR);
        ::close(to_child);
        to_child = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      ssize_t got = ::read(from_child, buf, sizeof buf);
      if (got > 0) {
        r.output.append(buf, size_t(got));
      } else if (got == 0 || errno != EAGAIN) {
        ::close(from_child);
        from_child = -1;
      }
    }
  }
  if (to_child >= 0) ::close(to_child);
  if (from_child >= 0) ::close(from_child);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!tmp.empty()) ::unlink(tmp.c_str());
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  r.seconds = since(t0);
  if (!stem.empty()) write_file(stem + ".out", r.output);

  std::string head = first_line(r.output);
  if (killed) {
    r.status = SolverStatus::Timeout;
  } else if (head == "sat") {
    r.status = SolverStatus::Sat;
  } else if (head == "unsat") {
    r.status = SolverStatus::Unsat;
  } else if (head == "unknown" || head == "timeout") {
    r.status = SolverStatus::Unknown;
  } else if (r.exit_code == 127) {
    throw SolverNotFound("solver command not found: " + cmd);
  } else if (head.rfind("(error", 0) == 0) {
    throw MalformedSolverOutput("solver rejected the query: " + head);
  } else {
    r.status = SolverStatus::Crash;
  }
  return r;
}

// ---- encoding --------------------------------------------------------------

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

std::string int_lit(const mpz_class& z) {
  if (z < 0) return "(- " + mpz_class(-z).get_str() + ")";
  return z.get_str();
}

std::string real_lit(const mpq_class& q) {
  mpz_class n = abs(q.get_num());
  std::string s = q.get_den() == 1 ? n.get_str() + ".0" : "(/ " + n.get_str() + ".0 " + q.get_den().get_str() + ".0)";
  return q < 0 ? "(- " + s + ")" : s;
}

std::string join(const std::vector<std::string>& xs, const char* op, const char* empty) {
  if (xs.empty()) return empty;
  if (xs.size() == 1) return xs[0];
  std::string s = std::string("(") + op;
  for (const auto& x : xs) s += " " + x;
  return s + ")";
}

struct Term {
  std::string s;
  bool is_int = true;
};

class Encoder {
 public:
  Encoder(const std::vector<std::string>& params, bool real_vars) : real_vars_(real_vars) {
    for (const auto& p : params) {
      std::string n = "v_" + sanitize(p);
      names[p] = n;
      decls.push_back("(declare-fun " + n + " () " + (real_vars ? "Real" : "Int") + ")");
      if (real_vars) side.push_back("(is_int " + n + ")");
    }
  }

  std::map<std::string, std::string> names;
  std::vector<std::string> decls;
  std::vector<std::string> axioms;
  std::vector<std::string> side;
  std::vector<PowTerm> pows;
  std::set<std::string> bad;
  std::string offending;

  Term term(const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Const:
        if (e.value().get_den() == 1) return {int_lit(e.value().get_num()), true};
        return {real_lit(e.value()), false};
      case ExprKind::Var: {
        auto it = names.find(e.name());
        if (it == names.end()) return fail("UnboundVariable", e);
        return {it->second, !real_vars_};
      }
      case ExprKind::Add: return arith("+", e);
      case ExprKind::Sub: return arith("-", e);
      case ExprKind::Mul: return arith("*", e);
      case ExprKind::Div: {
        Term a = term(e.arg(0)), b = term(e.arg(1));
        return {"(/ " + real(a) + " " + real(b) + ")", false};
      }
      case ExprKind::Floor:
      case ExprKind::Ceil: {
        Term a = term(e.arg(0));
        if (a.is_int) return a;
        std::string q = "q_" + std::to_string(++fresh_);
        decls.push_back("(declare-fun " + q + " () Int)");
        std::string rq = "(to_real " + q + ")";
        if (e.kind() == ExprKind::Floor)
          side.push_back("(and (<= " + rq + " " + a.s + ") (< " + a.s + " (+ " + rq + " 1.0)))");
        else
          side.push_back("(and (< (- " + rq + " 1.0) " + a.s + ") (<= " + a.s + " " + rq + "))");
        return {q, true};
      }
      case ExprKind::Max:
      case ExprKind::Min: {
        Term a = term(e.arg(0)), b = term(e.arg(1));
        unify(a, b);
        const char* op = e.kind() == ExprKind::Max ? ">=" : "<=";
        return {"(ite (" + std::string(op) + " " + a.s + " " + b.s + ") " + a.s + " " + b.s + ")", a.is_int};
      }
      case ExprKind::Ite: {
        std::string c = formula(e.cond());
        Term a = term(e.arg(0)), b = term(e.arg(1));
        unify(a, b);
        return {"(ite " + c + " " + a.s + " " + b.s + ")", a.is_int};
      }
      case ExprKind::Pow: return power(e);
      case ExprKind::Log2: return fail("Log2", e);
      case ExprKind::Factorial: return fail("Factorial", e);
      case ExprKind::Call: return fail("Call", e);
    }
    return fail("Unknown", e);
  }

  std::string formula(const BoolExpr& c) {
    switch (c.kind()) {
      case BoolKind::True: return "true";
      case BoolKind::Not: return "(not " + formula(c.children()[0]) + ")";
      case BoolKind::And:
      case BoolKind::Or: {
        std::vector<std::string> xs;
        for (const auto& k : c.children()) xs.push_back(formula(k));
        return c.kind() == BoolKind::And ? join(xs, "and", "true") : join(xs, "or", "false");
      }
      case BoolKind::Cmp: {
        Term a = term(c.lhs()), b = term(c.rhs());
        unify(a, b);
        switch (c.op()) {
          case CmpOp::Eq: return "(= " + a.s + " " + b.s + ")";
          case CmpOp::Ne: return "(not (= " + a.s + " " + b.s + "))";
          case CmpOp::Lt: return "(< " + a.s + " " + b.s + ")";
          case CmpOp::Le: return "(<= " + a.s + " " + b.s + ")";
          case CmpOp::Gt: return "(> " + a.s + " " + b.s + ")";
          case CmpOp::Ge: return "(>= " + a.s + " " + b.s + ")";
        }
      }
    }
    return "true";
  }

  static std::string real(const Term& t) { return t.is_int ? "(to_real " + t.s + ")" : t.s; }

  static void unify(Term& a, Term& b) {
    if (a.is_int == b.is_int) return;
    a.s = real(a);
    b.s = real(b);
    a.is_int = b.is_int = false;
  }

 private:
  bool real_vars_;
  int fresh_ = 0;
  std::map<std::string, std::string> pow_fns_;

  Term fail(const std::string& kind, const Expr& e) {
    bad.insert(kind);
    if (offending.empty()) offending = print(e);
    return {"0", true};
  }

  Term arith(const char* op, const Expr& e) {
    Term a = term(e.arg(0)), b = term(e.arg(1));
    unify(a, b);
    return {std::string("(") + op + " " + a.s + " " + b.s + ")", a.is_int};
  }

  Term power(const Expr& e) {
    const Expr& b = e.arg(0);
    const Expr& x = e.arg(1);
    if (x.is_const()) {
      const mpq_class& k = x.value();
      if (k.get_den() != 1 || abs(k) > 64) {
        if (b.is_const() && k.get_den() == 1) {
          Num v = num_pow(Num(b.value()), Num(k));
          if (v.exact) return term(Expr::constant(v.q));
        }
        return fail("Pow", e);
      }
      long n = k.get_num().get_si();
      if (b.is_const()) {
        if (b.value() == 0 && n < 0) return fail("Pow", e);
        Num v = num_pow(Num(b.value()), Num(n));
        return term(Expr::constant(v.q));
      }
      Term base = term(b);
      if (n == 0) return {"1", true};
      std::vector<std::string> fs(size_t(std::labs(n)), base.s);
      std::string prod = join(fs, "*", "1");
      if (n > 0) return {prod, base.is_int};
      return {"(/ 1.0 " + real({prod, base.is_int}) + ")", false};
    }
    if (!b.is_const() || b.value() == 0 || !integer_valued(x)) return fail("Pow", e);
    const mpq_class& c = b.value();
    std::string key = c.get_str();
    auto it = pow_fns_.find(key);
    std::string fn;
    if (it == pow_fns_.end()) {
      fn = "pow_" + std::string(c < 0 ? "n" : "") + mpz_class(abs(c.get_num())).get_str() +
           (c.get_den() == 1 ? "" : "_" + c.get_den().get_str());
      pow_fns_[key] = fn;
      decls.push_back("(declare-fun " + fn + " (Int) Real)");
      axioms.push_back("(assert (= (" + fn + " 0) 1.0))");
      axioms.push_back("(assert (forall ((n Int)) (! (= (" + fn + " (+ n 1)) (* " + real_lit(c) + " (" + fn +
                       " n))) :pattern ((" + fn + " (+ n 1))))))");
      if (c > 0)
        axioms.push_back("(assert (forall ((n Int)) (! (> (" + fn + " n) 0.0) :pattern ((" + fn + " n)))))");
      if (c >= 1)
        axioms.push_back("(assert (forall ((n Int)) (! (=> (>= n 0) (>= (" + fn + " n) 1.0)) :pattern ((" + fn +
                         " n)))))");
    } else {
      fn = it->second;
    }
    Term g = term(x);
    std::string gs = g.is_int ? g.s : "(to_int " + g.s + ")";
    pows.push_back({fn, c, x, gs});
    return {"(" + fn + " " + gs + ")", false};
  }
};

std::vector<std::string> merge_kinds(std::vector<std::string> a, const std::set<std::string>& b) {
  std::set<std::string> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

}  // namespace

std::string SmtJob::text(bool quantified, const std::vector<std::string>& facts) const {
  std::ostringstream o;
  o << "(set-option :produce-models true)\n";
  o << "(set-logic " << logic << ")\n";
  for (const auto& d : declarations) o << d << "\n";
  if (quantified) {
    for (const auto& a : axioms) o << a << "\n";
  } else {
    std::set<std::string> seen;
    auto add = [&](const std::string& s) {
      if (seen.insert(s).second) o << "(assert " << s << ")\n";
    };
    for (const auto& p : pow_terms) {
      std::string c = real_lit(p.base);
      std::string g = p.exponent_smt;
      add("(= (" + p.fn + " 0) 1.0)");
      add("(= (" + p.fn + " (+ " + g + " 1)) (* " + c + " (" + p.fn + " " + g + ")))");
      add("(= (" + p.fn + " " + g + ") (* " + c + " (" + p.fn + " (- " + g + " 1))))");
      if (p.base > 0) add("(> (" + p.fn + " " + g + ") 0.0)");
      if (p.base >= 1) add("(=> (>= " + g + " 0) (>= (" + p.fn + " " + g + ") 1.0))");
    }
    for (const auto& f : facts) add(f);
  }
  for (const auto& s : side) o << "(assert " << s << ")\n";
  o << "(assert " << assertion << ")\n";
  o << "(check-sat)\n";
  if (!params.empty()) {
    o << "(get-value (";
    for (size_t i = 0; i < params.size(); ++i) o << (i ? " " : "") << names.at(params[i]);
    o << "))\n";
  }
  return o.str();
}

SmtJob encode(const FuncDef& f, const PiecewiseClosedForm& cand, const SolverConfig& cfg) {
  if (cand.empty()) throw SmtUnsupported({"EmptyCandidate"}, "");
  std::vector<std::string> kinds = contains_unsupported(cand);
  for (const auto& c : f.cases) {
    auto k = contains_unsupported(c.body);
    kinds.insert(kinds.end(), k.begin(), k.end());
    if (contains_calls(c.body, f.name)) kinds.push_back("Call");
  }

  Encoder enc(f.params, cfg.real_encoding);
  Term lhs = enc.term(cand.as_expr());
  std::string pre = enc.formula(f.pre);
  std::vector<std::string> clauses;
  std::vector<std::string> prev;
  for (const auto& c : f.cases) {
    std::string guard = enc.formula(c.guard);
    Term rhs = enc.term(c.body);
    Term l = lhs;
    Encoder::unify(l, rhs);
    std::vector<std::string> hyp = prev;
    hyp.push_back(guard);
    hyp.push_back(pre);
    clauses.push_back("(=> " + join(hyp, "and", "true") + " (= " + l.s + " " + rhs.s + "))");
    prev.push_back("(not " + guard + ")");
  }
  std::string inexact;
  for (const auto& p : cand.pieces)
    if (!p.exact && inexact.empty()) inexact = print(p.body);

  if (!kinds.empty() || !enc.bad.empty()) {
    auto all = merge_kinds(kinds, enc.bad);
    std::string off = !enc.offending.empty() ? enc.offending : inexact;
    throw SmtUnsupported(all, off);
  }

  SmtJob job;
  job.func = f.name;
  job.params = f.params;
  job.names = enc.names;
  job.declarations = enc.decls;
  job.axioms = enc.axioms;
  job.side = enc.side;
  job.assertion = "(and " + pre + " (not " + join(clauses, "and", "true") + "))";
  job.pow_terms = enc.pows;
  job.real_encoding = cfg.real_encoding;
  job.command = resolve_solver_command(cfg.command);
  job.timeout = cfg.timeout;
  job.debug_dir = cfg.debug_dir;
  return job;
}

// ---- model parsing and confirmation ----------------------------------------

namespace {

struct Sexp {
  std::string atom;
  std::vector<Sexp> list;
  bool is_list = false;
};

class SexpReader {
 public:
  explicit SexpReader(const std::string& s) : s_(s) {}

  std::optional<Sexp> next() {
    skip();
    if (i_ >= s_.size()) return std::nullopt;
    return read();
  }

 private:
  std::string s_;
  size_t i_ = 0;

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  Sexp read() {
    skip();
    if (i_ >= s_.size()) throw MalformedSolverOutput("truncated solver output");
    Sexp x;
    if (s_[i_] == '(') {
      x.is_list = true;
      ++i_;
      for (;;) {
        skip();
        if (i_ >= s_.size()) throw MalformedSolverOutput("unbalanced solver output");
        if (s_[i_] == ')') {
          ++i_;
          break;
        }
        x.list.push_back(read());
      }
      return x;
    }
    if (s_[i_] == ')') throw MalformedSolverOutput("unexpected ')' in solver output");
    if (s_[i_] == '"') {
      size_t j = s_.find('"', i_ + 1);
      if (j == std::string::npos) throw MalformedSolverOutput("unterminated string in solver output");
      x.atom = s_.substr(i_, j + 1 - i_);
      i_ = j + 1;
      return x;
    }
    size_t j = i_;
    while (j < s_.size() && !std::isspace(static_cast<unsigned char>(s_[j])) && s_[j] != '(' && s_[j] != ')') ++j;
    x.atom = s_.substr(i_, j - i_);
    i_ = j;
    return x;
  }
};

mpq_class value_of(const Sexp& x) {
  if (!x.is_list) {
    const std::string& a = x.atom;
    size_t dot = a.find('.');
    try {
      if (dot == std::string::npos) return mpq_class(mpz_class(a));
      std::string digits = a.substr(0, dot) + a.substr(dot + 1);
      mpz_class den;
      mpz_ui_pow_ui(den.get_mpz_t(), 10, a.size() - dot - 1);
      mpq_class q(mpz_class(digits), den);
      q.canonicalize();
      return q;
    } catch (const std::invalid_argument&) {
      throw MalformedSolverOutput("bad numeral in model: " + a);
    }
  }
  if (x.list.size() == 2 && x.list[0].atom == "-") return -value_of(x.list[1]);
  if (x.list.size() == 3 && x.list[0].atom == "/") {
    mpq_class d = value_of(x.list[2]);
    if (d == 0) throw MalformedSolverOutput("zero denominator in model");
    return value_of(x.list[1]) / d;
  }
  throw MalformedSolverOutput("unrecognized model value");
}

Point parse_point(const SmtJob& job, const std::string& output) {
  size_t nl = output.find("sat");
  SexpReader rd(output.substr(nl == std::string::npos ? 0 : nl + 3));
  std::map<std::string, mpz_class> vals;
  while (auto x = rd.next()) {
    if (!x->is_list) continue;
    for (const auto& pair : x->list) {
      if (!pair.is_list || pair.list.size() != 2 || pair.list[0].is_list) continue;
      mpq_class q = value_of(pair.list[1]);
      if (q.get_den() != 1) throw MalformedSolverOutput("non-integer model value for " + pair.list[0].atom);
      vals[pair.list[0].atom] = q.get_num();
    }
    break;
  }
  Point pt;
  for (const auto& p : job.params) {
    auto it = vals.find(job.names.at(p));
    if (it == vals.end()) throw MalformedSolverOutput("model lacks a value for " + p);
    pt.push_back(it->second);
  }
  return pt;
}

// True iff the recurrence is defined at pt and the candidate disagrees with it there.
bool confirm(const RecurrenceSystem& sys, const SmtJob& job, const PiecewiseClosedForm& cand, const Point& pt) {
  const FuncDef* f = sys.find(job.func);
  if (!f) return false;
  Env env = make_env(job.params, pt);
  try {
    if (!eval_bool(f->pre, env)) return false;
  } catch (const EvalError&) {
    return false;
  }
  Num lhs;
  try {
    lhs = eval_fun(sys, job.func, pt);
  } catch (const EvalError&) {
    return false;
  }
  try {
    return !num_eq(lhs, cand.eval(env));
  } catch (const EvalError&) {
    return true;
  }
}

std::string unknown_reason(SolverStatus s) {
  switch (s) {
    case SolverStatus::Timeout: return "timeout";
    case SolverStatus::Crash: return "solver-crash";
    default: return "solver-unknown";
  }
}

}  // namespace

VerificationResult check(const SmtJob& job, const RecurrenceSystem& sys, const PiecewiseClosedForm& cand) {
  auto t0 = std::chrono::steady_clock::now();
  SolverConfig cfg;
  cfg.command = job.command;
  cfg.timeout = job.timeout;
  cfg.debug_dir = job.debug_dir;
  std::string label = sanitize(job.func);

  VerificationResult res;
  auto disproved = [&](const Point& pt, bool confirmed) {
    res.verdict = Verdict::Disproved;
    res.confirmed = confirmed;
    res.counterexample.clear();
    for (size_t i = 0; i < job.params.size(); ++i) res.counterexample[job.params[i]] = pt[i];
  };
  auto finish = [&]() {
    res.seconds = since(t0);
    return res;
  };
  // Binary search on the L1 norm for a smaller confirmed counterexample.
  auto minimize = [&](Point pt, bool quantified, const std::vector<std::string>& facts, const SolverConfig& c) {
    auto norm = [](const Point& p) {
      mpz_class n = 0;
      for (const auto& v : p) n += abs(v);
      return n;
    };
    std::vector<std::string> absv;
    for (const auto& p : job.params) {
      const std::string& v = job.names.at(p);
      absv.push_back("(ite (>= " + v + " 0) " + v + " (- " + v + "))");
    }
    mpz_class lo = 0, hi = norm(pt);
    for (int it = 0; it < 32 && lo < hi; ++it) {
      mpz_class mid = (lo + hi) / 2;
      SmtJob j = job;
      std::string bound = job.real_encoding ? mid.get_str() + ".0" : mid.get_str();
      j.side.push_back("(<= " + join(absv, "+", "0") + " " + bound + ")");
      SolverReply r = run_solver(j.text(quantified, facts), c, label + "-min");
      ++res.solver_calls;
      std::optional<Point> got;
      if (r.status == SolverStatus::Sat) {
        Point p = parse_point(job, r.output);
        if (confirm(sys, job, cand, p)) got = p;
      }
      if (got) {
        pt = *got;
        hi = norm(pt);
      } else if (r.status == SolverStatus::Unsat) {
        lo = mid + 1;
      } else {
        break;
      }
    }
    return pt;
  };

  if (job.pow_terms.empty()) {
    SolverReply r = run_solver(job.text(), cfg, label);
    res.solver_calls = 1;
    if (r.status == SolverStatus::Unsat) {
      res.verdict = Verdict::Proved;
    } else if (r.status == SolverStatus::Sat) {
      Point pt = parse_point(job, r.output);
      bool ok = confirm(sys, job, cand, pt);
      if (ok) pt = minimize(pt, true, {}, cfg);
      disproved(pt, ok);
    } else {
      res.verdict = Verdict::Unknown;
      res.reason = unknown_reason(r.status);
    }
    return finish();
  }

  // Ground instances of the power axioms first: unsat there is unsat with the
  // quantified axioms too, and sat models can be replayed. Spurious models add
  // the concrete powers at the model point and retry.
  std::vector<std::string> facts;
  std::optional<Point> spurious;
  SolverConfig ground = cfg;
  ground.timeout = cfg.timeout / 2;
  for (int round = 0; round < 8; ++round) {
    SolverReply r = run_solver(job.text(false, facts), ground, label + "-ground");
    ++res.solver_calls;
    if (r.status == SolverStatus::Unsat) {
      res.verdict = Verdict::Proved;
      return finish();
    }
    if (r.status != SolverStatus::Sat) break;
    Point pt = parse_point(job, r.output);
    if (confirm(sys, job, cand, pt)) {
      disproved(minimize(pt, false, facts, ground), true);
      return finish();
    }
    spurious = pt;
    Env env = make_env(job.params, pt);
    size_t before = facts.size();
    for (const auto& p : job.pow_terms) {
      try {
        Num k = eval_ground(p.exponent, env);
        if (!k.exact || k.q.get_den() != 1 || abs(k.q) > 1024) continue;
        long n = k.q.get_num().get_si();
        for (long m : {n - 1, n, n + 1}) {
          Num v = num_pow(Num(p.base), Num(m));
          if (!v.exact) continue;
          std::string f = "(= (" + p.fn + " " + int_lit(mpz_class(m)) + ") " + real_lit(v.q) + ")";
          if (std::find(facts.begin(), facts.end(), f) == facts.end()) facts.push_back(f);
        }
      } catch (const EvalError&) {
      }
    }
    if (facts.size() == before) break;
  }

  SolverReply r = run_solver(job.text(true), cfg, label);
  ++res.solver_calls;
  if (r.status == SolverStatus::Unsat) {
    res.verdict = Verdict::Proved;
  } else if (r.status == SolverStatus::Sat) {
    Point pt = parse_point(job, r.output);
    disproved(pt, confirm(sys, job, cand, pt));
  } else {
    res.verdict = Verdict::Unknown;
    res.reason = unknown_reason(r.status);
  }
  return finish();
}

// ---- call replacement and verification -------------------------------------

bool contains_calls(const Expr& e, const std::string& func) { return contains_call(e, func); }

std::optional<bool> entails(const std::vector<std::string>& params, const BoolExpr& premise, const BoolExpr& goal,
                            const SolverConfig& cfg, int* solver_calls) {
  SimplifyOptions raw;
  raw.naturals = false;
  if (simplify(goal, raw).is_true()) return true;
  Encoder enc(params, false);
  std::string p = enc.formula(premise);
  std::string g = enc.formula(goal);
  if (!enc.bad.empty()) return std::nullopt;
  std::ostringstream o;
  o << "(set-logic ALL)\n";
  for (const auto& d : enc.decls) o << d << "\n";
  for (const auto& a : enc.axioms) o << a << "\n";
  for (const auto& s : enc.side) o << "(assert " << s << ")\n";
  o << "(assert (and " << p << " (not " << g << ")))\n(check-sat)\n";
  SolverReply r = run_solver(o.str(), cfg, "entail");
  if (solver_calls) ++*solver_calls;
  if (r.status == SolverStatus::Unsat) return true;
  if (r.status == SolverStatus::Sat) return false;
  return std::nullopt;
}

namespace {

Expr rebuild(const Expr& e, std::vector<Expr> args) {
  switch (e.kind()) {
    case ExprKind::Const:
    case ExprKind::Var: return e;
    case ExprKind::Call: return Expr::call(e.name(), std::move(args));
    case ExprKind::Ite: return Expr::ite(e.cond(), args[0], args[1]);
    default:
      if (args.size() == 1) return Expr::unary(e.kind(), args[0]);
      return Expr::binary(e.kind(), args[0], args[1]);
  }
}

struct Replacer {
  const FuncDef& f;
  Expr body;
  BoolExpr premise;
  const SolverConfig& cfg;
  int* calls;
  std::map<std::string, bool> cache;

  Expr run(const Expr& e) {
    if (!contains_call(e, f.name)) return e;
    std::vector<Expr> args;
    for (const auto& a : e.args()) args.push_back(run(a));
    if (e.kind() != ExprKind::Call || e.name() != f.name) return rebuild(e, std::move(args));
    for (const auto& a : args)
      if (contains_call(a, f.name)) return Expr::call(e.name(), std::move(args));
    std::map<std::string, Expr> sub;
    for (size_t i = 0; i < f.params.size(); ++i) sub[f.params[i]] = args[i];
    BoolExpr goal = substitute(f.pre, sub);
    std::string key = print(goal);
    auto it = cache.find(key);
    bool ok;
    if (it != cache.end()) {
      ok = it->second;
    } else {
      ok = entails(f.params, premise, goal, cfg, calls).value_or(false);
      cache[key] = ok;
    }
    if (!ok) return Expr::call(e.name(), std::move(args));
    return substitute(body, sub);
  }
};

}  // namespace

Expr replace_calls(const Expr& e, const FuncDef& f, const PiecewiseClosedForm& cand, const BoolExpr& phi,
                   const SolverConfig& cfg, int* solver_calls) {
  if (!contains_call(e, f.name)) return e;
  Replacer r{f, cand.as_expr(), f.pre && phi, cfg, solver_calls, {}};
  return r.run(e);
}

VerificationResult verify(const RecurrenceSystem& sys, const PiecewiseClosedForm& cand, const SolverConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  VerificationResult res;
  auto unsupported = [&](std::vector<std::string> kinds, std::string off) {
    res.verdict = Verdict::Unsupported;
    res.unsupported = std::move(kinds);
    res.offending = std::move(off);
    res.seconds = since(t0);
    return res;
  };
  if (sys.functions.size() != 1) return unsupported({"systems"}, "");
  if (cand.empty()) return unsupported({"EmptyCandidate"}, "");
  const FuncDef& f = sys.entry_function();

  auto kinds = contains_unsupported(cand);
  if (!kinds.empty()) {
    Encoder probe(f.params, false);
    std::string off;
    for (const auto& p : cand.pieces) {
      probe.term(simplify(p.body));
      if (!probe.offending.empty()) break;
      if (!p.exact && off.empty()) off = print(p.body);
    }
    return unsupported(kinds, probe.offending.empty() ? off : probe.offending);
  }

  int calls = 0;
  BoolExpr nonneg;
  {
    std::vector<BoolExpr> cs;
    for (const auto& p : f.params) cs.push_back(BoolExpr::cmp(CmpOp::Ge, Expr::var(p), Expr::constant(0L)));
    nonneg = BoolExpr::conj(cs);
  }
  SimplifyOptions so;
  so.naturals = entails(f.params, f.pre, nonneg, cfg, &calls).value_or(false);

  PiecewiseClosedForm sc = cand;
  for (auto& p : sc.pieces) {
    p.domain = simplify(p.domain, so);
    p.body = simplify(p.body, so);
  }

  FuncDef g = f;
  std::vector<BoolExpr> prev;
  for (auto& c : g.cases) {
    std::vector<BoolExpr> conds = prev;
    conds.push_back(c.guard);
    BoolExpr phi = BoolExpr::conj(conds);
    Expr body = replace_calls(c.body, f, sc, phi, cfg, &calls);
    if (contains_calls(body, f.name)) {
      res.solver_calls = calls;
      return unsupported({"Call"}, print(body));
    }
    c.body = simplify(body, so);
    prev.push_back(!c.guard);
  }

  SmtJob job;
  try {
    job = encode(g, sc, cfg);
  } catch (const SmtUnsupported& u) {
    res.solver_calls = calls;
    return unsupported(u.kinds(), u.offending());
  }
  res = check(job, sys, cand);
  res.solver_calls += calls;
  res.seconds = since(t0);
  return res;
}

}  // namespace recsolve
