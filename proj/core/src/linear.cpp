#include "recsolve/linear.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "recsolve/dsl.hpp"
#include "recsolve/rewriter.hpp"

namespace recsolve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Expr over(const std::string& text, const std::vector<std::string>& params) {
  static const char* kNames[] = {"x", "y"};
  std::map<std::string, Expr> b;
  for (size_t i = 0; i < params.size() && i < 2; ++i) b[kNames[i]] = Expr::var(params[i]);
  return substitute(parse_expr(text), b);
}

std::vector<Expr> over_all(const std::vector<std::string>& texts, const std::vector<std::string>& params) {
  std::vector<Expr> out;
  for (const auto& t : texts) out.push_back(over(t, params));
  return out;
}

// Exponent vectors reachable as products of distinct (base power, variable)
// pairs, using at most m + max_deg factors.
// Stops once more than cap terms exist; callers reject such sets.
std::vector<Expr> product_catalog(const std::vector<std::string>& params, int max_deg, size_t cap) {
  const size_t m = params.size();
  const int limit = static_cast<int>(m) + max_deg;
  // fewest factors giving exponent e from distinct degrees {1..max_deg}
  std::map<int, int> cost{{0, 0}};
  for (int mask = 1; mask < (1 << max_deg); ++mask) {
    int e = 0, k = 0;
    for (int d = 1; d <= max_deg; ++d)
      if (mask & (1 << (d - 1))) e += d, ++k;
    auto it = cost.find(e);
    if (it == cost.end() || it->second > k) cost[e] = k;
  }
  std::vector<std::pair<int, int>> per_var(cost.begin(), cost.end());

  std::vector<std::vector<int>> vecs;
  std::vector<int> cur(m, 0);
  std::function<void(size_t, int)> rec = [&](size_t v, int used) {
    if (vecs.size() > cap) return;
    if (v == m) {
      if (used > 0) vecs.push_back(cur);
      return;
    }
    for (const auto& [e, k] : per_var) {
      if (used + k > limit) continue;
      cur[v] = e;
      rec(v + 1, used + k);
    }
    cur[v] = 0;
  };
  rec(0, 0);
  std::sort(vecs.begin(), vecs.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
    int da = std::accumulate(a.begin(), a.end(), 0), db = std::accumulate(b.begin(), b.end(), 0);
    if (da != db) return da < db;
    return a > b;
  });

  std::vector<Expr> out;
  for (const auto& v : vecs) {
    std::optional<Expr> term;
    for (size_t i = 0; i < m; ++i) {
      if (v[i] == 0) continue;
      Expr f = v[i] == 1 ? Expr::var(params[i]) : pow(Expr::var(params[i]), Expr::constant(long(v[i])));
      term = term ? *term * f : f;
    }
    out.push_back(*term);
  }
  return out;
}

double soft(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

// Standardized Gram form of the lasso problem on a subset of rows.
struct Problem {
  size_t n = 0;
  std::vector<size_t> cols;  // non-constant columns of the training set
  Eigen::VectorXd mean, sd;
  double ymean = 0.0;
  Eigen::MatrixXd G;
  Eigen::VectorXd c;
};

bool zero_variance(double sd, double mean) { return !(sd > 1e-12 * std::max(1.0, std::fabs(mean))); }

Problem make_problem(const TrainingSet& t, const std::vector<size_t>& rows, std::vector<size_t>* dropped) {
  Problem pr;
  pr.n = rows.size();
  const double n = static_cast<double>(rows.size());
  for (size_t i : rows) pr.ymean += t.y[i];
  pr.ymean /= n;
  std::vector<double> means, sds;
  for (size_t j = 0; j < t.p; ++j) {
    double mu = 0.0;
    for (size_t i : rows) mu += t.at(i, j);
    mu /= n;
    double ss = 0.0;
    for (size_t i : rows) ss += (t.at(i, j) - mu) * (t.at(i, j) - mu);
    double sd = std::sqrt(ss / n);
    if (zero_variance(sd, mu)) {
      if (dropped) dropped->push_back(j);
      continue;
    }
    pr.cols.push_back(j);
    means.push_back(mu);
    sds.push_back(sd);
  }
  const size_t q = pr.cols.size();
  pr.mean = Eigen::Map<Eigen::VectorXd>(means.data(), q);
  pr.sd = Eigen::Map<Eigen::VectorXd>(sds.data(), q);
  Eigen::MatrixXd Z(rows.size(), q);
  Eigen::VectorXd yc(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    yc(r) = t.y[rows[r]] - pr.ymean;
    for (size_t k = 0; k < q; ++k) Z(r, k) = (t.at(rows[r], pr.cols[k]) - pr.mean(k)) / pr.sd(k);
  }
  pr.G = Z.transpose() * Z;
  pr.c = Z.transpose() * yc;
  return pr;
}

// Cyclic coordinate descent on sum (y - Zb)^2 + lambda * |b|_1 with active-set sweeps.
int descend(const Problem& pr, double lambda, Eigen::VectorXd& b, const LassoConfig& cfg, Clock::time_point deadline) {
  const Eigen::Index q = b.size();
  if (q == 0) return 0;
  Eigen::VectorXd g = pr.c - pr.G * b;
  const double half = lambda / 2.0;
  auto update = [&](Eigen::Index j) {
    double gjj = pr.G(j, j);
    double nb = soft(g(j) + gjj * b(j), half) / gjj;
    double d = nb - b(j);
    if (d != 0.0) {
      g.noalias() -= pr.G.col(j) * d;
      b(j) = nb;
    }
    return std::fabs(d);
  };
  auto check = [&] {
    if (Clock::now() > deadline) throw LinearError(LinearErrorKind::Timeout, "lasso fit exceeded the time limit");
  };
  int sweeps = 0;
  while (sweeps < cfg.max_sweeps) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) worst = std::max(worst, update(j));
    ++sweeps;
    if ((sweeps & 15) == 0) check();
    if (worst < cfg.tol) break;
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < q; ++j)
      if (b(j) != 0.0) active.push_back(j);
    // The gradient is kept current on the active set only, then rebuilt.
    const Eigen::Index k = Eigen::Index(active.size());
    Eigen::MatrixXd ga(k, k);
    Eigen::VectorXd gs(k), bs(k), diag(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index c = 0; c < k; ++c) ga(a, c) = pr.G(active[a], active[c]);
      gs(a) = g(active[a]);
      bs(a) = b(active[a]);
      diag(a) = ga(a, a);
    }
    while (sweeps < cfg.max_sweeps) {
      double w = 0.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        double nb = soft(gs(a) + diag(a) * bs(a), half) / diag(a);
        double d = nb - bs(a);
        if (d != 0.0) {
          gs.noalias() -= ga.col(a) * d;
          bs(a) = nb;
          w = std::max(w, std::fabs(d));
        }
      }
      ++sweeps;
      if ((sweeps & 15) == 0) check();
      if (w < cfg.tol) break;
    }
    for (Eigen::Index a = 0; a < k; ++a) b(active[a]) = bs(a);
    g = pr.c - pr.G * b;
  }
  return sweeps;
}

// Piecewise-linear solution path in mu = lambda / 2, entering and dropping one
// coordinate per step. Gives up on a singular active block.
class Homotopy {
 public:
  explicit Homotopy(const Problem& pr) : pr_(pr), b_(Eigen::VectorXd::Zero(pr.c.size())), g_(pr.c) {
    mu_ = pr.c.size() ? pr.c.cwiseAbs().maxCoeff() : 0.0;
  }

  const Eigen::VectorXd& b() const { return b_; }

  bool advance(double target, Clock::time_point deadline) {
    const Eigen::Index q = b_.size();
    if (q == 0) return true;
    int steps = 0;
    while (mu_ > target) {
      if (++steps > 20 * q + 100) return false;
      if ((steps & 15) == 0 && Clock::now() > deadline)
        throw LinearError(LinearErrorKind::Timeout, "lasso fit exceeded the time limit");
      if (active_.empty()) {
        Eigen::Index j = 0;
        double top = g_.cwiseAbs().maxCoeff(&j);
        if (top <= target) {
          mu_ = target;
          return true;
        }
        mu_ = top;
        enter(j);
      }
      const Eigen::Index k = Eigen::Index(active_.size());
      Eigen::MatrixXd ga(k, k);
      Eigen::VectorXd s(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index c = 0; c < k; ++c) ga(a, c) = pr_.G(active_[a], active_[c]);
        s(a) = sign_[a];
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(ga);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
      if (ldlt.vectorD().minCoeff() <= 1e-10 * ga.diagonal().maxCoeff()) return false;
      Eigen::VectorXd w = ldlt.solve(s);
      if (!((ga * w - s).norm() <= 1e-8 * std::sqrt(double(k)))) return false;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(q);
      for (Eigen::Index i = 0; i < k; ++i) a.noalias() += pr_.G.col(active_[i]) * w(i);

      double step = mu_ - target;
      Eigen::Index enter_j = -1, drop_i = -1;
      const double tiny = 1e-12 * std::max(1.0, mu_);
      for (Eigen::Index j = 0; j < q; ++j) {
        if (in_[j] || j == last_drop_) continue;
        for (double sg : {1.0, -1.0}) {
          double den = 1.0 - sg * a(j);
          if (den <= 1e-12) continue;
          double d = (mu_ - sg * g_(j)) / den;
          if (d > tiny && d < step) {
            step = d;
            enter_j = j;
          }
        }
      }
      for (Eigen::Index i = 0; i < k; ++i) {
        double bi = b_(active_[i]);
        if (w(i) != 0.0 && bi * w(i) < 0.0) {
          double d = -bi / w(i);
          if (d > tiny && d < step) {
            step = d;
            drop_i = i;
            enter_j = -1;
          }
        }
      }
      for (Eigen::Index i = 0; i < k; ++i) b_(active_[i]) += step * w(i);
      mu_ -= step;
      g_ = pr_.c - pr_.G * b_;
      last_drop_ = -1;
      if (drop_i >= 0) {
        b_(active_[drop_i]) = 0.0;
        in_[active_[drop_i]] = false;
        last_drop_ = active_[drop_i];
        active_.erase(active_.begin() + drop_i);
        sign_.erase(sign_.begin() + drop_i);
      } else if (enter_j >= 0) {
        enter(enter_j);
      }
    }
    return true;
  }

 private:
  void enter(Eigen::Index j) {
    if (in_.empty()) in_.assign(b_.size(), false);
    in_[j] = true;
    active_.push_back(j);
    sign_.push_back(g_(j) > 0 ? 1.0 : -1.0);
  }

  const Problem& pr_;
  Eigen::VectorXd b_, g_;
  double mu_ = 0.0;
  std::vector<Eigen::Index> active_;
  std::vector<double> sign_;
  std::vector<bool> in_ = std::vector<bool>(b_.size(), false);
  Eigen::Index last_drop_ = -1;
};

// Solutions for grid values in the given (descending) order: the homotopy
// point, polished by coordinate descent; descent alone once the homotopy fails.
template <class F>
int solve_path(const Problem& pr, const std::vector<double>& grid, const std::vector<size_t>& order,
               const LassoConfig& cfg, Clock::time_point deadline, F&& each) {
  Homotopy h(pr);
  bool exact = true;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(pr.cols.size());
  int sweeps = 0;
  for (size_t li : order) {
    if (exact) {
      exact = h.advance(grid[li] / 2.0, deadline);
      if (exact) b = h.b();
    }
    int sw = descend(pr, grid[li], b, cfg, deadline);
    sweeps += sw;
    if (!each(li, b, sw)) break;
  }
  return sweeps;
}

LassoFit to_raw(const Problem& pr, const Eigen::VectorXd& b, size_t p, double lambda) {
  LassoFit f;
  f.lambda = lambda;
  f.beta.assign(p, 0.0);
  f.beta0 = pr.ymean;
  for (size_t k = 0; k < pr.cols.size(); ++k) {
    double raw = b(k) / pr.sd(k);
    f.beta[pr.cols[k]] = raw;
    f.beta0 -= raw * pr.mean(k);
  }
  return f;
}

std::vector<size_t> descending_order(const std::vector<double>& lambdas) {
  std::vector<size_t> idx(lambdas.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return lambdas[a] > lambdas[b]; });
  return idx;
}

std::vector<size_t> all_rows(size_t n) {
  std::vector<size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

double predict(const LassoFit& f, const TrainingSet& t, size_t i) {
  double s = f.beta0;
  for (size_t j = 0; j < t.p; ++j)
    if (f.beta[j] != 0.0) s += f.beta[j] * t.at(i, j);
  return s;
}

bool tied(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b)) + 1e-15; }

}  // namespace

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Small: return "small";
    case Tier::Medium: return "medium";
    case Tier::Large: return "large";
  }
  return "?";
}

const FeatureSet& Catalog::at(Tier t) const {
  switch (t) {
    case Tier::Small: return small;
    case Tier::Medium: return medium;
    default: return large;
  }
}

Catalog catalog(const std::vector<std::string>& params, size_t cap) {
  Catalog c;
  c.small.tier = Tier::Small;
  c.medium.tier = Tier::Medium;
  c.large.tier = Tier::Large;
  const size_t m = params.size();
  if (m == 0) return c;
  std::vector<Expr> s, md, lg;
  if (m == 1) {
    s = over_all({"x", "x^2"}, params);
    md = over_all({"ceil(log2(x))", "floor(sqrt(x))", "x * ceil(log2(x))"}, params);
    lg = over_all({"floor(log2(x))", "x * floor(log2(x))", "2^x", "5^x", "x * 2^x", "fact(x)"}, params);
  } else if (m == 2) {
    s = over_all({"x", "y"}, params);
    md = over_all({"x^2", "x * y", "y^2", "x^2 * y", "x * y^2", "x^2 * y^2"}, params);
    lg = over_all({"floor(x / y)", "floor(y / x)", "ceil(x / y)", "ceil(y / x)", "2^x", "2^y", "max(x, y)",
                   "ceil(log2(x))", "floor(log2(x))", "x * ceil(log2(x))", "x * floor(log2(x))", "ceil(log2(y))",
                   "floor(log2(y))", "y * ceil(log2(y))", "y * floor(log2(y))"},
                  params);
  } else {
    c.small.funcs = product_catalog(params, 1, cap);
    c.medium.funcs = product_catalog(params, 2, cap);
    c.large.funcs = product_catalog(params, 3, cap);
    return c;
  }
  c.small.funcs = s;
  c.medium.funcs = s;
  c.medium.funcs.insert(c.medium.funcs.end(), md.begin(), md.end());
  c.large.funcs = c.medium.funcs;
  c.large.funcs.insert(c.large.funcs.end(), lg.begin(), lg.end());
  return c;
}

std::vector<double> feature_row(const std::vector<Expr>& funcs, const Env& env) {
  std::vector<double> row;
  row.reserve(funcs.size());
  EvalOptions g{true};
  for (const auto& f : funcs) {
    try {
      row.push_back(eval_ground(f, env, g).to_double());
    } catch (const EvalError&) {
      row.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return row;
}

TrainingSet build_training_set(const FeatureSet& fs, const std::vector<std::string>& params,
                               const std::vector<Point>& samples, const std::vector<double>& values,
                               const std::vector<int>& fold_of) {
  TrainingSet t;
  t.p = fs.size();
  for (size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> row = feature_row(fs.funcs, make_env(params, samples[i]));
    bool finite = std::isfinite(values[i]);
    for (double v : row) finite = finite && std::isfinite(v);
    if (!finite) {
      ++t.dropped;
      continue;
    }
    t.x.insert(t.x.end(), row.begin(), row.end());
    t.y.push_back(values[i]);
    t.inputs.push_back(samples[i]);
    if (i < fold_of.size()) t.fold_of.push_back(fold_of[i]);
  }
  if (t.rows() == 0) throw LinearError(LinearErrorKind::EmptyTrainingSet, "no usable training rows");
  return t;
}

std::vector<double> default_lambdas() {
  std::vector<double> out(100);
  for (int i = 0; i < 100; ++i) out[i] = std::pow(10.0, -3.0 + 3.0 * i / 99.0);
  return out;
}

std::vector<LassoFit> lasso_path(const TrainingSet& t, const std::vector<double>& lambdas, const LassoConfig& cfg) {
  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.timeout));
  std::vector<size_t> dropped;
  Problem pr = make_problem(t, all_rows(t.rows()), &dropped);
  std::vector<LassoFit> out(lambdas.size());
  solve_path(pr, lambdas, descending_order(lambdas), cfg, deadline,
             [&](size_t k, const Eigen::VectorXd& b, int sweeps) {
               out[k] = to_raw(pr, b, t.p, lambdas[k]);
               out[k].dropped = dropped;
               out[k].sweeps = sweeps;
               return true;
             });
  return out;
}

LassoFit cv_lasso(const TrainingSet& t, const LassoConfig& cfg) {
  if (t.rows() == 0) throw LinearError(LinearErrorKind::EmptyTrainingSet, "no training rows");
  const std::vector<double> grid = cfg.lambdas.empty() ? default_lambdas() : cfg.lambdas;
  const auto order = descending_order(grid);
  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.timeout));
  const int k = std::max(2, cfg.folds);

  std::vector<int> fold(t.rows());
  for (size_t i = 0; i < t.rows(); ++i) fold[i] = t.fold_of.size() == t.rows() ? t.fold_of[i] : int(i % k);

  std::vector<double> mse(grid.size(), 0.0);
  int used_folds = 0;
  for (int f = 0; f < k; ++f) {
    std::vector<size_t> tr, va;
    for (size_t i = 0; i < t.rows(); ++i) (fold[i] == f ? va : tr).push_back(i);
    if (va.empty() || tr.size() < 2) continue;
    ++used_folds;
    Problem pr = make_problem(t, tr, nullptr);
    solve_path(pr, grid, order, cfg, deadline, [&](size_t li, const Eigen::VectorXd& b, int) {
      LassoFit fit = to_raw(pr, b, t.p, grid[li]);
      double s = 0.0;
      for (size_t i : va) {
        double r = t.y[i] - predict(fit, t, i);
        s += r * r;
      }
      mse[li] += s / va.size();
      return true;
    });
  }
  if (used_folds > 0)
    for (auto& v : mse) v /= used_folds;

  size_t best = order.front();
  for (size_t li : order)
    if (mse[li] < mse[best] && !tied(mse[li], mse[best])) best = li;

  std::vector<size_t> dropped;
  Problem pr = make_problem(t, all_rows(t.rows()), &dropped);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(pr.cols.size());
  int sweeps = solve_path(pr, grid, order, cfg, deadline, [&](size_t li, const Eigen::VectorXd& sol, int) {
    b = sol;
    return li != best;
  });
  LassoFit out = to_raw(pr, b, t.p, grid[best]);
  out.dropped = dropped;
  out.cv_mse = mse;
  out.sweeps = sweeps;
  return out;
}

PruneResult prune(const std::vector<double>& beta, double eps) {
  PruneResult r;
  for (size_t j = 0; j < beta.size(); ++j)
    if (std::fabs(beta[j]) >= eps) r.kept.push_back(j);
  r.all_pruned = r.kept.empty() && !beta.empty();
  return r;
}

TrainingSet select_columns(const TrainingSet& t, const std::vector<size_t>& cols) {
  TrainingSet s;
  s.p = cols.size();
  s.y = t.y;
  s.inputs = t.inputs;
  s.fold_of = t.fold_of;
  s.dropped = t.dropped;
  s.x.reserve(t.rows() * cols.size());
  for (size_t i = 0; i < t.rows(); ++i)
    for (size_t j : cols) s.x.push_back(t.at(i, j));
  return s;
}

double r_squared(const std::vector<double>& y, const std::vector<double>& pred) {
  if (y.empty()) return 0.0;
  double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(pred[i])) return std::numeric_limits<double>::lowest();
    ss_res += (y[i] - pred[i]) * (y[i] - pred[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res <= 1e-18 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

LinearModel ols_refit(const TrainingSet& train, const std::vector<Expr>& selected, const TrainingSet* test) {
  LinearModel m;
  m.selected = selected;
  const size_t n = train.rows(), q = train.p;
  Eigen::MatrixXd X(n, q + 1);
  Eigen::VectorXd y(n);
  for (size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (size_t j = 0; j < q; ++j) X(i, j + 1) = train.at(i, j);
    y(i) = train.y[i];
  }
  Eigen::VectorXd scale = X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale(j) == 0.0) scale(j) = 1.0;
  Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  Eigen::MatrixXd A = Xs.transpose() * Xs;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  auto singular = [&] {
    if (ldlt.info() != Eigen::Success) return true;
    Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    return d.minCoeff() <= 1e-13 * std::max(1.0, d.maxCoeff());
  };
  if (singular()) {
    A.diagonal().array() += 1e-10;
    ldlt.compute(A);
  }
  Eigen::VectorXd w = ldlt.solve(Xs.transpose() * y);
  for (int it = 0; it < 3; ++it) {
    Eigen::VectorXd r = y - Xs * w;
    w += ldlt.solve(Xs.transpose() * r);
  }
  Eigen::VectorXd beta = w.cwiseQuotient(scale);
  m.beta0 = beta(0);
  m.beta.assign(beta.data() + 1, beta.data() + beta.size());

  const TrainingSet& eval = (test && test->rows() > 0) ? *test : train;
  std::vector<double> pred(eval.rows());
  for (size_t i = 0; i < eval.rows(); ++i) {
    double s = m.beta0;
    for (size_t j = 0; j < q; ++j) s += m.beta[j] * eval.at(i, j);
    pred[i] = s;
  }
  m.score = r_squared(eval.y, pred);
  return m;
}

std::optional<mpq_class> rationalize_value(double v, double tol, long max_den) {
  if (!std::isfinite(v)) return std::nullopt;
  if (std::fabs(v) <= tol) return mpq_class(0);
  mpz_class h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  double x = v;
  for (int it = 0; it < 64; ++it) {
    double a = std::floor(x);
    if (std::fabs(a) > 1e18) break;
    mpz_class ai(a);
    mpz_class h = ai * h1 + h2, k = ai * k1 + k2;
    if (k > max_den) break;
    mpq_class r(h, k);
    r.canonicalize();
    if (std::fabs(v - r.get_d()) <= tol * std::fabs(v)) return r;
    double frac = x - a;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = k;
  }
  return std::nullopt;
}

Piece rationalize(const LinearModel& m, const BoolExpr& domain, double tol) {
  Piece piece;
  piece.domain = domain;
  std::optional<Expr> acc;
  auto coef = [&](double c) -> std::optional<mpq_class> {
    if (std::fabs(c) <= tol) return std::nullopt;
    auto r = rationalize_value(c, tol);
    if (r) return *r;
    piece.exact = false;
    return exact_rational(c);
  };
  auto add = [&](const mpq_class& c, const std::optional<Expr>& t) {
    if (!acc) {
      acc = t ? Expr::constant(c) * *t : Expr::constant(c);
      return;
    }
    mpq_class mag = abs(c);
    Expr term = t ? Expr::constant(mag) * *t : Expr::constant(mag);
    acc = c < 0 ? *acc - term : *acc + term;
  };
  for (size_t j = 0; j < m.beta.size(); ++j)
    if (auto c = coef(m.beta[j])) add(*c, m.selected[j]);
  if (auto c = coef(m.beta0)) add(*c, std::nullopt);
  piece.body = acc ? *acc : Expr::constant(0L);
  piece.score = m.score;
  return piece;
}

double score_expr(const Expr& body, const std::vector<std::string>& params, const std::vector<Point>& pts,
                  const std::vector<double>& y) {
  std::vector<double> pred(pts.size());
  EvalOptions g{true};
  for (size_t i = 0; i < pts.size(); ++i) {
    try {
      pred[i] = eval_ground(body, make_env(params, pts[i]), g).to_double();
    } catch (const EvalError&) {
      return std::numeric_limits<double>::lowest();
    }
  }
  return r_squared(y, pred);
}

std::optional<Piece> fit_dataset(const Dataset& ds, const LinearConfig& cfg, PieceReport& rep) {
  rep.bound = ds.bound;
  rep.bound_fallback = ds.choice.fallback;
  rep.shortfall = ds.shortfall;
  rep.no_test = ds.no_test;
  rep.floored = ds.floored;
  rep.train_rows = ds.train.size();
  rep.test_rows = ds.test.size();
  if (ds.train.empty()) {
    rep.error = "EmptyTrainingSet: every sampled evaluation failed";
    return std::nullopt;
  }
  const BoolExpr domain = simplify(ds.domain);
  const std::vector<Point>& score_pts = ds.test.empty() ? ds.train : ds.test;
  const std::vector<double>& score_y = ds.test.empty() ? ds.train_y : ds.test_y;
  const Catalog cat = catalog(ds.params, cfg.max_features);

  std::optional<Piece> best;
  size_t best_terms = 0;
  for (Tier tier : cfg.tiers) {
    const FeatureSet& fs = cat.at(tier);
    TierReport tr;
    tr.tier = tier;
    tr.features = fs.size();
    auto t0 = Clock::now();
    try {
      if (fs.size() > cfg.max_features)
        throw LinearError(LinearErrorKind::TooManyFeatures, std::to_string(fs.size()) + " base functions");
      TrainingSet train = build_training_set(fs, ds.params, ds.train, ds.train_y, ds.fold_of);
      std::vector<size_t> cols;
      if (train.rows() >= static_cast<size_t>(cfg.lasso.folds) + 1) {
        LassoFit fit = cv_lasso(train, cfg.lasso);
        tr.lambda = fit.lambda;
        cols = prune(fit.beta, cfg.lasso.epsilon).kept;
      }
      std::vector<Expr> selected;
      for (size_t j : cols) selected.push_back(fs.funcs[j]);
      TrainingSet sub = select_columns(train, cols);
      std::optional<TrainingSet> test;
      if (!ds.test.empty()) {
        try {
          test = select_columns(build_training_set(fs, ds.params, ds.test, ds.test_y), cols);
        } catch (const LinearError&) {
        }
      }
      LinearModel model = ols_refit(sub, selected, test ? &*test : nullptr);
      Piece piece = rationalize(model, domain, cfg.rational_tol);
      piece.score = score_expr(piece.body, ds.params, score_pts, score_y);
      size_t terms = 0;
      for (double b : model.beta)
        if (std::fabs(b) > cfg.rational_tol) ++terms;
      tr.selected = terms;
      tr.score = piece.score;
      bool better = !best || piece.score > best->score + 1e-12 ||
                    (std::fabs(piece.score - best->score) <= 1e-12 && terms < best_terms);
      if (better) {
        best = piece;
        best_terms = terms;
        rep.chosen = tier;
      }
    } catch (const LinearError& e) {
      tr.error = e.what();
    }
    tr.seconds = seconds_since(t0);
    rep.tiers.push_back(tr);
  }
  if (!best) rep.error = "no tier produced a model";
  return best;
}

LinearGuess guess_linear(const RecurrenceSystem& sys, const std::string& func, const LinearConfig& cfg,
                         const SampleConfig& scfg, bool domsplit) {
  const FuncDef* f = sys.find(func);
  if (!f) throw ModelError("unknown function " + func);
  const std::vector<Subdomain> doms = regression_domains(*f, domsplit);

  LinearGuess out;
  bool failed = false;
  double worst = 1.0;
  for (size_t i = 0; i < doms.size(); ++i) {
    PieceReport rep;
    rep.domain = doms[i].constraint;
    rep.case_index = doms[i].case_index;
    auto t0 = Clock::now();
    Dataset ds;
    try {
      ds = build_dataset(sys, func, doms[i].constraint, scfg, cfg.lasso.folds, i);
    } catch (const SampleError& e) {
      out.sample_seconds += seconds_since(t0);
      rep.error = std::string("EmptyDomain: ") + e.what();
      // an infeasible subdomain needs no piece
      if (!domsplit) failed = true;
      out.pieces.push_back(rep);
      continue;
    }
    out.sample_seconds += seconds_since(t0);
    auto t1 = Clock::now();
    auto piece = fit_dataset(ds, cfg, rep);
    out.fit_seconds += seconds_since(t1);
    if (piece) {
      worst = std::min(worst, piece->score);
      out.cf.pieces.push_back(*piece);
    } else {
      failed = true;
    }
    out.pieces.push_back(rep);
  }
  out.cf.score = out.cf.pieces.empty() ? 0.0 : worst;
  if (failed) out.cf.score = std::min(out.cf.score, 0.0);
  return out;
}

}  // namespace recsolve
