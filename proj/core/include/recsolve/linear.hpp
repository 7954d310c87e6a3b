#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "recsolve/sampler.hpp"

namespace recsolve {

enum class Tier { Small, Medium, Large };
const char* tier_name(Tier t);

struct FeatureSet {
  Tier tier = Tier::Small;
  std::vector<Expr> funcs;  // base functions t_i over the parameters

  size_t size() const { return funcs.size(); }
};

struct Catalog {
  FeatureSet small, medium, large;

  const FeatureSet& at(Tier t) const;
};

// Fixed lists for one and two parameters; bounded products of per-variable
// powers for three or more. A product tier larger than cap is cut off at
// cap + 1 terms.
Catalog catalog(const std::vector<std::string>& params, size_t cap = SIZE_MAX);

struct TrainingSet {
  size_t p = 0;
  std::vector<double> x;  // row-major, rows() by p
  std::vector<double> y;
  std::vector<Point> inputs;
  std::vector<int> fold_of;
  size_t dropped = 0;  // rows removed for a non-finite feature

  size_t rows() const { return y.size(); }
  double at(size_t i, size_t j) const { return x[i * p + j]; }
};

enum class LinearErrorKind { EmptyTrainingSet, Timeout, TooManyFeatures };

class LinearError : public std::runtime_error {
 public:
  LinearError(LinearErrorKind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  LinearErrorKind kind() const { return kind_; }

 private:
  LinearErrorKind kind_;
};

// Guarded evaluation of each base function; NaN where evaluation fails.
std::vector<double> feature_row(const std::vector<Expr>& funcs, const Env& env);

TrainingSet build_training_set(const FeatureSet& fs, const std::vector<std::string>& params,
                               const std::vector<Point>& samples, const std::vector<double>& values,
                               const std::vector<int>& fold_of = {});

struct LassoConfig {
  std::vector<double> lambdas;  // empty selects default_lambdas()
  int folds = 2;
  double epsilon = 0.05;
  double timeout = 10.0;  // seconds per candidate set
  double tol = 1e-8;
  int max_sweeps = 10000;
};

// 100 values geometrically spaced over [0.001, 1].
std::vector<double> default_lambdas();

struct LassoFit {
  std::vector<double> beta;  // raw feature scale
  double beta0 = 0.0;
  double lambda = 0.0;
  std::vector<size_t> dropped;  // zero-variance columns, held at 0
  std::vector<double> cv_mse;   // aligned with the lambda grid (cv_lasso only)
  int sweeps = 0;
};

// Fits at each lambda on all rows, warm-started along decreasing lambda.
// Results are returned in the order of `lambdas`.
std::vector<LassoFit> lasso_path(const TrainingSet& t, const std::vector<double>& lambdas,
                                 const LassoConfig& cfg = {});

// Chooses lambda by k-fold validation MSE, then refits on all rows.
LassoFit cv_lasso(const TrainingSet& t, const LassoConfig& cfg = {});

struct PruneResult {
  std::vector<size_t> kept;
  bool all_pruned = false;
};

PruneResult prune(const std::vector<double>& beta, double eps);
TrainingSet select_columns(const TrainingSet& t, const std::vector<size_t>& cols);

struct LinearModel {
  double beta0 = 0.0;
  std::vector<double> beta;
  std::vector<Expr> selected;
  double score = 0.0;  // R² on the test rows, or on the training rows when there are none
};

// R² = 1 - SS_res / SS_tot; 1 when SS_tot = 0 and SS_res <= 1e-18, otherwise 0 on constant targets.
double r_squared(const std::vector<double>& y, const std::vector<double>& pred);

LinearModel ols_refit(const TrainingSet& train, const std::vector<Expr>& selected, const TrainingSet* test = nullptr);

// Smallest-denominator continued-fraction convergent within tol * |v| of v.
std::optional<mpq_class> rationalize_value(double v, double tol = 1e-4, long max_den = 64);

// beta0 + sum beta_i * t_i with rational coefficients where possible.
Piece rationalize(const LinearModel& m, const BoolExpr& domain, double tol = 1e-4);

double score_expr(const Expr& body, const std::vector<std::string>& params, const std::vector<Point>& pts,
                  const std::vector<double>& y);

struct LinearConfig {
  LassoConfig lasso;
  double rational_tol = 1e-4;
  size_t max_features = 1500;
  std::vector<Tier> tiers = {Tier::Small, Tier::Medium, Tier::Large};
};

struct TierReport {
  Tier tier = Tier::Small;
  size_t features = 0;
  size_t selected = 0;
  double lambda = 0.0;
  double score = 0.0;
  double seconds = 0.0;
  std::string error;
};

struct PieceReport {
  BoolExpr domain;
  size_t case_index = 0;
  int bound = 0;
  bool bound_fallback = false;
  bool shortfall = false;
  bool no_test = false;
  bool floored = false;
  size_t train_rows = 0;
  size_t test_rows = 0;
  std::optional<Tier> chosen;
  std::vector<TierReport> tiers;
  std::string error;  // set when the piece is absent
};

struct LinearGuess {
  PiecewiseClosedForm cf;
  std::vector<PieceReport> pieces;
  double sample_seconds = 0.0;
  double fit_seconds = 0.0;
};

// Fits every tier on one dataset and keeps the best rationalized piece.
std::optional<Piece> fit_dataset(const Dataset& ds, const LinearConfig& cfg, PieceReport& rep);

LinearGuess guess_linear(const RecurrenceSystem& sys, const std::string& func, const LinearConfig& cfg,
                         const SampleConfig& scfg, bool domsplit);

}  // namespace recsolve
