#pragma once

#include "svem/fractional_bootstrap.hpp"

#include <Eigen/Dense>

#include <vector>

namespace svem {

// One fitted base model. `coefficients` is aligned with the model-matrix
// columns; the intercept column's entry is zero and the intercept is held
// separately, so a prediction is intercept + x' * coefficients.
struct FitResult {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  // Forward selection: number of terms added to the intercept-only model.
  // Lasso: index into the lambda grid.
  int tuning_index = 0;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return intercept + row.dot(coefficients.transpose());
  }
};

// Minimizes sum_i w_i (y_i - x_i' b)^2. A rank-deficient weighted Gram matrix
// gets ridge jitter 1e-10 * trace / k; SingularSystemError if that fails too.
Eigen::VectorXd weighted_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                       const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const Eigen::Ref<const Eigen::VectorXd>& w);

// Greedy forward selection trained on weights.train and tuned on
// weights.valid. Reusable: buffers are kept between fits, so one instance per
// thread avoids per-fit allocation.
class ForwardSelection {
 public:
  struct Path {
    std::vector<Eigen::Index> order;      // columns in entry order
    std::vector<double> train_sse;        // per step, step 0 = intercept only
    std::vector<double> valid_sse;
  };

  // X must contain the intercept column at `intercept_column`.
  FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, const WeightPair& weights,
                Eigen::Index intercept_column, Path* path = nullptr);

 private:
  Eigen::MatrixXd z_;
  Eigen::VectorXd sw_, r_, q_, a_, c_, nz_, orig_;
  std::vector<char> used_;
};

FitResult forward_selection_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const WeightPair& weights, Eigen::Index intercept_column = 0);

struct LassoOptions {
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  // Coordinate descent stops when max |delta beta_j| < tolerance * sd(y).
  double tolerance = 1e-7;
  int max_sweeps = 100000;
  // Record the penalized objective after every sweep (testing aid).
  bool track_objective = false;
};

// Weighted Lasso: columns standardized by training-weighted mean/sd, the
// intercept unpenalized, objective
//   sum_i w_i (y_i - x_i' b)^2 / (2 sum w) + lambda * ||b_slopes||_1.
class LassoPath {
 public:
  explicit LassoPath(LassoOptions options = {}) : options_(options) {}

  struct Trace {
    std::vector<double> lambdas;
    std::vector<double> valid_sse;
    std::vector<FitResult> solutions;  // original scale, one per lambda
    std::vector<double> objective;     // per sweep, when tracked
  };

  // Fits the geometric lambda grid and returns the solution with the lowest
  // validation-weighted SSE. ConvergenceError carries the lambda index.
  FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, const WeightPair& weights,
                Eigen::Index intercept_column, Trace* trace = nullptr);

  // Solution at a single lambda, training weights only, cold start.
  FitResult solve(const Eigen::Ref<const Eigen::MatrixXd>& X,
                  const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Eigen::Ref<const Eigen::VectorXd>& w, double lambda,
                  Eigen::Index intercept_column, Trace* trace = nullptr);

  // Smallest lambda at which every slope is zero, for the training weights.
  double lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& X,
                    const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& w, Eigen::Index intercept_column);

 private:
  void standardize(const Eigen::Ref<const Eigen::MatrixXd>& X,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& w, Eigen::Index intercept_column);
  // Runs coordinate descent at `lambda` starting from beta_; returns sweeps.
  int descend(double lambda, int lambda_index, Trace* trace);
  // Moves beta_ toward the minimizer on its current support and sign
  // pattern without leaving the orthant. Never increases the objective.
  void refine_support(double lambda);
  double objective(double lambda) const;
  FitResult to_original_scale() const;

  LassoOptions options_;
  // Standardized problem over the penalized (non-constant) columns.
  std::vector<Eigen::Index> cols_;
  Eigen::Index p_ = 0;
  Eigen::MatrixXd xs_;     // n x m standardized columns
  Eigen::MatrixXd gram_;   // m x m weighted Gram / sum w
  Eigen::VectorXd corr_;   // m, weighted x'(y - ybar) / sum w
  Eigen::VectorXd grad_;   // corr - gram * beta
  Eigen::VectorXd beta_;
  Eigen::VectorXd mean_, scale_;
  std::vector<char> active_;
  std::vector<Eigen::Index> support_;
  Eigen::MatrixXd sub_gram_;
  Eigen::VectorXd sub_step_;
  Eigen::LLT<Eigen::MatrixXd> sub_llt_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sub_eigen_;
  double ybar_ = 0.0;
  double ysd_ = 0.0;
  double yss_ = 0.0;  // weighted sum of squares of y - ybar, / sum w
};

FitResult lasso_path_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const WeightPair& weights,
                         Eigen::Index intercept_column = 0);

}  // namespace svem
