#include "svem/base_learners.hpp"

#include "svem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace svem {

namespace {

// A candidate whose weighted residual norm falls below this fraction of its
// original weighted norm is treated as collinear with the current model.
constexpr double kCollinearTol = 1e-10;

void check_weights(const Eigen::Ref<const Eigen::VectorXd>& w, Eigen::Index n, const char* what) {
  if (w.size() != n) throw DomainError(std::string(what) + " weight vector has the wrong length");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(w(i) > 0.0) || !std::isfinite(w(i)))
      throw DomainError(std::string(what) + " weights must be positive and finite");
}

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

}  // namespace

Eigen::VectorXd weighted_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                       const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const Eigen::Ref<const Eigen::VectorXd>& w) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (k < 1) throw DomainError("weighted least squares needs at least one column");
  if (y.size() != n) throw DomainError("response length does not match the design");
  check_weights(w, n, "least-squares");

  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd A = sw.asDiagonal() * X;
  const Eigen::VectorXd b = sw.cwiseProduct(y);
  if (n >= k) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() == k) return qr.solve(b);
  }
  Eigen::MatrixXd gram = A.transpose() * A;
  const double trace = gram.trace();
  if (!(trace > 0.0) || !std::isfinite(trace))
    throw SingularSystemError("weighted Gram matrix is zero or not finite");
  gram.diagonal().array() += 1e-10 * trace / static_cast<double>(k);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw SingularSystemError("weighted Gram matrix is singular after ridge jitter");
  Eigen::VectorXd beta = llt.solve(A.transpose() * b);
  if (!beta.allFinite()) throw SingularSystemError("weighted least squares produced non-finite coefficients");
  return beta;
}

FitResult ForwardSelection::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const WeightPair& weights, Eigen::Index intercept_column,
                                Path* path) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw DomainError("response length does not match the design");
  if (intercept_column < 0 || intercept_column >= p)
    throw DomainError("forward selection needs an intercept column");
  check_weights(weights.train, n, "training");
  check_weights(weights.valid, n, "validation");

  const Eigen::VectorXd& wt = weights.train;
  const Eigen::VectorXd& wv = weights.valid;
  const double mean = wt.dot(y) / wt.sum();

  // Everything below lives in the sqrt(w)-scaled space, where the weighted
  // fit is an ordinary projection.
  sw_ = wt.array().sqrt();
  r_ = sw_.array() * (y.array() - mean);
  q_ = sw_ / sw_.norm();
  z_.noalias() = sw_.asDiagonal() * X;
  orig_ = z_.colwise().squaredNorm().transpose();
  a_.noalias() = z_.transpose() * q_;
  z_.noalias() -= q_ * a_.transpose();

  used_.assign(static_cast<std::size_t>(p), 0);
  used_[static_cast<std::size_t>(intercept_column)] = 1;

  auto valid_sse = [&] { return (wv.array() * (r_.array() / sw_.array()).square()).sum(); };

  std::vector<Eigen::Index> order;
  const Eigen::Index max_steps = std::min(p - 1, n - 1);
  order.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(max_steps, 0)));
  double best_valid = valid_sse();
  std::size_t best_step = 0;
  if (path) {
    path->order.clear();
    path->train_sse.assign(1, r_.squaredNorm());
    path->valid_sse.assign(1, best_valid);
  }

  for (Eigen::Index step = 1; step <= max_steps; ++step) {
    c_.noalias() = z_.transpose() * r_;
    nz_ = z_.colwise().squaredNorm().transpose();
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (used_[static_cast<std::size_t>(j)]) continue;
      if (!(nz_(j) > kCollinearTol * orig_(j))) continue;
      double score = c_(j) * c_(j) / nz_(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) break;
    used_[static_cast<std::size_t>(best)] = 1;
    order.push_back(best);
    const double norm = std::sqrt(nz_(best));
    q_ = z_.col(best) / norm;
    r_ -= q_ * (c_(best) / norm);
    a_.noalias() = z_.transpose() * q_;
    z_.noalias() -= q_ * a_.transpose();

    double vs = valid_sse();
    if (path) {
      path->train_sse.push_back(r_.squaredNorm());
      path->valid_sse.push_back(vs);
    }
    if (vs < best_valid) {
      best_valid = vs;
      best_step = order.size();
    }
  }
  if (path) path->order = order;

  // Full weighted refit of the chosen path model.
  Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(best_step) + 1);
  sub.col(0) = X.col(intercept_column);
  for (std::size_t s = 0; s < best_step; ++s)
    sub.col(static_cast<Eigen::Index>(s) + 1) = X.col(order[s]);
  Eigen::VectorXd beta = weighted_least_squares(sub, y, wt);

  FitResult out;
  out.coefficients = Eigen::VectorXd::Zero(p);
  // The intercept column is all ones; its coefficient becomes the intercept.
  out.intercept = beta(0);
  for (std::size_t s = 0; s < best_step; ++s)
    out.coefficients(order[s]) = beta(static_cast<Eigen::Index>(s) + 1);
  out.tuning_index = static_cast<int>(best_step);
  return out;
}

FitResult forward_selection_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const WeightPair& weights, Eigen::Index intercept_column) {
  ForwardSelection fs;
  return fs.fit(X, y, weights, intercept_column);
}

void LassoPath::standardize(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::VectorXd>& w,
                            Eigen::Index intercept_column) {
  const Eigen::Index n = X.rows();
  p_ = X.cols();
  if (y.size() != n) throw DomainError("response length does not match the design");
  if (intercept_column < 0 || intercept_column >= p_)
    throw DomainError("lasso needs an intercept column");
  check_weights(w, n, "training");

  const double wsum = w.sum();
  ybar_ = w.dot(y) / wsum;
  Eigen::VectorXd yc = y.array() - ybar_;
  yss_ = w.dot(yc.cwiseAbs2()) / wsum;
  ysd_ = std::sqrt(yss_);

  cols_.clear();
  std::vector<double> means;
  std::vector<double> sds;
  for (Eigen::Index j = 0; j < p_; ++j) {
    if (j == intercept_column) continue;
    const double m = w.dot(X.col(j)) / wsum;
    const double var = (w.array() * (X.col(j).array() - m).square()).sum() / wsum;
    const double sd = std::sqrt(var);
    const double mag = X.col(j).cwiseAbs().maxCoeff();
    if (!(sd > 1e-10 * mag)) continue;  // constant under these weights
    cols_.push_back(j);
    means.push_back(m);
    sds.push_back(sd);
  }
  const auto m = static_cast<Eigen::Index>(cols_.size());
  mean_ = Eigen::Map<Eigen::VectorXd>(means.data(), m);
  scale_ = Eigen::Map<Eigen::VectorXd>(sds.data(), m);
  xs_.resize(n, m);
  for (Eigen::Index k = 0; k < m; ++k)
    xs_.col(k) = (X.col(cols_[static_cast<std::size_t>(k)]).array() - mean_(k)) / scale_(k);
  const Eigen::VectorXd wn = w / wsum;
  gram_.noalias() = xs_.transpose() * (wn.asDiagonal() * xs_);
  corr_.noalias() = xs_.transpose() * wn.cwiseProduct(yc);
  beta_ = Eigen::VectorXd::Zero(m);
  grad_ = corr_;
  active_.assign(static_cast<std::size_t>(m), 0);
}

double LassoPath::objective(double lambda) const {
  // 0.5 * (yss - 2 c'b + b'Gb) with b'Gb = c'b - g'b.
  return 0.5 * (yss_ - corr_.dot(beta_) - grad_.dot(beta_)) + lambda * beta_.lpNorm<1>();
}

constexpr int kRefineEvery = 5;

int LassoPath::descend(double lambda, int lambda_index, Trace* trace) {
  const Eigen::Index m = beta_.size();
  const double tol = options_.tolerance * ysd_;
  int sweeps = 0;
  auto sweep = [&](bool active_only) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (active_only && !active_[static_cast<std::size_t>(j)]) continue;
      const double gjj = gram_(j, j);
      const double z = grad_(j) + gjj * beta_(j);
      const double updated = soft_threshold(z, lambda) / gjj;
      const double delta = updated - beta_(j);
      if (delta != 0.0) {
        grad_.noalias() -= gram_.col(j) * delta;
        beta_(j) = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
      active_[static_cast<std::size_t>(j)] = updated != 0.0 ? 1 : active_[static_cast<std::size_t>(j)];
    }
    if (trace && options_.track_objective) trace->objective.push_back(objective(lambda));
    if (++sweeps > options_.max_sweeps)
      throw ConvergenceError("lasso coordinate descent did not converge at lambda index " +
                                 std::to_string(lambda_index),
                             lambda_index);
    return max_delta;
  };
  for (;;) {
    if (sweep(false) <= tol) break;
    int inner = 0;
    while (sweep(true) > tol)
      if (++inner % kRefineEvery == 0) refine_support(lambda);
  }
  return sweeps;
}

void LassoPath::refine_support(double lambda) {
  const Eigen::Index m = beta_.size();
  for (Eigen::Index guard = 0; guard < m; ++guard) {
    support_.clear();
    for (Eigen::Index j = 0; j < m; ++j)
      if (beta_(j) != 0.0) support_.push_back(j);
    const auto k = static_cast<Eigen::Index>(support_.size());
    if (k == 0) return;
    sub_gram_.resize(k, k);
    Eigen::VectorXd r(k);  // minus the gradient of the objective on this face
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index ja = support_[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < k; ++b)
        sub_gram_(a, b) = gram_(ja, support_[static_cast<std::size_t>(b)]);
      r(a) = grad_(ja) - lambda * (beta_(ja) > 0.0 ? 1.0 : -1.0);
    }
    double max_step = 1.0;
    sub_llt_.compute(sub_gram_);
    if (sub_llt_.info() == Eigen::Success && sub_llt_.rcond() > 1e-10) {
      sub_step_ = sub_llt_.solve(r);
    } else {
      sub_eigen_.compute(sub_gram_);
      if (sub_eigen_.info() != Eigen::Success) return;
      const auto& ev = sub_eigen_.eigenvalues();
      const auto& V = sub_eigen_.eigenvectors();
      const double cutoff = std::max(ev.maxCoeff(), 0.0) * 1e-10;
      const Eigen::VectorXd proj = V.transpose() * r;
      // Null-space part of r: the objective falls linearly along it, so
      // follow it to the boundary. Otherwise take the minimum-norm step.
      Eigen::VectorXd null_part = Eigen::VectorXd::Zero(k);
      for (Eigen::Index i = 0; i < k; ++i)
        if (ev(i) <= cutoff) null_part.noalias() += V.col(i) * proj(i);
      if (null_part.norm() > 1e-12 * r.norm()) {
        sub_step_ = null_part;
        max_step = std::numeric_limits<double>::infinity();
      } else {
        sub_step_ = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < k; ++i)
          if (ev(i) > cutoff) sub_step_.noalias() += V.col(i) * (proj(i) / ev(i));
      }
    }
    if (!sub_step_.allFinite()) return;

    // Largest step before a coefficient reaches zero.
    double step = max_step;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < k; ++a) {
      const double cur = beta_(support_[static_cast<std::size_t>(a)]);
      const double d = sub_step_(a);
      if (d == 0.0 || (cur > 0.0) == (d > 0.0)) continue;
      const double t = -cur / d;
      if (t < step) {
        step = t;
        blocking = a;
      }
    }
    if (!std::isfinite(step)) return;
    const double before = objective(lambda);
    const Eigen::VectorXd saved = beta_;
    for (Eigen::Index a = 0; a < k; ++a)
      beta_(support_[static_cast<std::size_t>(a)]) += step * sub_step_(a);
    if (blocking >= 0) beta_(support_[static_cast<std::size_t>(blocking)]) = 0.0;
    grad_ = corr_;
    for (Eigen::Index j : support_)
      if (beta_(j) != 0.0) grad_.noalias() -= gram_.col(j) * beta_(j);
    if (!(objective(lambda) <= before)) {
      // Rounding in an ill-conditioned step; keep the coordinate-descent iterate.
      beta_ = saved;
      grad_ = corr_;
      for (Eigen::Index j : support_) grad_.noalias() -= gram_.col(j) * beta_(j);
      return;
    }
    if (blocking < 0) return;
  }
}

FitResult LassoPath::to_original_scale() const {
  FitResult out;
  out.coefficients = Eigen::VectorXd::Zero(p_);
  out.intercept = ybar_;
  for (std::size_t k = 0; k < cols_.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (beta_(kk) == 0.0) continue;
    const double b = beta_(kk) / scale_(kk);
    out.coefficients(cols_[k]) = b;
    out.intercept -= b * mean_(kk);
  }
  return out;
}

double LassoPath::lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::VectorXd>& w,
                             Eigen::Index intercept_column) {
  standardize(X, y, w, intercept_column);
  return corr_.size() == 0 ? 0.0 : corr_.cwiseAbs().maxCoeff();
}

FitResult LassoPath::solve(const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& w, double lambda,
                           Eigen::Index intercept_column, Trace* trace) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  standardize(X, y, w, intercept_column);
  if (beta_.size() > 0) descend(lambda, 0, trace);
  return to_original_scale();
}

FitResult LassoPath::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const WeightPair& weights,
                         Eigen::Index intercept_column, Trace* trace) {
  standardize(X, y, weights.train, intercept_column);
  check_weights(weights.valid, X.rows(), "validation");
  const Eigen::VectorXd& wv = weights.valid;
  const double lmax = corr_.size() == 0 ? 0.0 : corr_.cwiseAbs().maxCoeff();
  if (trace) *trace = Trace{};
  if (!(lmax > 0.0)) {
    // Nothing to penalize: every path point is the weighted mean.
    FitResult out = to_original_scale();
    if (trace) {
      trace->lambdas.push_back(0.0);
      trace->valid_sse.push_back((wv.array() * (y.array() - ybar_).square()).sum());
      trace->solutions.push_back(out);
    }
    return out;
  }

  const int n_lambda = std::max(options_.n_lambda, 1);
  Eigen::VectorXd fitted(X.rows());
  Eigen::VectorXd best_beta = beta_;
  double best_valid = std::numeric_limits<double>::infinity();
  int best_index = 0;
  for (int l = 0; l < n_lambda; ++l) {
    const double frac = n_lambda == 1 ? 0.0 : static_cast<double>(l) / (n_lambda - 1);
    const double lambda = lmax * std::pow(options_.lambda_min_ratio, frac);
    descend(lambda, l, trace);
    fitted.setConstant(ybar_);
    for (Eigen::Index k = 0; k < beta_.size(); ++k)
      if (beta_(k) != 0.0) fitted.noalias() += xs_.col(k) * beta_(k);
    const double vs = (wv.array() * (y - fitted).array().square()).sum();
    if (vs < best_valid) {
      best_valid = vs;
      best_beta = beta_;
      best_index = l;
    }
    if (trace) {
      trace->lambdas.push_back(lambda);
      trace->valid_sse.push_back(vs);
      FitResult sol = to_original_scale();
      sol.tuning_index = l;
      trace->solutions.push_back(std::move(sol));
    }
  }
  beta_ = best_beta;
  FitResult out = to_original_scale();
  out.tuning_index = best_index;
  return out;
}

FitResult lasso_path_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const WeightPair& weights,
                         Eigen::Index intercept_column) {
  LassoPath lasso;
  return lasso.fit(X, y, weights, intercept_column);
}

}  // namespace svem
