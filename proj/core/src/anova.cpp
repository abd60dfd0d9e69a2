#include "svem/anova.hpp"

#include "svem/distributions.hpp"
#include "svem/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace svem {

AnovaResult anova_whole_model_f(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw DomainError("response length does not match the design");
  if (p < 2) throw DomainError("whole-model F test needs at least one non-intercept column");
  if (n <= p)
    throw InsufficientDataError("whole-model F test needs n > p (n = " + std::to_string(n) +
                                ", p = " + std::to_string(p) + ")");

  AnovaResult out;
  out.df_model = static_cast<int>(p - 1);
  out.df_error = static_cast<int>(n - p);
  if ((y.array() == y(0)).all()) return out;  // constant response: F = 0, p = 1

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw SingularSystemError("design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd fitted = X * beta;
  const double mean = y.mean();
  const double ssr = (fitted.array() - mean).square().sum();
  const double sse = (y - fitted).squaredNorm();
  const double msr = ssr / out.df_model;
  const double mse = sse / out.df_error;
  if (mse == 0.0) {
    out.f_statistic = ssr > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    out.p_value = ssr > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.f_statistic = msr / mse;
  out.p_value = f_upper_tail(out.f_statistic, out.df_model, out.df_error);
  return out;
}

}  // namespace svem
