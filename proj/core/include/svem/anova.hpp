#pragma once

#include <Eigen/Dense>

namespace svem {

struct AnovaResult {
  double f_statistic = 0.0;
  double p_value = 1.0;
  int df_model = 0;
  int df_error = 0;
};

// Classical whole-model F test of an OLS fit: X must include the intercept
// column, have full column rank and n > p. F = [SSR/(p-1)] / [SSE/(n-p)],
// p-value from the F(p-1, n-p) upper tail.
AnovaResult anova_whole_model_f(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace svem
