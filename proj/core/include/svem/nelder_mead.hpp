#pragma once

#include <Eigen/Dense>

#include <functional>

namespace svem {

struct NelderMeadOptions {
  // Converged once max(f) - min(f) over the simplex drops below this.
  double f_tolerance = 1e-9;
  int max_iterations = 2000;
  // Restarts from the best vertex after convergence, sharing the budget.
  int restarts = 1;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes f from x0 with an initial simplex offset by `step` along each
// axis. Non-finite function values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& options = {});

}  // namespace svem
