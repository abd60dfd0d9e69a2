#include "svem/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace svem {

namespace {

double guarded(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x) {
  double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& options) {
  const Eigen::Index d = x0.size();
  constexpr double alpha = 1.0;  // reflection
  constexpr double gamma = 2.0;  // expansion
  constexpr double rho = 0.5;    // contraction
  constexpr double sigma = 0.5;  // shrink

  NelderMeadResult result;
  result.x = x0;
  result.value = guarded(f, x0);
  int used = 0;

  for (int attempt = 0; attempt <= options.restarts; ++attempt) {
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(d + 1), result.x);
    std::vector<double> vals(static_cast<std::size_t>(d + 1));
    vals[0] = result.value;
    for (Eigen::Index i = 0; i < d; ++i) {
      pts[static_cast<std::size_t>(i + 1)](i) += step(i);
      vals[static_cast<std::size_t>(i + 1)] = guarded(f, pts[static_cast<std::size_t>(i + 1)]);
    }
    std::vector<std::size_t> idx(pts.size());
    bool converged = false;
    while (used < options.max_iterations) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      const std::size_t best = idx.front();
      const std::size_t worst = idx.back();
      const std::size_t second = idx[idx.size() - 2];
      if (std::isfinite(vals[worst]) && vals[worst] - vals[best] < options.f_tolerance) {
        converged = true;
        break;
      }
      ++used;
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != worst) centroid += pts[i];
      centroid /= static_cast<double>(d);

      Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
      double fr = guarded(f, xr);
      if (fr < vals[best]) {
        Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
        double fe = guarded(f, xe);
        if (fe < fr) {
          pts[worst] = xe;
          vals[worst] = fe;
        } else {
          pts[worst] = xr;
          vals[worst] = fr;
        }
        continue;
      }
      if (fr < vals[second]) {
        pts[worst] = xr;
        vals[worst] = fr;
        continue;
      }
      const bool outside = fr < vals[worst];
      Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + rho * (xr - centroid))
                                   : Eigen::VectorXd(centroid + rho * (pts[worst] - centroid));
      double fc = guarded(f, xc);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
        continue;
      }
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == best) continue;
        pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
        vals[i] = guarded(f, pts[i]);
      }
    }
    auto it = std::min_element(vals.begin(), vals.end());
    const auto bi = static_cast<std::size_t>(it - vals.begin());
    if (vals[bi] <= result.value) {
      result.x = pts[bi];
      result.value = vals[bi];
    }
    result.converged = converged;
    if (!converged) break;
  }
  result.iterations = used;
  return result;
}

}  // namespace svem
