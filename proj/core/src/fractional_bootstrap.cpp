#include "svem/fractional_bootstrap.hpp"

#include "svem/errors.hpp"
#include "svem/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace svem {

WeightPair weights_from_uniforms(const Eigen::VectorXd& u) {
  constexpr double lo = 0x1p-53;
  constexpr double hi = 1.0 - 0x1p-53;
  WeightPair w;
  w.train.resize(u.size());
  w.valid.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    double ui = std::clamp(u(i), lo, hi);
    w.train(i) = -std::log(ui);
    w.valid(i) = -std::log1p(-ui);
  }
  return w;
}

WeightPair draw_weight_pair(Eigen::Index n, std::uint64_t seed, std::uint64_t iteration) {
  if (n < 1) throw DomainError("weight pair needs n >= 1");
  Rng rng(derive_seed(seed, {stream::kBootstrap, iteration}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = unif(rng);
  return weights_from_uniforms(u);
}

}  // namespace svem
