#include "oracles.hpp"

#include "svem/errors.hpp"
#include "svem/fractional_bootstrap.hpp"

#include <doctest.h>

#include <numeric>

using namespace svem;

TEST_CASE("u = 0.5 gives train = valid = ln 2") {
  Eigen::VectorXd u(1);
  u << 0.5;
  const WeightPair w = weights_from_uniforms(u);
  CHECK(w.train(0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(w.valid(0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("extreme uniforms still give finite positive weights") {
  Eigen::VectorXd u(4);
  u << 0.0, 1.0, 1e-300, 1.0 - 1e-17;
  const WeightPair w = weights_from_uniforms(u);
  CHECK(w.train.allFinite());
  CHECK(w.valid.allFinite());
  CHECK(w.train.minCoeff() > 0.0);
  CHECK(w.valid.minCoeff() > 0.0);
}

TEST_CASE("large draw: Exp(1) mean and strong negative correlation") {
  const Eigen::Index n = 100000;
  const WeightPair w = draw_weight_pair(n, 17, 3);
  CHECK(std::abs(w.train.mean() - 1.0) < 0.02);
  CHECK(std::abs(w.valid.mean() - 1.0) < 0.02);
  const Eigen::ArrayXd a = w.train.array() - w.train.mean();
  const Eigen::ArrayXd b = w.valid.array() - w.valid.mean();
  const double r = (a * b).sum() / std::sqrt(a.square().sum() * b.square().sum());
  CHECK(r < -0.5);
}

TEST_CASE("train marginal passes a Kolmogorov-Smirnov test against Exp(1)") {
  const Eigen::Index n = 20000;
  const WeightPair w = draw_weight_pair(n, 5, 0);
  std::vector<double> s(w.train.data(), w.train.data() + n);
  const double d = oracle::ks_statistic(s, [](double x) { return 1.0 - std::exp(-x); });
  // 1% critical value 1.63 / sqrt(n).
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("train and valid are exactly anti-monotone") {
  const WeightPair w = draw_weight_pair(500, 9, 1);
  std::vector<Eigen::Index> order(500);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return w.train(a) < w.train(b); });
  for (std::size_t k = 1; k < order.size(); ++k) CHECK(w.valid(order[k]) < w.valid(order[k - 1]));
}

TEST_CASE("weight pairs are deterministic in (seed, iteration)") {
  const WeightPair a = draw_weight_pair(50, 123, 4);
  const WeightPair b = draw_weight_pair(50, 123, 4);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  const WeightPair c = draw_weight_pair(50, 123, 5);
  CHECK(a.train != c.train);
  CHECK(a.size() == 50);
  CHECK_THROWS_AS(draw_weight_pair(0, 1, 1), DomainError);
}
