#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace svem {

// Training and validation weights for one self-validation iteration. Both
// are deterministic transforms of one uniform draw per row, so they move in
// opposite directions.
struct WeightPair {
  Eigen::VectorXd train;
  Eigen::VectorXd valid;

  Eigen::Index size() const { return train.size(); }
};

// train_i = -ln(u_i), valid_i = -ln(1 - u_i); each marginal is Exponential(1).
// u is clamped to [2^-53, 1 - 2^-53] so both weights stay finite and positive.
WeightPair weights_from_uniforms(const Eigen::VectorXd& u);

// Weights for iteration `iteration` of an ensemble seeded with `seed`.
// Depends only on (n, seed, iteration).
WeightPair draw_weight_pair(Eigen::Index n, std::uint64_t seed, std::uint64_t iteration);

}  // namespace svem
