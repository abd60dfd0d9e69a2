#pragma once

#include "svem/factor_model.hpp"

#include <cstdint>
#include <span>

namespace svem {

struct SamplerOptions {
  // Stratify continuous factors (Latin hypercube). Mixture and categorical
  // factors are sampled as in the uniform mode.
  bool latin_hypercube = false;
  unsigned threads = 1;
};

// Rows per independently seeded chunk. Output does not depend on the thread
// count because every chunk draws from its own substream.
inline constexpr Eigen::Index kSamplerChunk = 256;

// Uniform random points over the factor space. Mixture blocks are uniform on
// the bound-constrained simplex: uniform-simplex proposals above the lower
// bounds, rejected against the upper bounds. Throws InfeasibleBoundsError when
// the acceptance rate collapses below 1e-4.
FactorTable sample_points(std::span<const FactorSpec> specs, Eigen::Index n_point,
                          std::uint64_t seed, const SamplerOptions& options = {});

}  // namespace svem
