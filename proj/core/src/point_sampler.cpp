#include "svem/point_sampler.hpp"

#include "svem/errors.hpp"
#include "svem/parallel.hpp"
#include "svem/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>

namespace svem {

namespace {

constexpr std::uint64_t kMinProposalsBeforeGivingUp = 200000;
constexpr double kInfeasibleAcceptance = 1e-4;
constexpr double kWarnAcceptance = 0.01;

struct MixtureBlock {
  std::vector<Eigen::Index> columns;
  std::vector<double> low;
  std::vector<double> high;
  double slack = 0.0;  // 1 - sum(low)
};

}  // namespace

FactorTable sample_points(std::span<const FactorSpec> specs, Eigen::Index n_point,
                          std::uint64_t seed, const SamplerOptions& options) {
  validate_factor_specs(specs);
  if (n_point < 1) throw DomainError("nPoint must be >= 1");

  const auto n_factors = static_cast<Eigen::Index>(specs.size());
  MixtureBlock mix;
  for (Eigen::Index j = 0; j < n_factors; ++j) {
    const auto& s = specs[static_cast<std::size_t>(j)];
    if (s.role != FactorRole::mixture) continue;
    mix.columns.push_back(j);
    mix.low.push_back(s.low);
    mix.high.push_back(s.high);
  }
  mix.slack = 1.0 - std::accumulate(mix.low.begin(), mix.low.end(), 0.0);
  mix.slack = std::max(mix.slack, 0.0);

  Eigen::MatrixXd values(n_point, n_factors);
  const Eigen::Index n_chunks = (n_point + kSamplerChunk - 1) / kSamplerChunk;
  std::vector<std::uint64_t> proposals(static_cast<std::size_t>(n_chunks), 0);
  std::vector<std::uint64_t> accepted(static_cast<std::size_t>(n_chunks), 0);

  parallel_for(static_cast<std::size_t>(n_chunks), options.threads,
               [&](unsigned, std::size_t chunk) {
    Rng rng(derive_seed(seed, {stream::kPoints, chunk}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    const Eigen::Index begin = static_cast<Eigen::Index>(chunk) * kSamplerChunk;
    const Eigen::Index end = std::min(n_point, begin + kSamplerChunk);
    std::vector<double> e(mix.columns.size());
    for (Eigen::Index i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < n_factors; ++j) {
        const auto& s = specs[static_cast<std::size_t>(j)];
        if (s.role == FactorRole::continuous) {
          values(i, j) = s.low + (s.high - s.low) * unif(rng);
        } else if (s.role == FactorRole::categorical) {
          std::uniform_int_distribution<int> pick(0, static_cast<int>(s.levels.size()) - 1);
          values(i, j) = pick(rng);
        }
      }
      if (mix.columns.empty()) continue;
      for (;;) {
        ++proposals[chunk];
        double total = 0.0;
        for (auto& v : e) total += (v = expo(rng));
        bool ok = true;
        for (std::size_t k = 0; k < e.size(); ++k) {
          e[k] = mix.low[k] + mix.slack * (e[k] / total);
          if (e[k] > mix.high[k]) ok = false;
        }
        if (ok) {
          ++accepted[chunk];
          for (std::size_t k = 0; k < e.size(); ++k) values(i, mix.columns[k]) = e[k];
          break;
        }
        if (proposals[chunk] >= kMinProposalsBeforeGivingUp &&
            static_cast<double>(accepted[chunk]) <
                kInfeasibleAcceptance * static_cast<double>(proposals[chunk]))
          throw InfeasibleBoundsError(
              "mixture bounds leave almost no feasible region (acceptance below 1e-4)");
      }
    }
  });

  if (!mix.columns.empty()) {
    double prop = std::accumulate(proposals.begin(), proposals.end(), 0.0);
    double acc = std::accumulate(accepted.begin(), accepted.end(), 0.0);
    if (acc < kWarnAcceptance * prop)
      spdlog::warn("mixture rejection sampler acceptance rate {:.4f} is below 1%", acc / prop);
  }

  if (options.latin_hypercube) {
    // One stratum per row for each continuous factor.
    Rng rng(derive_seed(seed, {stream::kPoints, 0xffffffffULL}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_point));
    for (Eigen::Index j = 0; j < n_factors; ++j) {
      const auto& s = specs[static_cast<std::size_t>(j)];
      if (s.role != FactorRole::continuous) continue;
      std::iota(perm.begin(), perm.end(), Eigen::Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Eigen::Index i = 0; i < n_point; ++i) {
        double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unif(rng)) /
                   static_cast<double>(n_point);
        values(i, j) = s.low + (s.high - s.low) * u;
      }
    }
  }
  return make_factor_table(specs, std::move(values));
}

}  // namespace svem
