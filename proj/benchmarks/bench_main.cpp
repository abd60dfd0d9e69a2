#include "svem/base_learners.hpp"
#include "svem/lnp_example.hpp"
#include "svem/point_sampler.hpp"
#include "svem/sim_harness.hpp"
#include "svem/whole_model_test.hpp"

#include <benchmark/benchmark.h>

using namespace svem;

namespace {

struct LnpProblem {
  StudyConfig study = lnp_study_config();
  LnpDataset data = simulate_lnp_dataset(3);
  ModelMatrix design = expand_terms(study.factors, study.terms, data.factors);
  Eigen::VectorXd y = data.responses.col(0);
};

const LnpProblem& lnp() {
  static const LnpProblem p;
  return p;
}

void BM_ForwardSelectionLnp(benchmark::State& state) {
  const auto& p = lnp();
  ForwardSelection fs;
  std::uint64_t b = 0;
  for (auto _ : state) {
    const WeightPair w = draw_weight_pair(p.design.rows(), 1, b++);
    benchmark::DoNotOptimize(fs.fit(p.design.values, p.y, w, *p.design.intercept_column));
  }
}
BENCHMARK(BM_ForwardSelectionLnp);

void BM_LassoPathLnp(benchmark::State& state) {
  const auto& p = lnp();
  LassoPath lasso;
  std::uint64_t b = 0;
  for (auto _ : state) {
    const WeightPair w = draw_weight_pair(p.design.rows(), 1, b++);
    benchmark::DoNotOptimize(lasso.fit(p.design.values, p.y, w, *p.design.intercept_column));
  }
}
BENCHMARK(BM_LassoPathLnp)->Unit(benchmark::kMillisecond);

void BM_SamplePointsLnp(benchmark::State& state) {
  const auto& p = lnp();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_points(p.study.factors, state.range(0), seed++));
}
BENCHMARK(BM_SamplePointsLnp)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_MahalanobisReference(benchmark::State& state) {
  const Eigen::MatrixXd ref = Eigen::MatrixXd::Random(125, state.range(0));
  const Eigen::MatrixXd obs = Eigen::MatrixXd::Random(5, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reduced_rank_mahalanobis(ref, obs, 85.0));
}
BENCHMARK(BM_MahalanobisReference)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_WholeModelTestCcd(benchmark::State& state) {
  const auto specs = ccd_factor_specs(CcdAlpha::face_centered);
  const FactorTable design = ccd_design(CcdAlpha::face_centered, 2);
  const Eigen::VectorXd y = simulate_response(design, ScenarioSpec::make(1, 1.0), 7);
  const TestSettings settings = desk_power_settings();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        whole_model_test(design, y, specs, full_rsm_terms(), Learner::forward_selection, settings));
}
BENCHMARK(BM_WholeModelTestCcd)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
