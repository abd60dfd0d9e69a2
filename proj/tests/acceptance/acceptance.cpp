// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// non-zero if any criterion fails. Arguments restrict the run to the named
// criteria (e.g. `acceptance AC6 AC7`).

#include "oracles.hpp"

#include "svem/base_learners.hpp"
#include "svem/distributions.hpp"
#include "svem/lnp_example.hpp"
#include "svem/parallel.hpp"
#include "svem/report.hpp"
#include "svem/sim_harness.hpp"
#include "svem/whole_model_test.hpp"

#include <fmt/format.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace svem;
namespace fs = std::filesystem;

namespace {

// Tolerances and bands.
constexpr double kTypeOneLow = 0.02;
constexpr double kTypeOneHigh = 0.09;
constexpr double kPowerBetaOneLow = 0.40;
constexpr double kPowerBetaOneHigh = 0.70;
constexpr double kPowerBetaHighMin = 0.85;
constexpr double kOrderingSlackSe = 2.0;
constexpr double kLnpActiveMax = 0.01;
constexpr double kLnpNoiseMin = 0.2;
constexpr double kLnpPassShare = 0.9;
constexpr double kMahalanobisRelTol = 1e-6;
constexpr double kLearnerTol = 1e-4;
constexpr double kSoftThresholdTol = 1e-8;
constexpr double kShashNormalTol = 1e-12;
constexpr double kShashMleTol = 0.2;
constexpr Eigen::Index kLnpColumns = 100;

constexpr std::uint64_t kPowerSeed = 20240601;
constexpr int kTypeOneTrials = 400;
constexpr int kPowerTrials = 300;
constexpr int kLnpRepetitions = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned worker_threads() { return resolve_threads(0); }

PowerOptions power_options() {
  PowerOptions o;
  o.threads = worker_threads();
  return o;
}

const PowerPoint& find(const std::vector<PowerPoint>& pts, PowerMethod m) {
  for (const auto& p : pts)
    if (p.method == m) return p;
  throw std::logic_error("method missing from power results");
}

std::string describe(const PowerPoint& p) {
  return fmt::format("{} {}/{} = {:.3f} (se {:.3f})", to_string(p.method), p.rejections, p.trials,
                     p.power(), p.standard_error());
}

Outcome ac1_type_one() {
  const std::vector<PowerMethod> methods{PowerMethod::svem_fs};
  const auto pts = estimate_power(ScenarioSpec::make(1, 0.0), methods, kTypeOneTrials,
                                  desk_power_settings(), kPowerSeed, power_options());
  const double r = pts.front().power();
  return {r >= kTypeOneLow && r <= kTypeOneHigh,
          fmt::format("{}; band [{}, {}]", describe(pts.front()), kTypeOneLow, kTypeOneHigh)};
}

Outcome ac2_power_beta_one() {
  const std::vector<PowerMethod> methods{PowerMethod::svem_fs};
  const auto pts = estimate_power(ScenarioSpec::make(1, 1.0), methods, kPowerTrials,
                                  desk_power_settings(), kPowerSeed, power_options());
  const double r = pts.front().power();
  return {r >= kPowerBetaOneLow && r <= kPowerBetaOneHigh,
          fmt::format("{}; band [{}, {}]", describe(pts.front()), kPowerBetaOneLow, kPowerBetaOneHigh)};
}

Outcome ac3_power_beta_high() {
  const std::vector<PowerMethod> methods{PowerMethod::svem_fs};
  const auto pts = estimate_power(ScenarioSpec::make(1, 1.75), methods, kPowerTrials,
                                  desk_power_settings(), kPowerSeed, power_options());
  return {pts.front().power() >= kPowerBetaHighMin,
          fmt::format("{}; need >= {}", describe(pts.front()), kPowerBetaHighMin)};
}

// a >= b up to kOrderingSlackSe standard errors of the difference.
bool at_least(const PowerPoint& a, const PowerPoint& b) {
  const double se = std::hypot(a.standard_error(), b.standard_error());
  return a.power() - b.power() >= -kOrderingSlackSe * se;
}

Outcome ac4_orderings() {
  const std::vector<PowerMethod> methods{PowerMethod::svem_fs, PowerMethod::svem_lasso,
                                         PowerMethod::anova_full, PowerMethod::anova_reduced};
  bool pass = true;
  std::string detail;
  for (int scenario : {2, 3}) {
    const auto pts = estimate_power(ScenarioSpec::make(scenario, 1.5), methods, kPowerTrials,
                                    desk_power_settings(), kPowerSeed, power_options());
    const auto& fs_arm = find(pts, PowerMethod::svem_fs);
    const auto& lasso_arm = find(pts, PowerMethod::svem_lasso);
    const auto& reduced = find(pts, PowerMethod::anova_reduced);
    const auto& full = find(pts, PowerMethod::anova_full);
    bool ok = at_least(reduced, fs_arm) && at_least(reduced, lasso_arm);
    if (scenario == 3) ok = ok && at_least(fs_arm, full) && at_least(lasso_arm, full);
    pass = pass && ok;
    detail += fmt::format("S{} {}: {:.3f} {:.3f} {:.3f} {:.3f} (fs lasso full reduced); ", scenario,
                          ok ? "ok" : "violated", fs_arm.power(), lasso_arm.power(), full.power(),
                          reduced.power());
  }
  return {pass, detail};
}

Outcome ac5_lnp() {
  const StudyConfig study = lnp_study_config();
  const std::vector<std::string> names{"Potency", "Size", "PDI"};
  int good = 0;
  std::string detail;
  for (int rep = 1; rep <= kLnpRepetitions; ++rep) {
    const LnpDataset data = simulate_lnp_dataset(static_cast<std::uint64_t>(rep));
    std::ostringstream csv;
    write_factor_csv(csv, study.factors, data.factors, data.response_names, &data.responses);
    const Dataset d = parse_dataset(csv.str(), study.factors, names);
    TestSettings s;
    s.seed = static_cast<std::uint64_t>(rep);
    s.threads = worker_threads();
    const RunReport report = run_tests(study, d, Learner::forward_selection, s);
    bool ok = report.all_ok();
    std::array<double, 3> p{1, 1, 1};
    if (ok) {
      for (std::size_t k = 0; k < 3; ++k) p[k] = report.outcomes[k].result->p_value;
      ok = p[0] < kLnpActiveMax && p[1] < kLnpActiveMax && p[2] > kLnpNoiseMin;
    }
    if (ok) ++good;
    else
      detail += fmt::format("rep {} ({:.4f}, {:.4f}, {:.4f}); ", rep, p[0], p[1], p[2]);
  }
  const double share = static_cast<double>(good) / kLnpRepetitions;
  return {share >= kLnpPassShare,
          fmt::format("{}/{} repetitions show the pattern; need {:.0f}%. {}", good, kLnpRepetitions,
                      100 * kLnpPassShare, detail)};
}

Outcome ac6_mahalanobis() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> cols(1, 8);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const Eigen::Index c = cols(rng);
    // Full rank after centring needs nPerm - 1 >= nPoint.
    const Eigen::Index r = std::uniform_int_distribution<Eigen::Index>(c + 1, 12)(rng);
    Eigen::MatrixXd ref(r, c);
    Eigen::MatrixXd obs(3, c);
    for (auto& v : ref.reshaped()) v = normal(rng);
    for (auto& v : obs.reshaped()) v = 2.0 * normal(rng);
    const Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(c, c) + 0.4 * Eigen::MatrixXd::Ones(c, c);
    ref = ref * mix;
    obs = obs * mix;
    const MahalanobisResult got = reduced_rank_mahalanobis(ref, obs, 100.0);
    const oracle::Mahalanobis want = oracle::brute_force_mahalanobis(ref, obs);
    const auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
    };
    worst = std::max({worst, rel(got.d_ref, want.d_ref), rel(got.d_obs, want.d_obs)});
  }
  return {worst <= kMahalanobisRelTol, fmt::format("max relative error {:.3e}", worst)};
}

Outcome ac7_learners() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_fs = 0.0, worst_lasso = 0.0, worst_soft = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    const Eigen::Index n = 30, p = 6;
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j)
      for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
    Eigen::VectorXd y = X * Eigen::VectorXd::LinSpaced(p, 1.0, -1.0);
    for (auto& v : y) v += 0.5 * normal(rng);
    WeightPair w = draw_weight_pair(n, 70, static_cast<std::uint64_t>(instance));
    const Eigen::VectorXd wls = oracle::normal_equations_wls(X, y, w.train);

    // Forward selection over its full path: with valid = train the last step
    // (every column) has the lowest validation SSE.
    WeightPair same{w.train, w.train};
    ForwardSelection fsel;
    ForwardSelection::Path path;
    const FitResult f = fsel.fit(X, y, same, 0, &path);
    if (f.tuning_index != p - 1) worst_fs = std::numeric_limits<double>::infinity();
    worst_fs = std::max(worst_fs, std::abs(f.intercept - wls(0)));
    for (Eigen::Index j = 1; j < p; ++j) worst_fs = std::max(worst_fs, std::abs(f.coefficients(j) - wls(j)));

    LassoPath lasso;
    const double tiny = 1e-9 * lasso.lambda_max(X, y, w.train, 0);
    const FitResult l = lasso.solve(X, y, w.train, tiny, 0);
    worst_lasso = std::max(worst_lasso, std::abs(l.intercept - wls(0)));
    for (Eigen::Index j = 1; j < p; ++j)
      worst_lasso = std::max(worst_lasso, std::abs(l.coefficients(j) - wls(j)));

    // Single standardized predictor, unit weights.
    Eigen::VectorXd x = X.col(1);
    x.array() -= x.mean();
    x /= std::sqrt(x.squaredNorm() / static_cast<double>(n));
    Eigen::MatrixXd X1(n, 2);
    X1 << Eigen::VectorXd::Ones(n), x;
    const double ols = x.dot(y) / static_cast<double>(n);
    for (double lambda : {0.0, 0.1 * std::abs(ols), 0.5 * std::abs(ols), 1.5 * std::abs(ols)}) {
      const FitResult s = lasso.solve(X1, y, Eigen::VectorXd::Ones(n), lambda, 0);
      const double expect = std::copysign(std::max(std::abs(ols) - lambda, 0.0), ols);
      worst_soft = std::max(worst_soft, std::abs(s.coefficients(1) - expect));
    }
  }
  const bool pass = worst_fs <= kLearnerTol && worst_lasso <= kLearnerTol && worst_soft <= kSoftThresholdTol;
  return {pass, fmt::format("forward selection {:.2e}, lasso {:.2e} (tol {}), soft threshold {:.2e} (tol {})",
                            worst_fs, worst_lasso, kLearnerTol, worst_soft, kSoftThresholdTol)};
}

Outcome ac8_shash() {
  double worst_cdf = 0.0;
  const ShashParams normal_member{0.7, 1.9, 0.0, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const double x = -10.0 + 20.0 * i / 999.0;
    worst_cdf = std::max(worst_cdf, std::abs(shash_cdf(x, normal_member) - normal_cdf((x - 0.7) / 1.9)));
  }
  double worst_mle = 0.0;
  const std::array<ShashParams, 3> truths{ShashParams{2.0, 1.0, 0.5, 1.5}, ShashParams{0.0, 1.0, 0.0, 1.0},
                                          ShashParams{-1.0, 0.8, -0.4, 0.8}};
  for (std::size_t k = 0; k < truths.size(); ++k) {
    const auto& t = truths[k];
    const auto s = oracle::shash_draws(t.location, t.scale, t.skewness, t.tailweight, 5000, 80 + k);
    const ShashParams fit = shash_fit_mle(s);
    worst_mle = std::max({worst_mle, std::abs(fit.location - t.location), std::abs(fit.scale - t.scale),
                          std::abs(fit.skewness - t.skewness), std::abs(fit.tailweight - t.tailweight)});
  }
  return {worst_cdf <= kShashNormalTol && worst_mle <= kShashMleTol,
          fmt::format("normal reduction {:.2e} (tol {}), MLE max abs error {:.3f} (tol {})", worst_cdf,
                      kShashNormalTol, worst_mle, kShashMleTol)};
}

#ifdef SVEMWMT_PATH
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

Outcome ac9_determinism() {
  const fs::path root = fs::temp_directory_path() / "svemwmt_acceptance";
  fs::remove_all(root);
  const std::string exe = SVEMWMT_PATH;
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  const fs::path ex = root / "ex";
  fs::create_directories(ex);
  const std::string data = q(ex / "lnp_data.csv");
  const std::string config = q(ex / "lnp_study.json");
  // Each command writes only under the directory it is given.
  const std::vector<std::pair<std::string, std::function<std::string(const fs::path&)>>> commands{
      {"example-data", [&](const fs::path& d) { return "example-data --out " + q(d); }},
      {"test", [&](const fs::path& d) {
         return "test --data " + data + " --config " + config +
                " --responses Potency,Size,PDI --nperm 30 --npoint 300 --nboot 50 --out " + q(d);
       }},
      {"test-lasso", [&](const fs::path& d) {
         return "test --data " + data + " --config " + config +
                " --responses Size --learner lasso --nperm 10 --npoint 100 --nboot 20 --out " + q(d);
       }},
      {"simulate", [&](const fs::path& d) {
         return "simulate --scenario 3 --beta-grid 0,1.5 --trials 8 --methods svem_fs,svem_lasso,anova_full --svg --out " + q(d);
       }},
      {"surface", [&](const fs::path& d) {
         return "surface --data " + data + " --config " + config + " --response Potency --nboot 40 --npoint 500 --out " +
                q(d / "surface.csv");
       }},
      {"sample-points", [&](const fs::path& d) {
         return "sample-points --config " + config + " --npoint 1000 --out " + q(d / "points.csv");
       }},
      {"fit", [&](const fs::path& d) {
         return "fit --data " + data + " --config " + config + " --response Size --nboot 30 --out " + q(d / "model.txt");
       }}};

  if (std::system(("\"" + exe + "\" --seed 4 example-data --out " + q(ex)).c_str()) != 0)
    return {false, "example-data failed"};
  std::string detail;
  bool pass = true;
  for (const auto& [name, make] : commands) {
    std::map<std::string, std::string> first;
    int run = 0;
    for (const char* threads : {"1", "2", "1", "3"}) {
      const fs::path out = root / fmt::format("{}_{}", name, run++);
      fs::create_directories(out);
      const std::string cmd = "\"" + exe + "\" --seed 17 --threads " + threads + " " + make(out) + " > " +
                              q(out / "stdout.txt") + " 2> " + q(root / "stderr.txt");
      if (std::system(cmd.c_str()) != 0) {
        pass = false;
        detail += name + " failed; ";
        break;
      }
      auto snap = snapshot(out);
      if (run == 1) {
        first = std::move(snap);
      } else if (snap != first) {
        pass = false;
        detail += fmt::format("{} differs at threads={}; ", name, threads);
      }
    }
    if (pass) detail += fmt::format("{} ({} files) identical; ", name, first.size());
  }
  fs::remove_all(root);
  return {pass, detail};
}
#endif

Outcome ac10_columns() {
  const StudyConfig study = lnp_study_config();
  const Eigen::Index cols = expanded_column_count(study.factors, study.terms);
  const LnpDataset d = simulate_lnp_dataset(1);
  const ModelMatrix m = expand_terms(study.factors, study.terms, d.factors);
  return {cols == kLnpColumns && m.cols() == kLnpColumns,
          fmt::format("{} terms expand to {} columns (model matrix {})", study.terms.size(), cols, m.cols())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1_type_one},       {"AC2", ac2_power_beta_one}, {"AC3", ac3_power_beta_high},
      {"AC4", ac4_orderings},      {"AC5", ac5_lnp},            {"AC6", ac6_mahalanobis},
      {"AC7", ac7_learners},       {"AC8", ac8_shash},
#ifdef SVEMWMT_PATH
      {"AC9", ac9_determinism},
#endif
      {"AC10", ac10_columns}};
  const std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    fmt::print("{} {} [{:.1f}s] {}\n", name, o.pass ? "PASS" : "FAIL", secs, o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
