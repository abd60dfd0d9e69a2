#pragma once

#include "svem/factor_model.hpp"
#include "svem/svem_ensemble.hpp"
#include "svem/whole_model_test.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace svem {

enum class CcdAlpha { rotatable, face_centered };

std::string_view to_string(CcdAlpha mode);
CcdAlpha parse_ccd_alpha(std::string_view text);

// Axial distance: 8^(1/4) for the rotatable design, 1 for face-centered.
double ccd_axial_distance(CcdAlpha mode);

// Continuous factors x1, x2, x3 in coded units spanning [-alpha, alpha].
std::vector<FactorSpec> ccd_factor_specs(CcdAlpha mode);

// 8 factorial corners, 6 axial points, n_center center runs (coded units).
FactorTable ccd_design(CcdAlpha mode, int n_center);

// Intercept, 3 mains, 3 quadratics, 3 two-way interactions.
std::vector<Term> full_rsm_terms();

enum class CandidateSet { full_rsm, true_reduced };

struct ScenarioSpec {
  int scenario = 1;
  double beta = 0.0;
  CandidateSet candidate = CandidateSet::full_rsm;
  double noise_sd = 1.0;

  // Scenario 2 fits the true reduced model; 1 and 3 the full RSM.
  static ScenarioSpec make(int scenario, double beta);
  void validate() const;
};

// Terms of the true model: {1, x1, x2, x1*x2} for scenarios 1-2, {1, x3} for 3.
std::vector<Term> true_reduced_terms(int scenario);

// Candidate terms handed to the SVEM arms.
std::vector<Term> candidate_terms(const ScenarioSpec& spec);

// Noise-free mean: beta (x1 + x2 + x1 x2) for scenarios 1-2, beta x3 for 3.
Eigen::VectorXd scenario_mean(const FactorTable& design, const ScenarioSpec& spec);

Eigen::VectorXd simulate_response(const FactorTable& design, const ScenarioSpec& spec,
                                  std::uint64_t seed);
Eigen::VectorXd simulate_response(const FactorTable& design, const ScenarioSpec& spec,
                                  const Eigen::VectorXd& noise);

enum class PowerMethod { svem_fs, svem_lasso, anova_full, anova_reduced };

std::string_view to_string(PowerMethod method);
PowerMethod parse_power_method(std::string_view text);

struct PowerPoint {
  double beta = 0.0;
  PowerMethod method = PowerMethod::svem_fs;
  int rejections = 0;
  int trials = 0;

  double power() const { return trials > 0 ? static_cast<double>(rejections) / trials : 0.0; }
  // Binomial Monte Carlo standard error of power().
  double standard_error() const;
};

struct PowerOptions {
  CcdAlpha alpha_mode = CcdAlpha::face_centered;
  int n_center = 2;
  double alpha_level = 0.05;
  // Trials run in parallel; each test inside a trial is single-threaded.
  unsigned threads = 1;
};

// Desk-scale settings for power runs: nPerm 50, nPoint 500, nBoot 100.
TestSettings desk_power_settings();

// Monte Carlo power: `trials` simulated experiments, each analysed by every
// method, counting p < alpha_level. Trial seeds depend on (seed, trial) only,
// so different betas share their noise draws.
std::vector<PowerPoint> estimate_power(const ScenarioSpec& spec,
                                       std::span<const PowerMethod> methods, int trials,
                                       const TestSettings& settings, std::uint64_t seed,
                                       const PowerOptions& options = {});

// One draw per point from Normal(f_hat, s_hat).
Eigen::VectorXd sample_surface(const EnsembleModel& model, const FactorTable& T,
                               std::uint64_t seed);

}  // namespace svem
