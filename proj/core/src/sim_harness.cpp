#include "svem/sim_harness.hpp"

#include "svem/anova.hpp"
#include "svem/errors.hpp"
#include "svem/parallel.hpp"
#include "svem/rng.hpp"

#include <cmath>
#include <random>

namespace svem {

std::string_view to_string(CcdAlpha mode) {
  return mode == CcdAlpha::rotatable ? "rotatable" : "face_centered";
}

CcdAlpha parse_ccd_alpha(std::string_view text) {
  if (text == "rotatable") return CcdAlpha::rotatable;
  if (text == "face_centered" || text == "face-centered" || text == "face") return CcdAlpha::face_centered;
  throw DomainError("unknown CCD alpha mode '" + std::string(text) + "'");
}

double ccd_axial_distance(CcdAlpha mode) {
  return mode == CcdAlpha::rotatable ? std::pow(8.0, 0.25) : 1.0;
}

std::vector<FactorSpec> ccd_factor_specs(CcdAlpha mode) {
  const double a = ccd_axial_distance(mode);
  std::vector<FactorSpec> specs;
  for (const char* name : {"x1", "x2", "x3"})
    specs.push_back(FactorSpec{name, FactorRole::continuous, -a, a, {}});
  return specs;
}

FactorTable ccd_design(CcdAlpha mode, int n_center) {
  if (n_center < 0) throw DomainError("center run count must be >= 0");
  const double a = ccd_axial_distance(mode);
  Eigen::MatrixXd runs = Eigen::MatrixXd::Zero(14 + n_center, 3);
  Eigen::Index r = 0;
  for (int c = 0; c < 8; ++c, ++r)
    for (int j = 0; j < 3; ++j) runs(r, j) = (c >> (2 - j)) & 1 ? 1.0 : -1.0;
  for (int j = 0; j < 3; ++j) {
    runs(r++, j) = -a;
    runs(r++, j) = a;
  }
  return make_factor_table(ccd_factor_specs(mode), std::move(runs));
}

std::vector<Term> full_rsm_terms() {
  return {Term::intercept(),
          Term::main("x1"),
          Term::main("x2"),
          Term::main("x3"),
          Term::product({"x1", "x1"}),
          Term::product({"x2", "x2"}),
          Term::product({"x3", "x3"}),
          Term::product({"x1", "x2"}),
          Term::product({"x1", "x3"}),
          Term::product({"x2", "x3"})};
}

std::vector<Term> true_reduced_terms(int scenario) {
  if (scenario == 3) return {Term::intercept(), Term::main("x3")};
  return {Term::intercept(), Term::main("x1"), Term::main("x2"), Term::product({"x1", "x2"})};
}

ScenarioSpec ScenarioSpec::make(int scenario, double beta) {
  ScenarioSpec s;
  s.scenario = scenario;
  s.beta = beta;
  s.candidate = scenario == 2 ? CandidateSet::true_reduced : CandidateSet::full_rsm;
  s.validate();
  return s;
}

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 3) throw DomainError("scenario must be 1, 2 or 3");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be >= 0");
  const CandidateSet expected = scenario == 2 ? CandidateSet::true_reduced : CandidateSet::full_rsm;
  if (candidate != expected)
    throw DomainError("scenario " + std::to_string(scenario) + " uses the " +
                      (scenario == 2 ? "true reduced" : "full RSM") + " candidate set");
}

std::vector<Term> candidate_terms(const ScenarioSpec& spec) {
  return spec.candidate == CandidateSet::full_rsm ? full_rsm_terms()
                                                  : true_reduced_terms(spec.scenario);
}

Eigen::VectorXd scenario_mean(const FactorTable& design, const ScenarioSpec& spec) {
  spec.validate();
  if (design.values.cols() != 3) throw DomainError("scenario designs have factors x1, x2, x3");
  const auto x1 = design.values.col(0).array();
  const auto x2 = design.values.col(1).array();
  const auto x3 = design.values.col(2).array();
  if (spec.scenario == 3) return spec.beta * x3;
  return spec.beta * (x1 + x2 + x1 * x2);
}

Eigen::VectorXd simulate_response(const FactorTable& design, const ScenarioSpec& spec,
                                  const Eigen::VectorXd& noise) {
  if (noise.size() != design.rows()) throw DomainError("noise length does not match the design");
  return scenario_mean(design, spec) + spec.noise_sd * noise;
}

Eigen::VectorXd simulate_response(const FactorTable& design, const ScenarioSpec& spec,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd noise(design.rows());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  return simulate_response(design, spec, noise);
}

std::string_view to_string(PowerMethod method) {
  switch (method) {
    case PowerMethod::svem_fs:
      return "svem_fs";
    case PowerMethod::svem_lasso:
      return "svem_lasso";
    case PowerMethod::anova_full:
      return "anova_full";
    case PowerMethod::anova_reduced:
      return "anova_reduced";
  }
  return "unknown";
}

PowerMethod parse_power_method(std::string_view text) {
  if (text == "svem_fs") return PowerMethod::svem_fs;
  if (text == "svem_lasso") return PowerMethod::svem_lasso;
  if (text == "anova_full") return PowerMethod::anova_full;
  if (text == "anova_reduced") return PowerMethod::anova_reduced;
  throw DomainError("unknown power method '" + std::string(text) + "'");
}

double PowerPoint::standard_error() const {
  if (trials <= 0) return 0.0;
  const double p = power();
  return std::sqrt(p * (1.0 - p) / trials);
}

TestSettings desk_power_settings() {
  TestSettings s;
  s.n_perm = 50;
  s.n_point = 500;
  s.n_boot = 100;
  return s;
}

std::vector<PowerPoint> estimate_power(const ScenarioSpec& spec,
                                       std::span<const PowerMethod> methods, int trials,
                                       const TestSettings& settings, std::uint64_t seed,
                                       const PowerOptions& options) {
  spec.validate();
  settings.validate();
  if (trials < 1) throw DomainError("trials must be >= 1");

  const auto specs = ccd_factor_specs(options.alpha_mode);
  const FactorTable design = ccd_design(options.alpha_mode, options.n_center);
  const auto svem_terms = candidate_terms(spec);
  const ModelMatrix full = expand_terms(specs, full_rsm_terms(), design);
  const ModelMatrix reduced = expand_terms(specs, true_reduced_terms(spec.scenario), design);

  const std::size_t n_methods = methods.size();
  std::vector<char> rejected(static_cast<std::size_t>(trials) * n_methods, 0);
  parallel_for(static_cast<std::size_t>(trials), options.threads, [&](unsigned, std::size_t t) {
    const Eigen::VectorXd y =
        simulate_response(design, spec, derive_seed(seed, {stream::kTrial, t}));
    for (std::size_t m = 0; m < n_methods; ++m) {
      double p = 1.0;
      switch (methods[m]) {
        case PowerMethod::anova_full:
          p = anova_whole_model_f(full.values, y).p_value;
          break;
        case PowerMethod::anova_reduced:
          p = anova_whole_model_f(reduced.values, y).p_value;
          break;
        case PowerMethod::svem_fs:
        case PowerMethod::svem_lasso: {
          TestSettings local = settings;
          local.threads = 1;
          local.seed = derive_seed(seed, {stream::kTrial, t, stream::kMethod,
                                          static_cast<std::uint64_t>(methods[m])});
          const Learner learner =
              methods[m] == PowerMethod::svem_fs ? Learner::forward_selection : Learner::lasso;
          p = whole_model_test(design, y, specs, svem_terms, learner, local).p_value;
          break;
        }
      }
      rejected[t * n_methods + m] = p < options.alpha_level ? 1 : 0;
    }
  });

  std::vector<PowerPoint> out;
  for (std::size_t m = 0; m < n_methods; ++m) {
    PowerPoint pt;
    pt.beta = spec.beta;
    pt.method = methods[m];
    pt.trials = trials;
    for (int t = 0; t < trials; ++t) pt.rejections += rejected[static_cast<std::size_t>(t) * n_methods + m];
    out.push_back(pt);
  }
  return out;
}

Eigen::VectorXd sample_surface(const EnsembleModel& model, const FactorTable& T,
                               std::uint64_t seed) {
  const PredictionSummary s = svem_predict(model, T);
  Rng rng(derive_seed(seed, {stream::kSurface}));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(s.f_hat.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = s.f_hat(i) + s.s_hat(i) * normal(rng);
  return v;
}

}  // namespace svem
