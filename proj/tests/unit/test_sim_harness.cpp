#include "svem/errors.hpp"
#include "svem/point_sampler.hpp"
#include "svem/sim_harness.hpp"

#include <doctest.h>

#include <set>

using namespace svem;

TEST_CASE("face-centered CCD: 16 runs on the {-1, 0, 1} lattice") {
  const FactorTable d = ccd_design(CcdAlpha::face_centered, 2);
  REQUIRE(d.rows() == 16);
  REQUIRE(d.values.cols() == 3);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double v = d.values(i, j);
      CHECK((v == -1.0 || v == 0.0 || v == 1.0));
    }
  CHECK(d.values.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  std::set<std::vector<double>> corners;
  for (Eigen::Index i = 0; i < 8; ++i) corners.insert({d.values(i, 0), d.values(i, 1), d.values(i, 2)});
  CHECK(corners.size() == 8);
  CHECK(d.values.bottomRows(2).isZero(0.0));
}

TEST_CASE("rotatable CCD axial distance and column means") {
  CHECK(ccd_axial_distance(CcdAlpha::rotatable) == doctest::Approx(std::pow(8.0, 0.25)).epsilon(1e-15));
  CHECK(ccd_axial_distance(CcdAlpha::face_centered) == 1.0);
  const FactorTable d = ccd_design(CcdAlpha::rotatable, 6);
  CHECK(d.rows() == 20);
  CHECK(d.values.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(d.values.cwiseAbs().maxCoeff() == doctest::Approx(std::pow(8.0, 0.25)));
  // The design expands within the declared factor ranges.
  CHECK_NOTHROW(expand_terms(ccd_factor_specs(CcdAlpha::rotatable), full_rsm_terms(), d));
  CHECK(parse_ccd_alpha(to_string(CcdAlpha::rotatable)) == CcdAlpha::rotatable);
  CHECK_THROWS_AS(ccd_design(CcdAlpha::rotatable, -1), DomainError);
}

TEST_CASE("candidate and true term sets") {
  CHECK(full_rsm_terms().size() == 10);
  CHECK(true_reduced_terms(1).size() == 4);
  CHECK(true_reduced_terms(3).size() == 2);
  CHECK(candidate_terms(ScenarioSpec::make(1, 1.0)).size() == 10);
  CHECK(candidate_terms(ScenarioSpec::make(2, 1.0)).size() == 4);
  CHECK(candidate_terms(ScenarioSpec::make(3, 1.0)).size() == 10);
  CHECK_THROWS_AS(ScenarioSpec::make(4, 1.0), DomainError);
}

TEST_CASE("scenario means") {
  const FactorTable d = ccd_design(CcdAlpha::face_centered, 2);
  const Eigen::VectorXd zero = scenario_mean(d, ScenarioSpec::make(1, 0.0));
  CHECK(zero.isZero(0.0));
  const Eigen::VectorXd s1 = scenario_mean(d, ScenarioSpec::make(1, 1.0));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double x1 = d.values(i, 0), x2 = d.values(i, 1);
    CHECK(s1(i) == doctest::Approx(x1 + x2 + x1 * x2));
    if (x1 == 1.0 && x2 == 1.0) CHECK(s1(i) == 3.0);
  }
  const Eigen::VectorXd s3 = scenario_mean(d, ScenarioSpec::make(3, 2.0));
  CHECK(s3 == 2.0 * d.values.col(2));
}

TEST_CASE("beta = 0 responses are pure noise; supplied noise is added") {
  const FactorTable d = ccd_design(CcdAlpha::face_centered, 2);
  const Eigen::VectorXd noise = Eigen::VectorXd::LinSpaced(16, -1.0, 1.0);
  CHECK(simulate_response(d, ScenarioSpec::make(1, 0.0), noise) == noise);
  const ScenarioSpec s = ScenarioSpec::make(1, 1.5);
  CHECK((simulate_response(d, s, noise) - scenario_mean(d, s) - noise).isZero(1e-14));
  const Eigen::VectorXd a = simulate_response(d, s, 42);
  CHECK(a == simulate_response(d, s, 42));
  CHECK(a != simulate_response(d, s, 43));
}

TEST_CASE("surface draws: zero spread reproduces f_hat, unit residual sd otherwise") {
  const auto specs = ccd_factor_specs(CcdAlpha::face_centered);
  const auto terms = full_rsm_terms();
  const FactorTable d = ccd_design(CcdAlpha::face_centered, 2);
  const FactorTable pts = sample_points(specs, 50000, 3);

  const auto flat = svem_fit(d, Eigen::VectorXd::Constant(16, 1.0), specs, terms, Learner::forward_selection, 20, 1);
  const Eigen::VectorXd v0 = sample_surface(flat, pts, 9);
  CHECK((v0 - svem_predict(flat, pts).f_hat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((v0.array() - 1.0).abs().maxCoeff() < 1e-12);

  const auto model = svem_fit(d, simulate_response(d, ScenarioSpec::make(1, 1.0), 4), specs, terms,
                              Learner::forward_selection, 30, 2);
  const PredictionSummary pred = svem_predict(model, pts);
  const Eigen::VectorXd v = sample_surface(model, pts, 9);
  double sum = 0.0, sq = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (pred.s_hat(i) <= 0.0) continue;
    const double z = (v(i) - pred.f_hat(i)) / pred.s_hat(i);
    sum += z;
    sq += z * z;
    ++used;
  }
  REQUIRE(used > 40000);
  const double mean = sum / static_cast<double>(used);
  const double sd = std::sqrt(sq / static_cast<double>(used) - mean * mean);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sd - 1.0) < 0.02);
  CHECK(v == sample_surface(model, pts, 9));
}

TEST_CASE("power estimates: small run is sane and reproducible") {
  TestSettings s;
  s.n_perm = 20;
  s.n_point = 60;
  s.n_boot = 20;
  const std::vector<PowerMethod> methods{PowerMethod::svem_fs, PowerMethod::anova_full,
                                         PowerMethod::anova_reduced};
  const auto strong = estimate_power(ScenarioSpec::make(1, 3.0), methods, 6, s, 5);
  REQUIRE(strong.size() == 3);
  for (const auto& p : strong) {
    CHECK(p.trials == 6);
    CHECK(p.beta == 3.0);
    CHECK(p.rejections >= 5);
  }
  PowerOptions threaded;
  threaded.threads = 3;
  const auto again = estimate_power(ScenarioSpec::make(1, 3.0), methods, 6, s, 5, threaded);
  for (std::size_t m = 0; m < 3; ++m) CHECK(again[m].rejections == strong[m].rejections);

  const PowerPoint p{1.0, PowerMethod::svem_fs, 30, 100};
  CHECK(p.power() == 0.3);
  CHECK(p.standard_error() == doctest::Approx(std::sqrt(0.3 * 0.7 / 100.0)));
  CHECK(parse_power_method(to_string(PowerMethod::anova_reduced)) == PowerMethod::anova_reduced);
  CHECK_THROWS_AS(parse_power_method("bogus"), DomainError);
}
