#include "oracles.hpp"

#include "svem/errors.hpp"
#include "svem/point_sampler.hpp"
#include "svem/whole_model_test.hpp"

#include <doctest.h>

#include <random>

using namespace svem;

namespace {

const std::vector<FactorSpec> kSpecs{{"x", FactorRole::continuous, 0.0, 10.0, {}},
                                     {"z", FactorRole::continuous, -1.0, 1.0, {}}};
const std::vector<Term> kTerms{Term::intercept(), Term::main("x"), Term::main("z"),
                               Term::product({"x", "x"}), Term::product({"x", "z"})};

TestSettings small_settings() {
  TestSettings s;
  s.n_perm = 20;
  s.n_point = 40;
  s.n_boot = 20;
  s.n_svem = 3;
  s.seed = 5;
  return s;
}

FactorTable small_design(Eigen::Index n) { return sample_points(kSpecs, n, 77); }

Eigen::VectorXd response(const FactorTable& t, double slope, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd y(t.rows());
  for (Eigen::Index i = 0; i < t.rows(); ++i) y(i) = slope * t.values(i, 0) + normal(rng);
  return y;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng) * (1.0 + j) + 0.5 * j;
  // Correlate neighbouring columns.
  for (Eigen::Index j = 1; j < c; ++j) m.col(j) += 0.6 * m.col(j - 1);
  return m;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

TEST_CASE("standardized prediction guards zero spread") {
  PredictionSummary s;
  s.f_hat = Eigen::Vector4d(3.0, 3.0 + 1e-12, 5.0, 1.0);
  s.s_hat = Eigen::Vector4d(0.0, 0.0, 0.0, 0.5);
  const Eigen::VectorXd z = standardized_prediction_row(s, 3.0);
  CHECK(z(0) == 0.0);
  CHECK(z(1) == 0.0);
  CHECK(z(2) == 1e6);
  CHECK(z(3) == doctest::Approx(-4.0));
}

TEST_CASE("settings are validated") {
  TestSettings s;
  CHECK_NOTHROW(s.validate());
  for (auto mutate : std::vector<void (*)(TestSettings&)>{
           [](TestSettings& t) { t.n_perm = 1; }, [](TestSettings& t) { t.n_point = 0; },
           [](TestSettings& t) { t.n_boot = 0; }, [](TestSettings& t) { t.n_svem = 0; },
           [](TestSettings& t) { t.percent = 0.0; }, [](TestSettings& t) { t.percent = 100.5; }}) {
    TestSettings bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), DomainError);
  }
}

TEST_CASE("reference permutations are permutations; n = 1 is the identity") {
  for (int j = 0; j < 10; ++j) {
    auto perm = reference_permutation(17, 3, j);
    std::sort(perm.begin(), perm.end());
    for (Eigen::Index i = 0; i < 17; ++i) CHECK(perm[static_cast<std::size_t>(i)] == i);
  }
  CHECK(reference_permutation(17, 3, 0) == reference_permutation(17, 3, 0));
  CHECK(reference_permutation(17, 3, 0) != reference_permutation(17, 3, 1));
  CHECK(reference_permutation(1, 3, 4) == std::vector<Eigen::Index>{0});
}

TEST_CASE("constant response gives all-zero observed rows") {
  const FactorTable t = small_design(10);
  TestProblem problem(t, Eigen::VectorXd::Constant(10, 2.0), kSpecs, kTerms,
                      Learner::forward_selection, sample_points(kSpecs, 25, 1));
  const Eigen::MatrixXd m = build_observed_matrix(problem, small_settings());
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 25);
  CHECK(m.isZero(0.0));
}

TEST_CASE("retained component count") {
  const Eigen::Vector3d shares(0.6, 0.3, 0.1);
  CHECK(retained_component_count(shares, 1.0, 85.0) == 2);
  CHECK(retained_component_count(shares, 1.0, 50.0) == 1);
  CHECK(retained_component_count(shares, 1.0, 90.0) == 3);  // needs strictly more than 90%
  CHECK(retained_component_count(shares, 1.0, 100.0) == 3);
  CHECK(retained_component_count(shares * 3.0, 3.0, 85.0) == 2);
}

TEST_CASE("reduced-rank distances match the brute-force pseudo-inverse at percent = 100") {
  std::mt19937_64 rng(101);
  for (auto [r, c] : {std::pair<Eigen::Index, Eigen::Index>{40, 6}, {30, 12}, {8, 20}}) {
    const Eigen::MatrixXd ref = random_matrix(r, c, rng);
    const Eigen::MatrixXd obs = random_matrix(4, c, rng);
    const MahalanobisResult got = reduced_rank_mahalanobis(ref, obs, 100.0);
    const oracle::Mahalanobis want = oracle::brute_force_mahalanobis(ref, obs);
    CHECK(got.k == std::min(r - 1, c));
    CHECK(got.eigenvalues.sum() == doctest::Approx(static_cast<double>(c)).epsilon(1e-12));
    CHECK((got.d_ref - want.d_ref).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((got.d_obs - want.d_obs).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("orthogonal standardized columns give unit eigenvalues") {
  // Columns of a 4-run two-level design: mutually orthogonal, mean 0.
  Eigen::MatrixXd ref(4, 3);
  ref << 1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1;
  const MahalanobisResult r = reduced_rank_mahalanobis(ref, ref.topRows(1), 100.0);
  REQUIRE(r.eigenvalues.size() == 3);
  CHECK((r.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-12);
  // Each row lies at squared distance sum_j z_j^2 with sd = sqrt(4/3).
  CHECK(r.d_obs(0) == doctest::Approx(std::sqrt(3.0 * 0.75)).epsilon(1e-12));
}

TEST_CASE("observed row at the reference mean has distance zero; zero reference is degenerate") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd ref = random_matrix(30, 5, rng);
  const Eigen::MatrixXd obs = ref.colwise().mean();
  const MahalanobisResult r = reduced_rank_mahalanobis(ref, obs, 85.0);
  CHECK(r.d_obs(0) < 1e-12);
  CHECK(r.k >= 1);
  CHECK(r.k <= 5);

  Eigen::MatrixXd with_constant = ref;
  with_constant.col(2).setConstant(4.0);
  const MahalanobisResult c = reduced_rank_mahalanobis(with_constant, with_constant.topRows(2), 100.0);
  CHECK(c.dropped_columns == 1);
  CHECK(c.eigenvalues.sum() == doctest::Approx(5.0));

  CHECK_THROWS_AS(reduced_rank_mahalanobis(Eigen::MatrixXd::Zero(10, 4), Eigen::MatrixXd::Zero(1, 4), 85.0),
                  DegenerateError);
}

TEST_CASE("p-values from distances") {
  std::mt19937_64 rng(7);
  std::gamma_distribution<double> g(4.0, 1.0);
  std::vector<double> ref(500);
  for (auto& v : ref) v = g(rng);
  std::vector<double> sorted = ref;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[249] + sorted[250]);

  for (ReferenceFamily family : {ReferenceFamily::shash, ReferenceFamily::weibull, ReferenceFamily::gamma}) {
    const double at_median = p_value_from_distances(ref, std::vector<double>{median}, family).p_value;
    CHECK(std::abs(at_median - 0.5) < 0.06);
    const double far = p_value_from_distances(ref, std::vector<double>{sorted.back() * 3}, family).p_value;
    CHECK(far < 0.01);
    const double below = p_value_from_distances(ref, std::vector<double>{sorted.front() * 0.5}, family).p_value;
    CHECK(below > 0.95);
  }
  // The median over several observed distances is used.
  const double mixed =
      p_value_from_distances(ref, std::vector<double>{0.0, median, 1e3}, ReferenceFamily::shash).p_value;
  CHECK(std::abs(mixed - 0.5) < 0.06);
}

TEST_CASE("reference fit falls back when the primary family fails") {
  std::vector<double> ref(50, 0.0);
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  ref[0] = -1.0;  // negative: weibull and gamma cannot fit, shash can
  const PValueResult ok = p_value_from_distances(ref, std::vector<double>{1.0}, ReferenceFamily::shash);
  CHECK(ok.reference.family == ReferenceFamily::shash);
  CHECK_THROWS_AS(p_value_from_distances(ref, std::vector<double>{1.0}, ReferenceFamily::gamma), Error);
  const std::vector<double> flat(30, 2.0);
  CHECK_THROWS_AS(p_value_from_distances(flat, std::vector<double>{1.0}, ReferenceFamily::shash), Error);
}

TEST_CASE("whole-model test: shape, range, determinism, thread independence") {
  const FactorTable t = small_design(12);
  const Eigen::VectorXd y = response(t, 0.8, 9);
  TestSettings s = small_settings();
  const TestResult a = whole_model_test(t, y, kSpecs, kTerms, Learner::forward_selection, s);
  CHECK(a.d_ref.size() == s.n_perm);
  CHECK(a.d_obs.size() == s.n_svem);
  CHECK(a.p_value >= 0.0);
  CHECK(a.p_value <= 1.0);
  CHECK(a.n_rows == 12);
  CHECK(a.y_bar == doctest::Approx(y.mean()));
  CHECK(a.k >= 1);
  CHECK(a.eigenvalues.sum() == doctest::Approx(static_cast<double>(s.n_point)).epsilon(1e-9));

  const TestResult b = whole_model_test(t, y, kSpecs, kTerms, Learner::forward_selection, s);
  s.threads = 3;
  const TestResult c = whole_model_test(t, y, kSpecs, kTerms, Learner::forward_selection, s);
  CHECK(a.d_ref == b.d_ref);
  CHECK(a.d_obs == c.d_obs);
  CHECK(a.d_ref == c.d_ref);
  CHECK(a.p_value == c.p_value);
}

TEST_CASE("nSVEM = 1 uses the single observed distance") {
  const FactorTable t = small_design(12);
  const Eigen::VectorXd y = response(t, 0.8, 10);
  TestSettings s = small_settings();
  s.n_svem = 1;
  const TestResult r = whole_model_test(t, y, kSpecs, kTerms, Learner::lasso, s);
  REQUIRE(r.d_obs.size() == 1);
  CHECK(r.p_value == doctest::Approx(1.0 - r.reference.cdf(r.d_obs(0))).epsilon(1e-14));
}

TEST_CASE("strong signal rejects, pure noise usually does not") {
  const FactorTable t = small_design(14);
  TestSettings s = small_settings();
  s.n_perm = 40;
  const TestResult strong =
      whole_model_test(t, response(t, 3.0, 11), kSpecs, kTerms, Learner::forward_selection, s);
  CHECK(strong.p_value < 0.05);
  int small = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    s.seed = 100 + seed;
    if (whole_model_test(t, response(t, 0.0, 200 + seed), kSpecs, kTerms, Learner::forward_selection, s)
            .p_value < 0.05)
      ++small;
  }
  CHECK(small <= 2);
}

TEST_CASE("problem construction rejects mismatched inputs") {
  const FactorTable t = small_design(6);
  const FactorTable pts = sample_points(kSpecs, 10, 2);
  CHECK_THROWS_AS(TestProblem(t, Eigen::VectorXd::Ones(5), kSpecs, kTerms, Learner::forward_selection, pts),
                  DomainError);
  const std::vector<Term> no_intercept{Term::main("x")};
  CHECK_THROWS_AS(TestProblem(t, Eigen::VectorXd::Ones(6), kSpecs, no_intercept, Learner::forward_selection, pts),
                  DomainError);
}
