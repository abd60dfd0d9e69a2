#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace svem {

double normal_cdf(double x);
double normal_pdf(double x);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// CDF and upper tail of the F(d1, d2) distribution.
double f_cdf(double x, double d1, double d2);
double f_upper_tail(double x, double d1, double d2);

// Sinh-arcsinh distribution, parametrized so that
//   F(x) = Phi( sinh( tailweight * asinh((x - location) / scale) - skewness ) ).
struct ShashParams {
  double location = 0.0;
  double scale = 1.0;
  double skewness = 0.0;
  double tailweight = 1.0;
};

double shash_cdf(double x, const ShashParams& p);
double shash_pdf(double x, const ShashParams& p);
double shash_log_likelihood(std::span<const double> samples, const ShashParams& p);
// Quantile transform location + scale * sinh((asinh(z) + skewness) / tailweight)
// of a standard normal z.
double shash_from_normal(double z, const ShashParams& p);

// Nelder-Mead MLE over (location, log scale, skewness, log tailweight)
// started at (median, IQR / 1.35, 0, 1). DegenerateError on zero spread,
// ConvergenceError when the optimizer runs out of iterations.
ShashParams shash_fit_mle(std::span<const double> samples);

// Moment-free starting point used by shash_fit_mle.
ShashParams shash_start(std::span<const double> samples);

struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;
};

double weibull_cdf(double x, const WeibullParams& p);
WeibullParams weibull_fit_mle(std::span<const double> samples);

struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;
};

double gamma_cdf(double x, const GammaParams& p);
GammaParams gamma_fit_mle(std::span<const double> samples);

enum class ReferenceFamily { shash, weibull, gamma };

std::string_view to_string(ReferenceFamily family);
ReferenceFamily parse_reference_family(std::string_view text);

// A fitted reference distribution for the permutation distances.
struct FittedReference {
  ReferenceFamily family = ReferenceFamily::shash;
  std::variant<ShashParams, WeibullParams, GammaParams> params;

  double cdf(double x) const;
  std::string describe() const;
};

FittedReference fit_reference(ReferenceFamily family, std::span<const double> samples);

}  // namespace svem
