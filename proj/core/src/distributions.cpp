#include "svem/distributions.hpp"

#include "svem/errors.hpp"
#include "svem/nelder_mead.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace svem {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

void require_finite(std::span<const double> samples, std::size_t min_count, const char* what) {
  if (samples.size() < min_count)
    throw InsufficientDataError(fmt::format("{} needs at least {} samples, got {}", what,
                                            min_count, samples.size()));
  for (double x : samples)
    if (!std::isfinite(x)) throw DomainError(fmt::format("{}: non-finite sample", what));
}

// Positive-support families: rejects negatives and floors exact zeros at a
// small fraction of the smallest positive sample.
std::vector<double> positive_samples(std::span<const double> samples, const char* what) {
  require_finite(samples, 2, what);
  double min_pos = std::numeric_limits<double>::infinity();
  for (double x : samples) {
    if (x < 0.0) throw DomainError(fmt::format("{}: negative sample {}", what, x));
    if (x > 0.0) min_pos = std::min(min_pos, x);
  }
  if (!std::isfinite(min_pos)) throw DegenerateError(fmt::format("{}: all samples are zero", what));
  std::vector<double> out(samples.begin(), samples.end());
  for (double& x : out)
    if (x == 0.0) x = 1e-3 * min_pos;
  return out;
}

double log_cosh(double w) {
  const double a = std::abs(w);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (std::isnan(x)) throw DomainError("incomplete beta: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

double f_cdf(double x, double d1, double d2) {
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

double f_upper_tail(double x, double d1, double d2) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x));
}

double shash_cdf(double x, const ShashParams& p) {
  const double z = (x - p.location) / p.scale;
  return normal_cdf(std::sinh(p.tailweight * std::asinh(z) - p.skewness));
}

double shash_pdf(double x, const ShashParams& p) {
  const double z = (x - p.location) / p.scale;
  const double w = p.tailweight * std::asinh(z) - p.skewness;
  return p.tailweight * std::cosh(w) / (p.scale * std::sqrt(1.0 + z * z)) *
         normal_pdf(std::sinh(w));
}

double shash_log_likelihood(std::span<const double> samples, const ShashParams& p) {
  double ll = 0.0;
  const double lead = std::log(p.tailweight) - std::log(p.scale) - kLogSqrt2Pi;
  for (double x : samples) {
    const double z = (x - p.location) / p.scale;
    const double w = p.tailweight * std::asinh(z) - p.skewness;
    const double s = std::sinh(w);
    ll += lead - 0.5 * std::log1p(z * z) + log_cosh(w) - 0.5 * s * s;
  }
  return ll;
}

double shash_from_normal(double z, const ShashParams& p) {
  return p.location + p.scale * std::sinh((std::asinh(z) + p.skewness) / p.tailweight);
}

ShashParams shash_start(std::span<const double> samples) {
  require_finite(samples, 10, "SHASH fit");
  auto s = sorted_copy(samples);
  ShashParams start;
  start.location = quantile_sorted(s, 0.5);
  double spread = (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)) / 1.35;
  if (!(spread > 0.0)) {
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double x : s) var += (x - mean) * (x - mean);
    spread = std::sqrt(var / static_cast<double>(s.size() - 1));
  }
  if (!(spread > 0.0)) throw DegenerateError("SHASH fit: samples have zero spread");
  start.scale = spread;
  return start;
}

ShashParams shash_fit_mle(std::span<const double> samples) {
  const ShashParams start = shash_start(samples);
  // Work on standardized data; the MLE is equivariant under the affine map.
  std::vector<double> u(samples.begin(), samples.end());
  for (double& x : u) x = (x - start.location) / start.scale;

  auto unpack = [](const Eigen::VectorXd& t) {
    return ShashParams{t(0), std::exp(t(1)), t(2), std::exp(t(3))};
  };
  auto nll = [&](const Eigen::VectorXd& t) {
    if (std::abs(t(1)) > 50.0 || std::abs(t(3)) > 50.0)
      return std::numeric_limits<double>::infinity();
    return -shash_log_likelihood(u, unpack(t));
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd step = Eigen::VectorXd::Constant(4, 0.25);
  NelderMeadResult r = nelder_mead(nll, x0, step);
  if (!r.converged || !std::isfinite(r.value))
    throw ConvergenceError("SHASH maximum likelihood did not converge");
  ShashParams fit = unpack(r.x);
  fit.location = start.location + start.scale * fit.location;
  fit.scale *= start.scale;
  return fit;
}

double weibull_cdf(double x, const WeibullParams& p) {
  if (!(x > 0.0)) return 0.0;
  return -std::expm1(-std::pow(x / p.scale, p.shape));
}

WeibullParams weibull_fit_mle(std::span<const double> samples) {
  std::vector<double> x = positive_samples(samples, "Weibull fit");
  const double xmax = *std::max_element(x.begin(), x.end());
  double mean_log = 0.0;
  for (double& v : x) {
    v /= xmax;
    mean_log += std::log(v);
  }
  mean_log /= static_cast<double>(x.size());
  // Profile score in the shape; increasing in k.
  auto score = [&](double k) {
    double s0 = 0.0;
    double s1 = 0.0;
    for (double v : x) {
      const double vk = std::pow(v, k);
      s0 += vk;
      s1 += vk * std::log(v);
    }
    return s1 / s0 - 1.0 / k - mean_log;
  };
  double lo = std::log(1e-3);
  double hi = std::log(1e3);
  if (!(score(std::exp(lo)) < 0.0) || !(score(std::exp(hi)) > 0.0))
    throw ConvergenceError("Weibull shape estimate outside [1e-3, 1e3]");
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (score(std::exp(mid)) < 0.0 ? lo : hi) = mid;
  }
  WeibullParams p;
  p.shape = std::exp(0.5 * (lo + hi));
  double mk = 0.0;
  for (double v : x) mk += std::pow(v, p.shape);
  mk /= static_cast<double>(x.size());
  p.scale = xmax * std::pow(mk, 1.0 / p.shape);
  return p;
}

double gamma_cdf(double x, const GammaParams& p) {
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(p.shape, x / p.scale);
}

GammaParams gamma_fit_mle(std::span<const double> samples) {
  std::vector<double> x = positive_samples(samples, "gamma fit");
  double mean = 0.0;
  double mean_log = 0.0;
  for (double v : x) {
    mean += v;
    mean_log += std::log(v);
  }
  mean /= static_cast<double>(x.size());
  mean_log /= static_cast<double>(x.size());
  const double s = std::log(mean) - mean_log;
  if (!(s > 1e-14)) throw DegenerateError("gamma fit: samples have zero spread");
  // Newton on log(a) - digamma(a) = s from the Minka starting point.
  double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(a) - boost::math::digamma(a) - s;
    const double df = 1.0 / a - boost::math::trigamma(a);
    double next = a - f / df;
    if (!(next > 0.0)) next = 0.5 * a;
    if (std::abs(next - a) <= 1e-13 * a) {
      a = next;
      converged = true;
      break;
    }
    a = next;
  }
  if (!converged) throw ConvergenceError("gamma shape estimate did not converge");
  return GammaParams{a, mean / a};
}

std::string_view to_string(ReferenceFamily family) {
  switch (family) {
    case ReferenceFamily::shash:
      return "shash";
    case ReferenceFamily::weibull:
      return "weibull";
    case ReferenceFamily::gamma:
      return "gamma";
  }
  return "unknown";
}

ReferenceFamily parse_reference_family(std::string_view text) {
  if (text == "shash") return ReferenceFamily::shash;
  if (text == "weibull") return ReferenceFamily::weibull;
  if (text == "gamma") return ReferenceFamily::gamma;
  throw DomainError("unknown reference family '" + std::string(text) + "'");
}

double FittedReference::cdf(double x) const {
  return std::visit(
      [x](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ShashParams>)
          return shash_cdf(x, p);
        else if constexpr (std::is_same_v<P, WeibullParams>)
          return weibull_cdf(x, p);
        else
          return gamma_cdf(x, p);
      },
      params);
}

std::string FittedReference::describe() const {
  return std::visit(
      [](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ShashParams>)
          return fmt::format("shash(location={:.6g}, scale={:.6g}, skewness={:.6g}, tailweight={:.6g})",
                             p.location, p.scale, p.skewness, p.tailweight);
        else if constexpr (std::is_same_v<P, WeibullParams>)
          return fmt::format("weibull(shape={:.6g}, scale={:.6g})", p.shape, p.scale);
        else
          return fmt::format("gamma(shape={:.6g}, scale={:.6g})", p.shape, p.scale);
      },
      params);
}

FittedReference fit_reference(ReferenceFamily family, std::span<const double> samples) {
  FittedReference fit;
  fit.family = family;
  switch (family) {
    case ReferenceFamily::shash:
      fit.params = shash_fit_mle(samples);
      break;
    case ReferenceFamily::weibull:
      fit.params = weibull_fit_mle(samples);
      break;
    case ReferenceFamily::gamma:
      fit.params = gamma_fit_mle(samples);
      break;
  }
  return fit;
}

}  // namespace svem
