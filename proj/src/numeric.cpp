#include "thr/numeric.hpp"

#include <algorithm>
#include <limits>

#include "thr/error.hpp"

namespace thr {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ParameterError("normal_quantile: p must lie in [0,1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // Halley refinement.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

}  // namespace

std::int64_t sample_hypergeometric(std::int64_t population, std::int64_t marked,
                                   std::int64_t draws, Rng& rng) {
  if (population < 0 || marked < 0 || draws < 0 || marked > population ||
      draws > population) {
    throw ParameterError("sample_hypergeometric: invalid arguments");
  }
  const std::int64_t unmarked = population - marked;
  const std::int64_t lo = std::max<std::int64_t>(0, draws - unmarked);
  const std::int64_t hi = std::min(marked, draws);
  if (lo == hi) return lo;

  std::int64_t mode = ((draws + 1) * (marked + 1)) / (population + 2);
  mode = std::clamp(mode, lo, hi);
  const double p_mode = std::exp(log_choose(marked, mode) +
                                 log_choose(unmarked, draws - mode) -
                                 log_choose(population, draws));

  // Ratio p(k+1)/p(k).
  auto up = [&](std::int64_t k) {
    return static_cast<double>(marked - k) * static_cast<double>(draws - k) /
           (static_cast<double>(k + 1) * static_cast<double>(unmarked - draws + k + 1));
  };

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  if (u <= p_mode) return mode;
  u -= p_mode;

  // Walk outward from the mode, alternating sides, subtracting mass until
  // the uniform is exhausted.
  std::int64_t left = mode, right = mode;
  double p_left = p_mode, p_right = p_mode;
  while (left > lo || right < hi) {
    if (right < hi) {
      p_right *= up(right);
      ++right;
      if (u <= p_right) return right;
      u -= p_right;
    }
    if (left > lo) {
      p_left /= up(left - 1);
      --left;
      if (u <= p_left) return left;
      u -= p_left;
    }
  }
  return mode;  // rounding residue
}

double type1_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ParameterError("type1_quantile: empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto idx = static_cast<std::int64_t>(std::ceil(p * n - 1e-12));
  idx = std::clamp<std::int64_t>(idx, 1, static_cast<std::int64_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(idx - 1)];
}

}  // namespace thr
