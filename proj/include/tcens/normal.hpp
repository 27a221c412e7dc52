/**
 * @file normal.hpp
 * @brief Standard normal primitives that stay accurate deep in the tails.
 *
 * Everything downstream (truncated-normal moments, censored likelihoods and
 * their derivatives) is written in terms of log-probabilities, so the
 * central routines here are log_cdf, log_sf and log_diff_cdf.
 */
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tcens::normal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

inline double log_pdf(double x) {
  if (std::isinf(x)) return -kInf;
  return -0.5 * x * x - kLogSqrt2Pi;
}

inline double pdf(double x) {
  if (std::isinf(x)) return 0.0;
  return std::exp(log_pdf(x));
}

/// Phi(x). erfc keeps full relative precision in the lower tail.
inline double cdf(double x) {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

/// 1 - Phi(x) without cancellation.
inline double sf(double x) { return cdf(-x); }

namespace detail {

// Asymptotic expansion of log Phi(x) for x << 0:
//   Phi(x) = phi(x)/(-x) * sum_k (-1)^k (2k-1)!! / x^(2k)
inline double log_cdf_asymptotic(double x) {
  const double inv_x2 = 1.0 / (x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= -(2.0 * k - 1.0) * inv_x2;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return log_pdf(x) - std::log(-x) + std::log(sum);
}

}  // namespace detail

/// log Phi(x), finite for every finite x.
inline double log_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x == kInf) return 0.0;
  if (x == -kInf) return -kInf;
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  if (x > -20.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
  return detail::log_cdf_asymptotic(x);
}

/// log(1 - Phi(x)).
inline double log_sf(double x) { return log_cdf(-x); }

/// log(1 - exp(x)) for x <= 0.
inline double log1mexp(double x) {
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

/**
 * log[Phi(hi) - Phi(lo)] for lo < hi; lo may be -inf.
 *
 * Both endpoints deep in the same tail would cancel catastrophically if the
 * difference were formed directly, so the larger term is factored out in
 * log space and the remainder goes through log1mexp. Returns -inf when the
 * interval is empty or the difference underflows.
 */
inline double log_diff_cdf(double lo, double hi) {
  if (!(hi > lo)) return -kInf;
  if (lo == -kInf) return log_cdf(hi);
  // Straddling zero: two positive erf terms, no cancellation.
  if (lo <= 0.0 && hi >= 0.0) return std::log(0.5 * (std::erf(hi * kInvSqrt2) + std::erf(-lo * kInvSqrt2)));
  if (lo > 0.0) {
    const double upper = log_sf(lo);
    return upper + log1mexp(log_sf(hi) - upper);
  }
  const double upper = log_cdf(hi);
  return upper + log1mexp(log_cdf(lo) - upper);
}

/**
 * Phi^{-1}(p) by Wichura's AS241 rational approximation followed by one
 * Newton correction. p = 0 and p = 1 map to -inf and +inf.
 */
inline double quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw std::domain_error("normal::quantile: probability outside [0,1]");
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;

  const double q = p - 0.5;
  double x;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
  } else {
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
    }
    if (q < 0.0) x = -x;
  }

  // Newton polish on the tail that keeps relative precision.
  const double dens = pdf(x);
  if (dens > 0.0) {
    const double resid = x <= 0.0 ? cdf(x) - p : (1.0 - p) - sf(x);
    x -= resid / dens;
  }
  return x;
}

}  // namespace tcens::normal
