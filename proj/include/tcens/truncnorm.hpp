/**
 * @file truncnorm.hpp
 * @brief Left-truncated normal distribution: density, distribution function,
 *        mean, expected censoring/truncation fractions and an inverse
 *        transform sampler.
 *
 * "No truncation" is represented by an empty optional bound rather than a
 * large negative number, so the plain-normal reductions are exact.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "tcens/normal.hpp"

namespace tcens {

/// Latent normal N(mu, sigma^2) restricted to [a, inf).
struct TruncNormParams {
  double mu = 0.0;
  double sigma = 1.0;
  std::optional<double> a;  ///< empty: no truncation

  void validate() const {
    if (!std::isfinite(mu)) throw std::domain_error("truncnorm: mu must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::domain_error("truncnorm: sigma must be positive and finite");
    if (a && !std::isfinite(*a))
      throw std::domain_error("truncnorm: truncation bound must be finite (omit it for none)");
  }

  /// Standardized truncation bound; -inf without truncation.
  double a_std() const { return a ? (*a - mu) / sigma : -normal::kInf; }
};

/// Left-censoring at a detection limit.
struct CensoringScheme {
  double nu = 0.0;
};

namespace detail {

inline void require_censoring_above_bound(const TruncNormParams& p, const CensoringScheme& s) {
  if (!std::isfinite(s.nu)) throw std::domain_error("truncnorm: detection limit must be finite");
  if (p.a && !(s.nu > *p.a))
    throw std::domain_error("truncnorm: detection limit must exceed the truncation bound");
}

}  // namespace detail

/// log f(y); -inf outside the support.
inline double tn_log_pdf(double y, const TruncNormParams& p) {
  p.validate();
  if (!std::isfinite(y)) throw std::domain_error("tn_pdf: y must be finite");
  if (p.a && y < *p.a) return -normal::kInf;
  const double z = (y - p.mu) / p.sigma;
  return normal::log_pdf(z) - std::log(p.sigma) - normal::log_sf(p.a_std());
}

inline double tn_pdf(double y, const TruncNormParams& p) { return std::exp(tn_log_pdf(y, p)); }

inline double tn_cdf(double y, const TruncNormParams& p) {
  p.validate();
  if (std::isnan(y)) throw std::domain_error("tn_cdf: y is NaN");
  if (p.a && y <= *p.a) return 0.0;
  if (y == normal::kInf) return 1.0;
  if (y == -normal::kInf) return 0.0;
  const double z = (y - p.mu) / p.sigma;
  const double log_mass = normal::log_sf(p.a_std());
  // Upper half: 1 - S(y)/S(a) keeps absolute accuracy near 1.
  if (z > 0.0) return -std::expm1(normal::log_sf(z) - log_mass);
  return std::exp(normal::log_diff_cdf(p.a_std(), z) - log_mass);
}

/// Expected share of a latent sample that is censored / truncated away.
struct ExpectedFractions {
  double censor_frac = 0.0;  ///< P(Y* <= nu), Y* truncated normal
  double trunc_frac = 0.0;   ///< P(X* < a), X* the untruncated latent normal
  double ratio = 0.0;        ///< censor_frac / trunc_frac
};

inline ExpectedFractions expected_fractions(const TruncNormParams& p, const CensoringScheme& s) {
  p.validate();
  if (!p.a) throw std::domain_error("expected_fractions: no truncation bound, truncation fraction undefined");
  detail::require_censoring_above_bound(p, s);
  ExpectedFractions out;
  out.trunc_frac = normal::cdf(p.a_std());
  out.censor_frac = tn_cdf(s.nu, p);
  out.ratio = out.censor_frac / out.trunc_frac;
  return out;
}

/**
 * Ratio of the two percentages after rounding each to two decimals, the
 * convention used for published expected-censoring tables
 * (e.g. 13.18% / 0.73% = 18.05).
 */
inline double table_ratio(const ExpectedFractions& f) {
  const double c = std::round(f.censor_frac * 1e4) / 100.0;
  const double t = std::round(f.trunc_frac * 1e4) / 100.0;
  return c / t;
}

/// E[Y*] = mu + sigma * phi(a*) / (1 - Phi(a*)).
inline double tn_mean(const TruncNormParams& p) {
  p.validate();
  if (!p.a) return p.mu;
  const double as = p.a_std();
  return p.mu + p.sigma * std::exp(normal::log_pdf(as) - normal::log_sf(as));
}

/**
 * Inverse-transform draw for a uniform u in [0, 1].
 *
 * u = 1 (and u = 0 without truncation) would map to an infinite quantile;
 * u is clamped to [2^-1074, 1 - 2^-53], so the extreme draws are the
 * largest representable quantiles (about +/-8.3 and -38.5 standard
 * deviations). When the bound sits above the mean the draw is taken through
 * the upper tail to keep relative precision.
 */
inline double tn_sample(const TruncNormParams& p, double u) {
  p.validate();
  if (std::isnan(u) || u < 0.0 || u > 1.0) throw std::domain_error("tn_sample: u outside [0,1]");
  constexpr double kTop = 1.0 - 0x1p-53;
  u = std::min(u, kTop);

  if (!p.a) {
    u = std::max(u, std::numeric_limits<double>::denorm_min());
    return p.mu + p.sigma * normal::quantile(u);
  }
  const double as = p.a_std();
  double z;
  if (as <= 0.0) {
    const double lower = normal::cdf(as);
    z = normal::quantile(std::min(u * normal::sf(as) + lower, kTop));
  } else {
    const double tail = (1.0 - u) * normal::sf(as);
    z = -normal::quantile(std::max(tail, std::numeric_limits<double>::denorm_min()));
  }
  return std::max(*p.a, p.mu + p.sigma * z);
}

}  // namespace tcens
