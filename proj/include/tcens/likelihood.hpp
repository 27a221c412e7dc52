/**
 * @file likelihood.hpp
 * @brief Log-likelihood of left-censored, left-truncated normal regression.
 *
 * Every variant is a sum over records of up to three pieces, each a
 * function of the record's linear predictor m = x'beta and s = log sigma_j:
 *
 *   truncation  -log[1 - Phi(a*)]                 (all records, if a is set)
 *   censored    log[Phi(nu*) - Phi(a*)]           (records in S0)
 *   observed    -s + log phi((y - m) / sigma)     (records in S1)
 *
 * with c* = (c - m) / sigma. The engine below evaluates these together with
 * their first and second partials in (m, s); the chain rule through
 * m = x'beta then yields the gradient and Hessian in (beta, log sigma).
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "tcens/normal.hpp"
#include "tcens/sample.hpp"

namespace tcens {

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// The four sums of the censored-truncated log-likelihood, kept apart.
struct LoglikTerms {
  double truncation = 0.0;  ///< -sum_i log[1 - Phi(a_i*)]
  double censored = 0.0;    ///< sum_{S0} log[Phi(nu_i*) - Phi(a_i*)]
  double scale = 0.0;       ///< -sum_j n1j log sigma_j
  double density = 0.0;     ///< sum_{S1} log phi(r_i)

  double total() const {
    CompensatedSum s;
    s.add(truncation);
    s.add(censored);
    s.add(scale);
    s.add(density);
    return s.value();
  }
};

/// Value and (optionally) derivatives at one parameter point.
struct Evaluation {
  double value = 0.0;
  LoglikTerms terms;
  Eigen::VectorXd gradient;  ///< filled when order >= 1
  Eigen::MatrixXd hessian;   ///< filled when order >= 2
};

namespace detail {

/// One record's contribution and its partials in (m, s).
struct RecordTerms {
  double truncation = 0.0, censored = 0.0, scale = 0.0, density = 0.0;
  double d_m = 0.0, d_s = 0.0;
  double d_mm = 0.0, d_ms = 0.0, d_ss = 0.0;
  bool degenerate = false;  ///< censored mass underflowed to zero
};

inline RecordTerms record_terms(double y, bool censored, double m, double s,
                                const ModelSpec& spec, int order) {
  RecordTerms r;
  const double sigma = std::exp(s);
  const bool has_a = spec.a.has_value() && std::isfinite(*spec.a);
  const double as = has_a ? (*spec.a - m) / sigma : -normal::kInf;

  if (has_a) {
    const double log_q = normal::log_sf(as);
    r.truncation = -log_q;
    if (order >= 1) {
      const double h = std::exp(normal::log_pdf(as) - log_q);  // phi/(1-Phi)
      r.d_m += -h / sigma;
      r.d_s += -as * h;
      if (order >= 2) {
        const double k = 1.0 + as * h - as * as;
        r.d_mm += h * (h - as) / (sigma * sigma);
        r.d_ms += h * k / sigma;
        r.d_ss += as * h * k;
      }
    }
  }

  if (censored) {
    const double vs = (*spec.nu - m) / sigma;
    const double log_d = normal::log_diff_cdf(as, vs);
    r.censored = log_d;
    if (!std::isfinite(log_d)) {
      r.degenerate = true;
      return r;
    }
    if (order >= 1) {
      // phi(c*)/D for each endpoint; the a-endpoint vanishes without truncation.
      const double rv = std::exp(normal::log_pdf(vs) - log_d);
      const double ra = has_a ? std::exp(normal::log_pdf(as) - log_d) : 0.0;
      const double a_ra = has_a ? as * ra : 0.0;
      const double a2_ra = has_a ? as * as * ra : 0.0;
      const double a3_ra = has_a ? (as * as * as - as) * ra : 0.0;
      const double A1 = rv - ra;
      const double B1 = vs * rv - a_ra;
      r.d_m += -A1 / sigma;
      r.d_s += -B1;
      if (order >= 2) {
        const double A2 = vs * vs * rv - a2_ra;
        const double B3 = (vs * vs * vs - vs) * rv - a3_ra;
        r.d_mm += -(B1 + A1 * A1) / (sigma * sigma);
        r.d_ms += (A1 - A2 - A1 * B1) / sigma;
        r.d_ss += -(B3 + B1 * B1);
      }
    }
  } else {
    const double z = (y - m) / sigma;
    r.scale = -s;
    r.density = normal::log_pdf(z);
    if (order >= 1) {
      r.d_m += z / sigma;
      r.d_s += z * z - 1.0;
      if (order >= 2) {
        r.d_mm += -1.0 / (sigma * sigma);
        r.d_ms += -2.0 * z / sigma;
        r.d_ss += -2.0 * z * z;
      }
    }
  }
  return r;
}

inline Evaluation accumulate(const CensoredSample& sample, const ModelSpec& spec,
                             const ParamVector& theta, int order) {
  check_dimensions(sample, spec, theta);
  if (!spec.nu && sample.n_censored() > 0)
    throw std::invalid_argument("likelihood: censored records need a model with a detection limit");
  const Eigen::Index p = sample.n_coef();
  const Eigen::Index J = theta.log_sigma.size();
  const auto n = static_cast<Eigen::Index>(sample.size());
  const bool per_group = spec.variance == VarianceStructure::PerGroup;

  const Eigen::VectorXd m = sample.X * theta.beta;
  CompensatedSum trunc, cens, scale, dens;

  Eigen::VectorXd w_m, w_mm;
  Eigen::MatrixXd ms_by_group;  // n x J, nonzero only in the record's own group column
  Eigen::VectorXd g_s, h_ss;
  if (order >= 1) {
    w_m = Eigen::VectorXd::Zero(n);
    g_s = Eigen::VectorXd::Zero(J);
  }
  if (order >= 2) {
    w_mm = Eigen::VectorXd::Zero(n);
    ms_by_group = Eigen::MatrixXd::Zero(n, J);
    h_ss = Eigen::VectorXd::Zero(J);
  }

  bool degenerate = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const Eigen::Index j = per_group ? sample.group[iu] : 0;
    const RecordTerms r = record_terms(sample.y[iu], sample.censored[iu], m(i), theta.log_sigma(j), spec, order);
    if (r.degenerate) {
      degenerate = true;
      if (order == 0) break;
      continue;
    }
    trunc.add(r.truncation);
    cens.add(r.censored);
    scale.add(r.scale);
    dens.add(r.density);
    if (order >= 1) {
      w_m(i) = r.d_m;
      g_s(j) += r.d_s;
    }
    if (order >= 2) {
      w_mm(i) = r.d_mm;
      ms_by_group(i, j) = r.d_ms;
      h_ss(j) += r.d_ss;
    }
  }

  Evaluation ev;
  if (degenerate) {
    if (order >= 1) throw std::domain_error("gradient undefined at degenerate point");
    ev.value = -normal::kInf;
    ev.terms.censored = -normal::kInf;
    return ev;
  }
  ev.terms = {trunc.value(), cens.value(), scale.value(), dens.value()};
  ev.value = ev.terms.total();

  if (order >= 1) {
    ev.gradient.resize(p + J);
    ev.gradient.head(p) = sample.X.transpose() * w_m;
    ev.gradient.tail(J) = g_s;
  }
  if (order >= 2) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p + J, p + J);
    H.topLeftCorner(p, p) = sample.X.transpose() * w_mm.asDiagonal() * sample.X;
    const Eigen::MatrixXd cross = sample.X.transpose() * ms_by_group;
    H.topRightCorner(p, J) = cross;
    H.bottomLeftCorner(J, p) = cross.transpose();
    H.bottomRightCorner(J, J).diagonal() = h_ss;
    // Symmetrize the beta block exactly (the triple product may differ in the last bit).
    H.topLeftCorner(p, p) = 0.5 * (H.topLeftCorner(p, p) + H.topLeftCorner(p, p).transpose()).eval();
    ev.hessian = std::move(H);
  }
  return ev;
}

}  // namespace detail

/// Full evaluation (value plus derivatives up to `order`, 0..2).
inline Evaluation evaluate(const CensoredSample& sample, const ModelSpec& spec,
                           const ParamVector& theta, int order) {
  if (order < 0 || order > 2) throw std::invalid_argument("evaluate: order must be 0, 1 or 2");
  return detail::accumulate(sample, spec, theta, order);
}

/// The four summed terms of the log-likelihood.
inline LoglikTerms loglik_terms(const CensoredSample& sample, const ModelSpec& spec,
                                const ParamVector& theta) {
  return detail::accumulate(sample, spec, theta, 0).terms;
}

/**
 * Log-likelihood of `sample` under `spec` at `theta`.
 *
 * Returns -inf (never throws) when a censored record's probability mass
 * underflows; structural mismatches throw std::invalid_argument.
 */
inline double loglik(const CensoredSample& sample, const ModelSpec& spec, const ParamVector& theta) {
  return detail::accumulate(sample, spec, theta, 0).value;
}

}  // namespace tcens
