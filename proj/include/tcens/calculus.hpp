/**
 * @file calculus.hpp
 * @brief Analytic gradient and Hessian of the log-likelihood in
 *        (beta, log sigma) coordinates, and a central-difference checker.
 *
 * Coordinates are ordered (beta_1..beta_{p-1}, log sigma_1..log sigma_J).
 * With per-group variances the log-sigma block of the Hessian is diagonal:
 * no record depends on two different sigma_j.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "tcens/likelihood.hpp"

namespace tcens {

inline Eigen::VectorXd gradient(const CensoredSample& sample, const ModelSpec& spec, const ParamVector& theta) {
  return evaluate(sample, spec, theta, 1).gradient;
}

inline Eigen::MatrixXd hessian(const CensoredSample& sample, const ModelSpec& spec, const ParamVector& theta) {
  return evaluate(sample, spec, theta, 2).hessian;
}

/// Default central-difference step: cbrt(eps) * max(1, |x|).
inline double default_fd_step(double x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x));
}

/// |analytic - numeric| / max(|analytic|, |numeric|, 1).
inline double fd_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1.0});
}

struct FdReport {
  double grad_max_rel_error = 0.0;
  Eigen::Index grad_worst_index = 0;
  double hess_max_rel_error = 0.0;
  std::pair<Eigen::Index, Eigen::Index> hess_worst_index{0, 0};
  double step = 0.0;
  /// Errors grew when the step shrank by 10x: the step is in the
  /// round-off dominated regime.
  bool cancellation_suspected = false;

  double max_rel_error() const { return std::max(grad_max_rel_error, hess_max_rel_error); }
};

namespace detail {

/// value(x) -> double, grad(x) -> VectorXd, hess(x) -> MatrixXd.
template <class Value, class Grad, class Hess>
FdReport fd_compare(Value&& value, Grad&& grad, Hess&& hess, const Eigen::VectorXd& x, double step,
                    bool relative_step) {
  const Eigen::Index d = x.size();
  const Eigen::VectorXd g = grad(x);
  const Eigen::MatrixXd H = hess(x);

  auto h_for = [&](Eigen::Index i) { return relative_step ? step * std::max(1.0, std::abs(x(i))) : step; };

  FdReport rep;
  rep.step = step;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = h_for(i);
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fp = value(xp), fm = value(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error("fd_check: log-likelihood not finite within one step of theta");
    const double num = (fp - fm) / (2.0 * h);
    const double err = fd_relative_error(g(i), num);
    if (err > rep.grad_max_rel_error) {
      rep.grad_max_rel_error = err;
      rep.grad_worst_index = i;
    }
    const Eigen::VectorXd col = (grad(xp) - grad(xm)) / (2.0 * h);
    for (Eigen::Index r = 0; r < d; ++r) {
      const double e = fd_relative_error(H(r, i), col(r));
      if (e > rep.hess_max_rel_error) {
        rep.hess_max_rel_error = e;
        rep.hess_worst_index = {r, i};
      }
    }
  }
  return rep;
}

}  // namespace detail

/**
 * Compare analytic derivatives of an arbitrary objective with central
 * differences: the gradient against differenced values, the Hessian
 * against differenced gradients. `step` is scaled by max(1, |x_i|).
 */
template <class Value, class Grad, class Hess>
FdReport fd_check(Value&& value, Grad&& grad, Hess&& hess, const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_check: step must be positive");
  if (!std::isfinite(value(x))) throw std::domain_error("fd_check: log-likelihood not finite at theta");
  FdReport rep = detail::fd_compare(value, grad, hess, x, step, true);
  // A second pass at 10x the step: if that one is markedly more accurate the
  // requested step sits below the truncation/round-off balance point.
  if (step < std::sqrt(std::numeric_limits<double>::epsilon())) {
    const FdReport coarse = detail::fd_compare(value, grad, hess, x, 10.0 * step, true);
    rep.cancellation_suspected = rep.max_rel_error() > 3.0 * coarse.max_rel_error() &&
                                 rep.max_rel_error() > 1e-8;
  }
  return rep;
}

inline FdReport fd_check(const CensoredSample& sample, const ModelSpec& spec, const ParamVector& theta,
                         double step) {
  const Eigen::Index p = theta.beta.size();
  auto unpack = [p](const Eigen::VectorXd& t) { return ParamVector::from_theta(t, p); };
  return fd_check([&](const Eigen::VectorXd& t) { return loglik(sample, spec, unpack(t)); },
                  [&](const Eigen::VectorXd& t) { return gradient(sample, spec, unpack(t)); },
                  [&](const Eigen::VectorXd& t) { return hessian(sample, spec, unpack(t)); },
                  theta.theta(), step);
}

}  // namespace tcens
