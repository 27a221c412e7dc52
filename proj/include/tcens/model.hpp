/**
 * @file model.hpp
 * @brief Model fitting with observed-information standard errors and Wald
 *        confidence intervals.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcens/design.hpp"
#include "tcens/likelihood.hpp"
#include "tcens/normal.hpp"
#include "tcens/optimize.hpp"

namespace tcens {

/// Raised for samples that cannot identify the model.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd sigma_hat;
  ParamVector theta_hat;

  /// (-H)^{-1} in (beta, log sigma) coordinates.
  Eigen::MatrixXd vcov_internal;
  /// Delta-method covariance in (beta, sigma) coordinates.
  Eigen::MatrixXd vcov_natural;
  Eigen::VectorXd se_beta;
  Eigen::VectorXd se_log_sigma;
  Eigen::VectorXd se_sigma;
  bool se_available = false;
  /// Ratio of extreme eigenvalues of the observed information.
  double condition_number = std::numeric_limits<double>::quiet_NaN();

  double loglik = 0.0;
  std::size_t n = 0, n_censored = 0, n_uncensored = 0;
  ModelSpec spec;
  OptimResult optim;
  bool start_fallback = false;
  std::vector<std::string> coef_names;

  bool converged() const { return optim.converged; }
};

/// Information matrices with a larger condition number count as singular.
inline constexpr double kMaxCondition = 1e12;

namespace detail {

inline void attach_covariance(FitResult& fr, const Eigen::MatrixXd& hess) {
  const Eigen::Index p = fr.beta_hat.size();
  const Eigen::Index J = fr.sigma_hat.size();
  const Eigen::Index d = p + J;
  const Eigen::MatrixXd info = -hess;
  if (!info.allFinite()) return;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() != Eigen::Success) return;
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  fr.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || fr.condition_number > kMaxCondition) return;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  fr.vcov_internal = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
  fr.vcov_internal = 0.5 * (fr.vcov_internal + fr.vcov_internal.transpose()).eval();

  Eigen::VectorXd jac = Eigen::VectorXd::Ones(d);
  jac.tail(J) = fr.sigma_hat;
  fr.vcov_natural = jac.asDiagonal() * fr.vcov_internal * jac.asDiagonal();

  const Eigen::VectorXd var = fr.vcov_internal.diagonal();
  fr.se_beta = var.head(p).cwiseSqrt();
  fr.se_log_sigma = var.tail(J).cwiseSqrt();
  fr.se_sigma = fr.sigma_hat.cwiseProduct(fr.se_log_sigma);
  fr.se_available = true;
}

}  // namespace detail

/**
 * Maximum-likelihood fit. Non-convergence is reported through
 * `optim.converged`, not by throwing; callers decide what to do with it.
 */
inline FitResult fit(const CensoredSample& sample, const ModelSpec& spec, const OptimizerConfig& cfg = {}) {
  spec.validate();
  cfg.validate();
  validate(sample, spec);

  const std::size_t n = sample.size();
  const std::size_t n0 = sample.n_censored();
  if (n == 0 || n0 == n) throw FitError("degenerate sample: every observation is censored");
  const std::size_t dim = static_cast<std::size_t>(sample.n_coef() + n_variance_params(sample, spec));
  if (n - n0 < dim)
    throw FitError("insufficient uncensored data: " + std::to_string(n - n0) + " uncensored observations for " +
                   std::to_string(dim) + " parameters");

  const StartingValues start = initialize(sample, spec, cfg);
  FitResult fr;
  fr.optim = maximize(sample, spec, start.theta, cfg);
  fr.start_fallback = start.fallback;
  fr.theta_hat = fr.optim.theta_hat;
  fr.beta_hat = fr.theta_hat.beta;
  fr.sigma_hat = fr.theta_hat.sigma();
  fr.loglik = fr.optim.loglik_at_opt;
  fr.n = n;
  fr.n_censored = n0;
  fr.n_uncensored = n - n0;
  fr.spec = spec;

  if (std::isfinite(fr.loglik)) {
    try {
      detail::attach_covariance(fr, evaluate(sample, spec, fr.theta_hat, 2).hessian);
    } catch (const std::domain_error&) {
    }
  }
  return fr;
}

/// Fit with column names from a design.
inline FitResult fit(const CensoredSample& sample, const ModelSpec& spec, const OptimizerConfig& cfg,
                     std::vector<std::string> names) {
  FitResult fr = fit(sample, spec, cfg);
  fr.coef_names = std::move(names);
  return fr;
}

struct ContrastRequest {
  Eigen::VectorXd c;  ///< weights on beta
  double level = 0.95;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Two-sided normal quantile for a confidence level.
inline double wald_multiplier(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  return normal::quantile(1.0 - 0.5 * (1.0 - level));
}

/// Wald interval for c'beta.
inline Interval confint(const FitResult& fr, const ContrastRequest& req) {
  if (!fr.se_available) throw FitError("standard errors unavailable: observed information is singular");
  const Eigen::Index p = fr.beta_hat.size();
  if (req.c.size() != p)
    throw std::invalid_argument("contrast has " + std::to_string(req.c.size()) + " weights for " +
                                std::to_string(p) + " coefficients");
  const double z = wald_multiplier(req.level);
  const double est = req.c.dot(fr.beta_hat);
  const double se = std::sqrt(req.c.dot(fr.vcov_natural.topLeftCorner(p, p) * req.c));
  return {est - z * se, est + z * se};
}

/// Interval for coefficient j.
inline Interval confint(const FitResult& fr, Eigen::Index j, double level) {
  if (j < 0 || j >= fr.beta_hat.size()) throw std::out_of_range("coefficient index out of range");
  return confint(fr, ContrastRequest{Eigen::VectorXd::Unit(fr.beta_hat.size(), j), level});
}

/// Interval for sigma_j, built on the log scale and exponentiated.
inline Interval sigma_confint(const FitResult& fr, Eigen::Index j, double level) {
  if (!fr.se_available) throw FitError("standard errors unavailable: observed information is singular");
  if (j < 0 || j >= fr.sigma_hat.size()) throw std::out_of_range("variance group index out of range");
  const double z = wald_multiplier(level);
  const double ls = fr.theta_hat.log_sigma(j);
  return {std::exp(ls - z * fr.se_log_sigma(j)), std::exp(ls + z * fr.se_log_sigma(j))};
}

}  // namespace tcens
