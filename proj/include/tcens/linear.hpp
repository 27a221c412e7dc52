/**
 * @file linear.hpp
 * @brief Closed-form normal-theory regression (least squares with the
 *        maximum-likelihood variance), used for starting values and for the
 *        imputation-based comparators.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>

namespace tcens {

struct NormalFit {
  Eigen::VectorXd beta;
  double sigma = 0.0;         ///< sqrt(RSS / n), the MLE
  Eigen::MatrixXd vcov_beta;  ///< sigma^2 (X'X)^{-1}, inverse observed information
};

/// Gaussian MLE of y ~ N(X beta, sigma^2). Throws on a rank-deficient design.
inline NormalFit normal_mle(const Eigen::MatrixXd& X, std::span<const double> y) {
  const Eigen::Index n = X.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw std::invalid_argument("normal_mle: size mismatch");
  if (n < X.cols()) throw std::invalid_argument("normal_mle: fewer observations than coefficients");
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw std::invalid_argument("normal_mle: design matrix is rank deficient");

  NormalFit fit;
  fit.beta = qr.solve(yv);
  const Eigen::VectorXd resid = yv - X * fit.beta;
  fit.sigma = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  const Eigen::MatrixXd xtx = X.transpose() * X;
  fit.vcov_beta = fit.sigma * fit.sigma * xtx.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  return fit;
}

}  // namespace tcens
