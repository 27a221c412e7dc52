/**
 * @file optimize.hpp
 * @brief Log-likelihood maximization: Newton-Raphson, BFGS and
 *        Polak-Ribiere-plus conjugate gradient with Armijo or strong-Wolfe
 *        line searches, plus censored-regression starting values.
 *
 * The optimizers are generic over any callable objective
 * `Evaluation f(const Eigen::VectorXd& x, int order)` and work entirely in
 * unconstrained coordinates; for the likelihood that is (beta, log sigma).
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcens/likelihood.hpp"
#include "tcens/linear.hpp"
#include "tcens/sample.hpp"

namespace tcens {

enum class Method { Newton, QuasiNewton, ConjGrad };
enum class LineSearch { Armijo, StrongWolfe };
enum class ConvergenceReason { Gradient, Step, Function, MaxIter };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Newton: return "newton";
    case Method::QuasiNewton: return "bfgs";
    case Method::ConjGrad: return "cg";
  }
  return "?";
}

inline const char* to_string(ConvergenceReason r) {
  switch (r) {
    case ConvergenceReason::Gradient: return "gradient";
    case ConvergenceReason::Step: return "step";
    case ConvergenceReason::Function: return "function";
    case ConvergenceReason::MaxIter: return "max_iter";
  }
  return "?";
}

struct OptimizerConfig {
  Method method = Method::Newton;
  int max_iter = 200;
  double grad_tol = 1e-8;   ///< sup-norm of the gradient
  double step_tol = 1e-10;  ///< relative parameter change
  double f_tol = 1e-12;     ///< relative log-likelihood change
  LineSearch line_search = LineSearch::Armijo;

  void validate() const {
    if (max_iter < 1) throw std::invalid_argument("optimizer: max_iter must be >= 1");
    if (!(grad_tol > 0.0) || !(step_tol > 0.0) || !(f_tol > 0.0))
      throw std::invalid_argument("optimizer: tolerances must be positive");
  }
};

struct OptimDiagnostics {
  int evaluations = 0;
  int steepest_fallbacks = 0;  ///< Newton steps replaced by steepest ascent
  int curvature_skips = 0;     ///< BFGS updates skipped (y's <= 0)
  int restarts = 0;            ///< CG / BFGS memory resets
  int noise_steps = 0;         ///< steps accepted at round-off level on gradient progress
  std::vector<double> trace;   ///< objective after every accepted iterate, starting with x0
};

struct VectorOptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  ConvergenceReason reason = ConvergenceReason::MaxIter;
  double final_grad_norm = 0.0;
  OptimDiagnostics diagnostics;
};

template <class F>
concept Objective = requires(const F& f, const Eigen::VectorXd& x, int order) {
  { f(x, order) } -> std::convertible_to<Evaluation>;
};

namespace detail {

struct LineSearchResult {
  bool ok = false;
  bool noise = false;
  double alpha = 0.0;
  Evaluation ev;
};

inline double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Objective changes below this are indistinguishable from summation round-off.
inline double noise_level(double f) { return 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f)); }

template <class F>
class Searcher {
 public:
  Searcher(const F& f, int order, OptimDiagnostics& diag) : f_(f), order_(order), diag_(diag) {}

  Evaluation eval(const Eigen::VectorXd& x) const {
    ++diag_.evaluations;
    return f_(x, order_);
  }

  // Backtracking with sufficient increase; steps that change the objective
  // only at round-off level are taken when they reduce the gradient.
  LineSearchResult armijo(const Eigen::VectorXd& x, const Evaluation& cur, const Eigen::VectorXd& d,
                          double alpha0) const {
    constexpr double c1 = 1e-4;
    const double phi0 = cur.value;
    const double dphi0 = cur.gradient.dot(d);
    const double g0 = sup_norm(cur.gradient);
    double alpha = alpha0;
    for (int k = 0; k < 60; ++k) {
      Evaluation e = eval(x + alpha * d);
      if (std::isfinite(e.value)) {
        if (e.value >= phi0 + c1 * alpha * dphi0) return {true, false, alpha, std::move(e)};
        if (e.value >= phi0 - noise_level(phi0) && sup_norm(e.gradient) < g0)
          return {true, true, alpha, std::move(e)};
        // Safeguarded quadratic interpolation of the decrease.
        const double curv = (e.value - phi0 - dphi0 * alpha);
        double next = curv < 0.0 ? -dphi0 * alpha * alpha / (2.0 * curv) : 0.5 * alpha;
        alpha = std::clamp(next, 0.1 * alpha, 0.5 * alpha);
      } else {
        alpha *= 0.25;
      }
    }
    return {};
  }

  // Nocedal & Wright style bracketing/zoom on psi(alpha) = -f(x + alpha d).
  LineSearchResult wolfe(const Eigen::VectorXd& x, const Evaluation& cur, const Eigen::VectorXd& d,
                         double alpha0, double c2) const {
    constexpr double c1 = 1e-4;
    const double psi0 = -cur.value;
    const double dpsi0 = -cur.gradient.dot(d);

    struct Point {
      double alpha, psi, dpsi;
      Evaluation ev;
    };
    auto at = [&](double a) {
      Evaluation e = eval(x + a * d);
      const bool fin = std::isfinite(e.value);
      const double psi = fin ? -e.value : std::numeric_limits<double>::infinity();
      const double dpsi = fin ? -e.gradient.dot(d) : 0.0;
      return Point{a, psi, dpsi, std::move(e)};
    };
    auto sufficient = [&](const Point& p) { return p.psi <= psi0 + c1 * p.alpha * dpsi0; };
    auto curvature = [&](const Point& p) { return std::abs(p.dpsi) <= -c2 * dpsi0; };

    auto zoom = [&](Point lo, Point hi) -> LineSearchResult {
      for (int k = 0; k < 40; ++k) {
        const double width = hi.alpha - lo.alpha;
        double a = lo.alpha + 0.5 * width;
        if (std::isfinite(hi.psi)) {
          const double denom = 2.0 * (hi.psi - lo.psi - lo.dpsi * width);
          if (denom > 0.0) a = lo.alpha - lo.dpsi * width * width / denom;
        }
        const double lo_b = std::min(lo.alpha, hi.alpha), hi_b = std::max(lo.alpha, hi.alpha);
        a = std::clamp(a, lo_b + 0.1 * (hi_b - lo_b), hi_b - 0.1 * (hi_b - lo_b));
        Point p = at(a);
        if (!sufficient(p) || p.psi >= lo.psi) {
          hi = std::move(p);
        } else {
          if (curvature(p)) return {true, false, p.alpha, std::move(p.ev)};
          if (p.dpsi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
          lo = std::move(p);
        }
        if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
      }
      if (lo.alpha > 0.0 && sufficient(lo)) return {true, false, lo.alpha, std::move(lo.ev)};
      return {};
    };

    Point prev{0.0, psi0, dpsi0, cur};
    double a = alpha0;
    for (int i = 0; i < 30; ++i) {
      Point p = at(a);
      if (!sufficient(p) || (i > 0 && p.psi >= prev.psi)) return zoom(std::move(prev), std::move(p));
      if (curvature(p)) return {true, false, p.alpha, std::move(p.ev)};
      if (p.dpsi >= 0.0) return zoom(std::move(p), std::move(prev));
      prev = std::move(p);
      a *= 2.0;
    }
    return {};
  }

 private:
  const F& f_;
  int order_;
  OptimDiagnostics& diag_;
};

}  // namespace detail

/**
 * Maximize a smooth objective from x0.
 *
 * Termination: the run converges when the gradient sup-norm drops to
 * grad_tol. The step and function criteria act as stall detectors: when an
 * accepted step only changed the objective at round-off level and also
 * satisfies step_tol or f_tol, the run stops unconverged with that reason.
 * A run also stops unconverged when no acceptable step exists along either
 * the method's direction or steepest ascent.
 */
template <Objective F>
VectorOptimResult maximize_objective(const F& f, const Eigen::VectorXd& x0, const OptimizerConfig& cfg) {
  cfg.validate();
  VectorOptimResult res;
  OptimDiagnostics& diag = res.diagnostics;
  const int order = cfg.method == Method::Newton ? 2 : 1;
  const detail::Searcher<F> search(f, order, diag);
  const Eigen::Index dim = x0.size();
  constexpr double kMaxStep = 5.0;

  Eigen::VectorXd x = x0;
  Evaluation cur = search.eval(x);
  if (!std::isfinite(cur.value))
    throw std::invalid_argument("maximize: objective is not finite at the starting point");
  diag.trace.push_back(cur.value);

  Eigen::MatrixXd inv_curv = Eigen::MatrixXd::Identity(dim, dim);  // BFGS
  bool bfgs_scaled = false;
  Eigen::VectorXd d_prev, g_prev;  // CG
  double alpha_prev = 1.0, slope_prev = 0.0;
  int since_restart = 0;

  res.reason = ConvergenceReason::MaxIter;
  for (int iter = 0; iter <= cfg.max_iter; ++iter) {
    const Eigen::VectorXd& g = cur.gradient;
    if (detail::sup_norm(g) <= cfg.grad_tol) {
      res.converged = true;
      res.reason = ConvergenceReason::Gradient;
      break;
    }
    if (iter == cfg.max_iter) break;

    // Search direction.
    Eigen::VectorXd d;
    bool steepest = false;
    switch (cfg.method) {
      case Method::Newton: {
        const Eigen::MatrixXd neg_h = -cur.hessian;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
        const auto D = ldlt.vectorD();
        const bool pd = ldlt.info() == Eigen::Success && D.minCoeff() > 1e-14 * std::max(1.0, D.maxCoeff());
        if (pd) d = ldlt.solve(g);
        if (!pd || !d.allFinite() || d.dot(g) <= 0.0) {
          d = g;
          steepest = true;
          ++diag.steepest_fallbacks;
        }
        break;
      }
      case Method::QuasiNewton:
        d = inv_curv * g;
        if (d.dot(g) <= 0.0) {
          inv_curv.setIdentity();
          bfgs_scaled = false;
          ++diag.restarts;
          d = g;
        }
        steepest = !bfgs_scaled;
        break;
      case Method::ConjGrad: {
        const bool restart = d_prev.size() == 0 || since_restart >= dim ||
                             std::abs(g.dot(g_prev)) >= 0.2 * g.squaredNorm();
        if (restart) {
          d = g;
          since_restart = 0;
          if (d_prev.size() != 0) ++diag.restarts;
        } else {
          const double beta = std::max(0.0, g.dot(g - g_prev) / g_prev.squaredNorm());
          d = g + beta * d_prev;
          if (d.dot(g) <= 0.0) {
            d = g;
            since_restart = 0;
            ++diag.restarts;
          }
        }
        steepest = since_restart == 0;
        break;
      }
    }

    auto initial_alpha = [&](const Eigen::VectorXd& dir, bool is_steepest) {
      const double dn = detail::sup_norm(dir);
      double a = 1.0;
      if (cfg.method == Method::ConjGrad && !is_steepest && slope_prev > 0.0)
        a = alpha_prev * slope_prev / g.dot(dir);
      else if (is_steepest)
        a = 1.0 / std::max(1.0, dn);
      if (a * dn > kMaxStep) a = kMaxStep / dn;
      return a;
    };
    auto run_search = [&](const Eigen::VectorXd& dir, bool is_steepest) {
      const double a0 = initial_alpha(dir, is_steepest);
      if (cfg.line_search == LineSearch::StrongWolfe) {
        const double c2 = cfg.method == Method::ConjGrad ? 0.1 : 0.9;
        detail::LineSearchResult ls = search.wolfe(x, cur, dir, a0, c2);
        if (ls.ok) return ls;
      }
      return search.armijo(x, cur, dir, a0);
    };

    detail::LineSearchResult ls = run_search(d, steepest);
    if (!ls.ok && !steepest) {
      ++diag.restarts;
      inv_curv.setIdentity();
      bfgs_scaled = false;
      d = g;
      since_restart = 0;
      steepest = true;
      ls = run_search(d, true);
    }
    if (!ls.ok) {
      res.reason = ConvergenceReason::Function;
      break;
    }

    const Eigen::VectorXd step = ls.alpha * d;
    const Eigen::VectorXd x_new = x + step;
    const double f_old = cur.value;

    if (cfg.method == Method::QuasiNewton) {
      const Eigen::VectorXd yv = g - ls.ev.gradient;  // change in the gradient of -f
      const double ys = yv.dot(step);
      if (ys > 1e-12 * yv.norm() * step.norm()) {
        if (!bfgs_scaled) {
          inv_curv = (ys / yv.squaredNorm()) * Eigen::MatrixXd::Identity(dim, dim);
          bfgs_scaled = true;
        }
        const double rho = 1.0 / ys;
        const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(dim, dim) - rho * step * yv.transpose();
        inv_curv = left * inv_curv * left.transpose() + rho * step * step.transpose();
      } else {
        ++diag.curvature_skips;
      }
    } else if (cfg.method == Method::ConjGrad) {
      d_prev = d;
      g_prev = g;
      alpha_prev = ls.alpha;
      slope_prev = g.dot(d);
      ++since_restart;
    }

    x = x_new;
    cur = std::move(ls.ev);
    ++res.iterations;
    diag.trace.push_back(cur.value);
    if (ls.noise) ++diag.noise_steps;

    if (ls.noise && detail::sup_norm(cur.gradient) > cfg.grad_tol) {
      const double rel_step = detail::sup_norm(step) / std::max(1.0, detail::sup_norm(x));
      const double rel_f = std::abs(cur.value - f_old) / std::max(1.0, std::abs(f_old));
      if (rel_step <= cfg.step_tol || rel_f <= cfg.f_tol) {
        res.reason = rel_step <= cfg.step_tol ? ConvergenceReason::Step : ConvergenceReason::Function;
        break;
      }
    }
  }

  res.x = x;
  res.value = cur.value;
  res.gradient = cur.gradient;
  res.final_grad_norm = detail::sup_norm(cur.gradient);
  return res;
}

struct OptimResult {
  ParamVector theta_hat;
  double loglik_at_opt = 0.0;
  int iterations = 0;
  bool converged = false;
  ConvergenceReason convergence_reason = ConvergenceReason::MaxIter;
  double final_grad_norm = 0.0;
  Method method = Method::Newton;
  OptimDiagnostics diagnostics;
};

/// Log-likelihood as an optimizer objective; degenerate points evaluate to -inf.
class LikelihoodObjective {
 public:
  LikelihoodObjective(const CensoredSample& sample, const ModelSpec& spec)
      : sample_(sample), spec_(spec) {}

  Evaluation operator()(const Eigen::VectorXd& theta, int order) const {
    const ParamVector pv = ParamVector::from_theta(theta, sample_.n_coef());
    if (!theta.allFinite()) return degenerate();
    try {
      return evaluate(sample_, spec_, pv, order);
    } catch (const std::domain_error&) {
      return degenerate();
    }
  }

 private:
  static Evaluation degenerate() {
    Evaluation e;
    e.value = -std::numeric_limits<double>::infinity();
    return e;
  }
  const CensoredSample& sample_;
  const ModelSpec& spec_;
};

/// Maximize the log-likelihood of `sample` under `spec` starting at theta0.
inline OptimResult maximize(const CensoredSample& sample, const ModelSpec& spec, const ParamVector& theta0,
                            const OptimizerConfig& cfg = {}) {
  validate(sample, spec);
  check_dimensions(sample, spec, theta0);
  const LikelihoodObjective obj(sample, spec);
  VectorOptimResult r = maximize_objective(obj, theta0.theta(), cfg);
  OptimResult out;
  out.theta_hat = ParamVector::from_theta(r.x, sample.n_coef());
  out.loglik_at_opt = r.value;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.convergence_reason = r.reason;
  out.final_grad_norm = r.final_grad_norm;
  out.method = cfg.method;
  out.diagnostics = std::move(r.diagnostics);
  return out;
}

struct StartingValues {
  ParamVector theta;
  bool fallback = false;  ///< censored-regression start failed; least-squares start used
};

namespace detail {

inline ParamVector least_squares_start(const CensoredSample& sample, const ModelSpec& spec) {
  const NormalFit ols = normal_mle(sample.X, sample.y);
  const double sigma = ols.sigma > 0.0 ? ols.sigma : 1.0;
  const int J = n_variance_params(sample, spec);
  return {ols.beta, Eigen::VectorXd::Constant(J, std::log(sigma))};
}

}  // namespace detail

/**
 * Starting values. Censored+truncated models start from the censored-only
 * (Tobit) fit of the same records with a pooled variance, every log sigma_j
 * set to the pooled estimate. Tobit and truncated-only models start from
 * least squares on the recorded values (censored records at the detection
 * limit).
 */
inline StartingValues initialize(const CensoredSample& sample, const ModelSpec& spec,
                                 const OptimizerConfig& cfg = {}) {
  validate(sample, spec);
  StartingValues sv;
  sv.theta = detail::least_squares_start(sample, spec);
  if (spec.variant != Variant::CensoredTruncated) return sv;

  const ModelSpec tobit = ModelSpec::censored(*spec.nu);
  try {
    const ParamVector start = detail::least_squares_start(sample, tobit);
    const OptimResult r = maximize(sample, tobit, start, cfg);
    if (r.converged) {
      const int J = n_variance_params(sample, spec);
      sv.theta = {r.theta_hat.beta, Eigen::VectorXd::Constant(J, r.theta_hat.log_sigma(0))};
      return sv;
    }
  } catch (const std::exception&) {
  }
  sv.fallback = true;
  return sv;
}

}  // namespace tcens
