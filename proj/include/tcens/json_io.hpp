/**
 * @file json_io.hpp
 * @brief JSON form of a fit. Requires nlohmann/json on the include path.
 *
 * Shape (keys in this order):
 *   beta       [number]          coefficients
 *   sigma      [number]          one per variance group
 *   se_beta    [number] | null   null when the information matrix is singular
 *   se_sigma   [number] | null
 *   loglik     number
 *   n          integer
 *   n_censored integer
 *   converged  bool
 *   method     "newton" | "bfgs" | "cg"
 *   iterations integer
 */
#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tcens/model.hpp"
#include "tcens/simstudy.hpp"

namespace tcens {

using Json = nlohmann::ordered_json;

/// Plain-value mirror of the serialized fields.
struct FitSummary {
  std::vector<double> beta;
  std::vector<double> sigma;
  std::optional<std::vector<double>> se_beta;
  std::optional<std::vector<double>> se_sigma;
  double loglik = 0.0;
  std::size_t n = 0;
  std::size_t n_censored = 0;
  bool converged = false;
  std::string method;
  int iterations = 0;
};

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

inline FitSummary summarize(const FitResult& fr) {
  FitSummary s;
  s.beta = detail::to_std(fr.beta_hat);
  s.sigma = detail::to_std(fr.sigma_hat);
  if (fr.se_available) {
    s.se_beta = detail::to_std(fr.se_beta);
    s.se_sigma = detail::to_std(fr.se_sigma);
  }
  s.loglik = fr.loglik;
  s.n = fr.n;
  s.n_censored = fr.n_censored;
  s.converged = fr.optim.converged;
  s.method = to_string(fr.optim.method);
  s.iterations = fr.optim.iterations;
  return s;
}

inline Json to_json(const FitSummary& s) {
  Json j;
  j["beta"] = s.beta;
  j["sigma"] = s.sigma;
  j["se_beta"] = s.se_beta ? Json(*s.se_beta) : Json(nullptr);
  j["se_sigma"] = s.se_sigma ? Json(*s.se_sigma) : Json(nullptr);
  j["loglik"] = s.loglik;
  j["n"] = s.n;
  j["n_censored"] = s.n_censored;
  j["converged"] = s.converged;
  j["method"] = s.method;
  j["iterations"] = s.iterations;
  return j;
}

inline Json to_json(const FitResult& fr) { return to_json(summarize(fr)); }

/// Inverse of to_json; throws nlohmann::json::exception on a malformed document.
inline FitSummary fit_summary_from_json(const Json& j) {
  FitSummary s;
  j.at("beta").get_to(s.beta);
  j.at("sigma").get_to(s.sigma);
  if (!j.at("se_beta").is_null()) s.se_beta = j.at("se_beta").get<std::vector<double>>();
  if (!j.at("se_sigma").is_null()) s.se_sigma = j.at("se_sigma").get<std::vector<double>>();
  s.loglik = j.at("loglik").is_null() ? -std::numeric_limits<double>::infinity() : j.at("loglik").get<double>();
  j.at("n").get_to(s.n);
  j.at("n_censored").get_to(s.n_censored);
  j.at("converged").get_to(s.converged);
  j.at("method").get_to(s.method);
  j.at("iterations").get_to(s.iterations);
  return s;
}

namespace detail {

inline Json num_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace detail

/// Study report: grid echo, censoring audit and one object per cell.
inline Json to_json(const StudyReport& rep) {
  const ScenarioGrid& g = rep.grid;
  Json j;
  j["study"] = to_string(g.study);
  j["a"] = g.a;
  j["nu"] = g.nu;
  j["n"] = g.n;
  j["B"] = g.B;
  j["seed"] = g.seed;
  j["alpha"] = g.alpha;
  j["margin"] = g.margin;
  j["optimizer"] = to_string(g.optim.method);
  Json cens = Json::array();
  for (const auto& c : rep.censoring) {
    Json r;
    r["mu"] = c.scenario.mu;
    r["delta"] = c.scenario.delta;
    r["sigma"] = c.scenario.sigma;
    r["empirical"] = c.empirical;
    r["expected"] = c.expected;
    cens.push_back(std::move(r));
  }
  j["censoring"] = std::move(cens);
  Json cells = Json::array();
  for (const auto& c : rep.cells) {
    Json r;
    r["mu"] = c.scenario.mu;
    r["delta"] = c.scenario.delta;
    r["sigma"] = c.scenario.sigma;
    r["method"] = to_string(c.method);
    r["parameter"] = c.parameter;
    r["truth"] = c.truth;
    r["mean"] = detail::num_or_null(c.mean);
    r["bias"] = detail::num_or_null(c.bias);
    r["mse"] = detail::num_or_null(c.mse);
    r["log_mse"] = detail::num_or_null(c.log_mse);
    r["mc_se"] = detail::num_or_null(c.mc_se);
    r["reject_rate"] = c.reject_rate ? detail::num_or_null(*c.reject_rate) : Json(nullptr);
    r["used"] = c.used;
    r["failures"] = c.failures;
    cells.push_back(std::move(r));
  }
  j["cells"] = std::move(cells);
  return j;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tcens
