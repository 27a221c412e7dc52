// Hand-rolled generators for property tests.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tcens/sample.hpp"
#include "tcens/truncnorm.hpp"

namespace tcens::prop {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }
  /// Open-interval uniform suitable for inverse-transform sampling.
  double unit() { return uniform(1e-12, 1.0 - 1e-12); }

 private:
  std::mt19937_64 rng_;
};

struct Case {
  CensoredSample sample;
  ModelSpec spec;
  ParamVector theta;  ///< evaluation point near (not at) the truth
};

/**
 * Random design (intercept, group indicators, one covariate), random
 * bounds, data drawn from the model itself, and an evaluation point
 * perturbed away from the generating values.
 */
inline Case random_case(Gen& g, Variant v, VarianceStructure var) {
  const int J = var == VarianceStructure::PerGroup ? g.integer(1, 3) : g.integer(1, 2);
  const int per_group = g.integer(6, 25);
  const int n = J * per_group;
  const int p = J + 1;

  const double a = g.uniform(-1.0, 0.5);
  const double nu = a + g.uniform(0.2, 1.0);
  Case c;
  switch (v) {
    case Variant::CensoredOnly: c.spec = ModelSpec::censored(nu, var); break;
    case Variant::TruncatedOnly: c.spec = ModelSpec::truncated(a, var); break;
    case Variant::CensoredTruncated: c.spec = ModelSpec::censored_truncated(a, nu, var); break;
  }

  Eigen::VectorXd beta(p);
  beta(0) = nu + g.uniform(-0.3, 0.8);
  for (int j = 1; j < J; ++j) beta(j) = g.uniform(-0.4, 0.4);
  beta(p - 1) = g.uniform(-0.5, 0.5);
  Eigen::VectorXd sig(J);
  for (int j = 0; j < J; ++j) sig(j) = g.uniform(0.3, 1.2);

  CensoredSample& s = c.sample;
  s.X = Eigen::MatrixXd::Zero(n, p);
  for (int i = 0; i < n; ++i) {
    const int grp = i / per_group;
    s.X(i, 0) = 1.0;
    if (grp > 0) s.X(i, grp) = 1.0;
    s.X(i, p - 1) = g.uniform(-1.0, 1.0);
    const double m = s.X.row(i).dot(beta);
    const double sd = var == VarianceStructure::PerGroup ? sig(grp) : sig(0);
    const std::optional<double> bound = v == Variant::CensoredOnly ? std::nullopt : std::optional<double>(a);
    double y = tn_sample({m, sd, bound}, g.unit());
    bool cens = false;
    if (v != Variant::TruncatedOnly && y <= nu) {
      y = nu;
      cens = true;
    }
    s.y.push_back(y);
    s.censored.push_back(cens);
    s.group.push_back(grp);
  }
  if (var == VarianceStructure::Common) s.group.clear();

  const int nvar = var == VarianceStructure::PerGroup ? J : 1;
  c.theta.beta = beta;
  c.theta.log_sigma.resize(nvar);
  for (int j = 0; j < nvar; ++j) c.theta.log_sigma(j) = std::log(sig(j)) + g.uniform(-0.3, 0.3);
  for (int k = 0; k < p; ++k) c.theta.beta(k) += 0.2 * g.normal();
  return c;
}

/// Latent normal draws with a two-level group column.
inline CensoredSample two_group_sample(Gen& g, int n_per, double mu1, double delta, double sigma,
                                       std::optional<double> a, std::optional<double> nu) {
  CensoredSample s;
  s.X = Eigen::MatrixXd::Ones(2 * n_per, 2);
  for (int pop = 0; pop < 2; ++pop)
    for (int i = 0; i < n_per; ++i) {
      const int row = pop * n_per + i;
      s.X(row, 1) = pop;
      double y = tn_sample({mu1 + pop * delta, sigma, a}, g.unit());
      bool cens = false;
      if (nu && y <= *nu) {
        y = *nu;
        cens = true;
      }
      s.y.push_back(y);
      s.censored.push_back(cens);
      s.group.push_back(pop);
    }
  return s;
}

}  // namespace tcens::prop
