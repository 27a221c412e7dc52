/**
 * @file sample.hpp
 * @brief Data and model description types shared by the likelihood,
 *        derivative, optimizer and fitting layers.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcens {

enum class Variant { CensoredOnly, TruncatedOnly, CensoredTruncated };
enum class VarianceStructure { Common, PerGroup };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::CensoredOnly: return "censored";
    case Variant::TruncatedOnly: return "truncated";
    case Variant::CensoredTruncated: return "censored-truncated";
  }
  return "?";
}

/// Which likelihood to use and where its bounds sit.
struct ModelSpec {
  Variant variant = Variant::CensoredTruncated;
  VarianceStructure variance = VarianceStructure::Common;
  std::optional<double> a;   ///< left truncation bound, empty = none; -inf behaves as none
  std::optional<double> nu;  ///< detection limit, empty = no censoring

  static ModelSpec censored(double nu, VarianceStructure v = VarianceStructure::Common) {
    return {Variant::CensoredOnly, v, std::nullopt, nu};
  }
  static ModelSpec truncated(double a, VarianceStructure v = VarianceStructure::Common) {
    return {Variant::TruncatedOnly, v, a, std::nullopt};
  }
  static ModelSpec censored_truncated(double a, double nu,
                                      VarianceStructure v = VarianceStructure::Common) {
    return {Variant::CensoredTruncated, v, a, nu};
  }

  bool truncated_model() const { return a.has_value(); }
  bool censored_model() const { return nu.has_value(); }

  void validate() const {
    if (a && (std::isnan(*a) || *a == std::numeric_limits<double>::infinity()))
      throw std::invalid_argument("model: truncation bound must be finite or -inf");
    if (nu && !std::isfinite(*nu)) throw std::invalid_argument("model: detection limit must be finite");
    switch (variant) {
      case Variant::CensoredOnly:
        if (a) throw std::invalid_argument("model: censored-only model cannot carry a truncation bound");
        if (!nu) throw std::invalid_argument("model: censored-only model needs a detection limit");
        break;
      case Variant::TruncatedOnly:
        if (nu) throw std::invalid_argument("model: truncated-only model cannot carry a detection limit");
        if (!a) throw std::invalid_argument("model: truncated-only model needs a truncation bound");
        break;
      case Variant::CensoredTruncated:
        if (!a || !nu)
          throw std::invalid_argument("model: censored-truncated model needs both a truncation bound and a detection limit");
        if (!(*nu > *a)) throw std::invalid_argument("model: detection limit must exceed the truncation bound");
        break;
    }
  }
};

/**
 * Observed responses with censoring indicators.
 *
 * Censored records carry the detection limit as their response. `group`
 * holds zero-based variance-group indices and may be left empty for a
 * common variance.
 */
struct CensoredSample {
  std::vector<double> y;
  std::vector<bool> censored;
  Eigen::MatrixXd X;
  std::vector<int> group;

  std::size_t size() const { return y.size(); }
  Eigen::Index n_coef() const { return X.cols(); }

  std::size_t n_censored() const {
    std::size_t k = 0;
    for (bool c : censored) k += c ? 1 : 0;
    return k;
  }

  int n_groups() const {
    int J = 0;
    for (int g : group) J = std::max(J, g + 1);
    return J;
  }
};

/// Intercept-only design with no censoring.
inline CensoredSample make_sample(std::vector<double> y) {
  CensoredSample s;
  s.X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
  s.censored.assign(y.size(), false);
  s.y = std::move(y);
  return s;
}

/// Intercept-only design with explicit censoring indicators.
inline CensoredSample make_sample(std::vector<double> y, std::vector<bool> censored) {
  CensoredSample s = make_sample(std::move(y));
  s.censored = std::move(censored);
  return s;
}

/// Replace every value <= nu by nu and flag it censored.
inline CensoredSample censor_at(const CensoredSample& latent, double nu) {
  CensoredSample out = latent;
  for (std::size_t i = 0; i < out.y.size(); ++i) {
    if (out.y[i] <= nu) {
      out.y[i] = nu;
      out.censored[i] = true;
    }
  }
  return out;
}

/// Unconstrained optimization coordinates (beta, log sigma_1..log sigma_J).
struct ParamVector {
  Eigen::VectorXd beta;
  Eigen::VectorXd log_sigma;

  Eigen::Index size() const { return beta.size() + log_sigma.size(); }

  Eigen::VectorXd theta() const {
    Eigen::VectorXd t(size());
    t << beta, log_sigma;
    return t;
  }

  static ParamVector from_theta(const Eigen::VectorXd& theta, Eigen::Index n_beta) {
    if (n_beta < 0 || n_beta >= theta.size())
      throw std::invalid_argument("ParamVector: bad split of theta");
    return {theta.head(n_beta), theta.tail(theta.size() - n_beta)};
  }

  Eigen::VectorXd sigma() const { return log_sigma.array().exp().matrix(); }
};

/// Number of variance parameters a spec implies for this sample.
inline int n_variance_params(const CensoredSample& s, const ModelSpec& spec) {
  return spec.variance == VarianceStructure::PerGroup ? s.n_groups() : 1;
}

inline void check_dimensions(const CensoredSample& s, const ModelSpec& spec, const ParamVector& theta) {
  if (theta.beta.size() != s.n_coef())
    throw std::invalid_argument("theta: beta has " + std::to_string(theta.beta.size()) +
                                " entries, design has " + std::to_string(s.n_coef()) + " columns");
  if (theta.log_sigma.size() != n_variance_params(s, spec))
    throw std::invalid_argument("theta: wrong number of log-sigma entries");
  if (!theta.log_sigma.allFinite() || !theta.beta.allFinite())
    throw std::invalid_argument("theta: parameters must be finite");
}

/**
 * Structural checks linking a sample to a model. Throws std::invalid_argument
 * naming the first offending record.
 */
inline void validate(const CensoredSample& s, const ModelSpec& spec) {
  spec.validate();
  const std::size_t n = s.y.size();
  if (n == 0) throw std::invalid_argument("sample: no observations");
  if (s.censored.size() != n) throw std::invalid_argument("sample: censoring indicator length mismatch");
  if (static_cast<std::size_t>(s.X.rows()) != n) throw std::invalid_argument("sample: design row count mismatch");
  if (s.X.cols() < 1) throw std::invalid_argument("sample: design has no columns");
  if (!s.X.allFinite()) throw std::invalid_argument("sample: design contains non-finite values");

  for (std::size_t i = 0; i < n; ++i) {
    const double yi = s.y[i];
    const std::string where = " (row " + std::to_string(i + 1) + ")";
    if (!std::isfinite(yi)) throw std::invalid_argument("sample: non-finite response" + where);
    if (s.censored[i]) {
      if (!spec.nu) throw std::invalid_argument("sample: censored record but model has no detection limit" + where);
      if (std::abs(yi - *spec.nu) > 1e-12)
        throw std::invalid_argument("sample: censored record must equal the detection limit" + where);
    } else if (spec.nu && !(yi > *spec.nu)) {
      throw std::invalid_argument("sample: uncensored response must exceed the detection limit" + where);
    }
    if (spec.a && yi < *spec.a) throw std::invalid_argument("sample: response below the truncation bound" + where);
  }

  if (spec.variance == VarianceStructure::PerGroup) {
    if (s.group.size() != n) throw std::invalid_argument("sample: per-group variance needs a group label per record");
    const int J = s.n_groups();
    std::vector<std::size_t> counts(static_cast<std::size_t>(J), 0);
    for (int g : s.group) {
      if (g < 0) throw std::invalid_argument("sample: negative group index");
      ++counts[static_cast<std::size_t>(g)];
    }
    for (int j = 0; j < J; ++j)
      if (counts[static_cast<std::size_t>(j)] == 0)
        throw std::invalid_argument("sample: group labels must be contiguous with every group nonempty");
  } else if (!s.group.empty() && s.group.size() != n) {
    throw std::invalid_argument("sample: group label length mismatch");
  }
}

/// Index sets of censored / uncensored records and per-group counts.
struct SampleSplit {
  std::vector<std::size_t> censored;
  std::vector<std::size_t> uncensored;
  std::vector<std::size_t> n0_by_group;
  std::vector<std::size_t> n1_by_group;
};

inline SampleSplit split_sets(const CensoredSample& s) {
  SampleSplit out;
  const int J = std::max(1, s.n_groups());
  out.n0_by_group.assign(static_cast<std::size_t>(J), 0);
  out.n1_by_group.assign(static_cast<std::size_t>(J), 0);
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    const auto j = static_cast<std::size_t>(s.group.empty() ? 0 : s.group[i]);
    if (s.censored[i]) {
      out.censored.push_back(i);
      ++out.n0_by_group[j];
    } else {
      out.uncensored.push_back(i);
      ++out.n1_by_group[j];
    }
  }
  return out;
}

}  // namespace tcens
