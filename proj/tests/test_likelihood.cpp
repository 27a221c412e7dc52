#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tcens/calculus.hpp"
#include "tcens/likelihood.hpp"

using namespace tcens;

namespace {

ParamVector common_theta(double mu, double sigma) {
  return {Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, std::log(sigma))};
}

CensoredSample three_obs() { return make_sample({0.61, 1.0, 1.5}, {true, false, false}); }

constexpr Variant kVariants[] = {Variant::CensoredOnly, Variant::TruncatedOnly, Variant::CensoredTruncated};

}  // namespace

// Reference values from 50-digit arithmetic.
TEST(Loglik, ThreeObservationOracle) {
  const double ll = loglik(three_obs(), ModelSpec::censored_truncated(0.0, 0.61), common_theta(1.0, 0.5));
  EXPECT_NEAR(ll, -2.5175802209739033, 1e-13);
}

TEST(Loglik, ThreeObservationTobitOracle) {
  const double ll = loglik(three_obs(), ModelSpec::censored(0.61), common_theta(1.0, 0.5));
  EXPECT_NEAR(ll, -2.4762409735968944, 1e-13);
}

TEST(Loglik, TruncatedOnlyOracle) {
  const double ll = loglik(make_sample({0.2, 0.9, 1.4}), ModelSpec::truncated(0.0), common_theta(0.8, 0.5));
  EXPECT_NEAR(ll, -1.9683001050222309348, 1e-13);
}

TEST(Loglik, PerGroupOracle) {
  CensoredSample s = make_sample({0.61, 1.2, 0.61, 0.8, 1.5}, {true, false, true, false, false});
  s.X.resize(5, 2);
  s.X << 1, 0, 1, 0, 1, 1, 1, 1, 1, 1;
  s.group = {0, 0, 1, 1, 1};
  ParamVector th{Eigen::Vector2d(1.0, -0.2), Eigen::Vector2d(std::log(0.4), std::log(0.6))};
  const auto spec = ModelSpec::censored_truncated(0.0, 0.61, VarianceStructure::PerGroup);
  EXPECT_NEAR(loglik(s, spec, th), -4.4234914041759210099, 1e-13);
}

TEST(Loglik, TermsSumToTotal) {
  prop::Gen g(21);
  for (Variant v : kVariants) {
    const prop::Case c = prop::random_case(g, v, VarianceStructure::PerGroup);
    const LoglikTerms t = loglik_terms(c.sample, c.spec, c.theta);
    EXPECT_NEAR(t.total(), loglik(c.sample, c.spec, c.theta), 1e-12 * std::abs(t.total()));
    if (v == Variant::CensoredOnly) {
      EXPECT_EQ(t.truncation, 0.0);
    }
    if (v == Variant::TruncatedOnly) {
      EXPECT_EQ(t.censored, 0.0);
    }
  }
}

TEST(Loglik, UnboundedTruncationReducesToTobit) {
  prop::Gen g(22);
  for (int t = 0; t < 30; ++t) {
    const prop::Case c = prop::random_case(g, Variant::CensoredOnly, VarianceStructure::Common);
    const double nu = *c.spec.nu;
    const auto full = ModelSpec::censored_truncated(-normal::kInf, nu);
    const Evaluation e1 = evaluate(c.sample, c.spec, c.theta, 2);
    const Evaluation e2 = evaluate(c.sample, full, c.theta, 2);
    EXPECT_NEAR(e1.value, e2.value, 1e-8);
    EXPECT_LT((e1.gradient - e2.gradient).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((e1.hessian - e2.hessian).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Loglik, EmptyCensoringReducesToTruncated) {
  prop::Gen g(23);
  for (int t = 0; t < 30; ++t) {
    prop::Case c = prop::random_case(g, Variant::TruncatedOnly, VarianceStructure::Common);
    // A detection limit below every response censors nothing.
    const double a = *c.spec.a;
    const auto full = ModelSpec::censored_truncated(a, a + 1e-9);
    bool any_below = false;
    for (double y : c.sample.y) any_below |= y <= a + 1e-9;
    if (any_below) continue;
    EXPECT_NEAR(loglik(c.sample, c.spec, c.theta), loglik(c.sample, full, c.theta), 1e-8);
  }
}

TEST(Loglik, UncensoredUntruncatedIsNormalLoglik) {
  const CensoredSample s = make_sample({0.3, 1.1, 2.5, -0.4});
  const ParamVector th = common_theta(0.7, 1.3);
  double want = 0.0;
  for (double y : s.y) want += normal::log_pdf((y - 0.7) / 1.3) - std::log(1.3);
  EXPECT_NEAR(loglik(s, ModelSpec::censored(-10.0), th), want, 1e-13);
}

TEST(Loglik, LocationScaleEquivariance) {
  prop::Gen g(24);
  const double c = 2.0, d = 0.5;
  for (Variant v : kVariants) {
    for (int t = 0; t < 20; ++t) {
      const prop::Case k = prop::random_case(g, v, VarianceStructure::PerGroup);
      CensoredSample s2 = k.sample;
      for (double& y : s2.y) y = c * y + d;
      ModelSpec spec2 = k.spec;
      if (spec2.a) spec2.a = c * *spec2.a + d;
      if (spec2.nu) spec2.nu = c * *spec2.nu + d;
      ParamVector th2 = k.theta;
      th2.beta *= c;
      th2.beta(0) += d;  // intercept column
      th2.log_sigma.array() += std::log(c);
      const double n1 = static_cast<double>(k.sample.size() - k.sample.n_censored());
      EXPECT_NEAR(loglik(s2, spec2, th2), loglik(k.sample, k.spec, k.theta) - n1 * std::log(c), 1e-9);
    }
  }
}

TEST(Loglik, AdditiveAcrossGroups) {
  prop::Gen g(25);
  for (Variant v : kVariants) {
    for (int t = 0; t < 20; ++t) {
      const prop::Case k = prop::random_case(g, v, VarianceStructure::PerGroup);
      const int J = k.sample.n_groups();
      double parts = 0.0;
      for (int j = 0; j < J; ++j) {
        CensoredSample sub;
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < k.sample.size(); ++i)
          if (k.sample.group[i] == j) {
            rows.push_back(static_cast<Eigen::Index>(i));
            sub.y.push_back(k.sample.y[i]);
            sub.censored.push_back(k.sample.censored[i]);
          }
        sub.X = k.sample.X(rows, Eigen::all);
        ModelSpec spec = k.spec;
        spec.variance = VarianceStructure::Common;
        parts += loglik(sub, spec, {k.theta.beta, k.theta.log_sigma.segment(j, 1)});
      }
      EXPECT_NEAR(loglik(k.sample, k.spec, k.theta), parts, 1e-10);
    }
  }
}

TEST(Loglik, HeteroskedasticSigmaCrossBlockIsExactlyZero) {
  prop::Gen g(26);
  for (Variant v : kVariants) {
    for (int t = 0; t < 10; ++t) {
      const prop::Case k = prop::random_case(g, v, VarianceStructure::PerGroup);
      const Eigen::MatrixXd H = hessian(k.sample, k.spec, k.theta);
      const Eigen::Index p = k.theta.beta.size(), J = k.theta.log_sigma.size();
      for (Eigen::Index r = 0; r < J; ++r)
        for (Eigen::Index q = 0; q < J; ++q)
          if (r != q) {
            EXPECT_EQ(H(p + r, p + q), 0.0);
          }
      EXPECT_EQ((H - H.transpose()).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Loglik, DegeneratePoint) {
  // Both standardized bounds round to the same double: the censored mass is zero.
  const CensoredSample s = make_sample({0.61, 5.0}, {true, false});
  const ParamVector th = common_theta(1e300, 1.0);
  const auto spec = ModelSpec::censored_truncated(0.0, 0.61);
  EXPECT_EQ(evaluate(s, spec, th, 0).value, -normal::kInf);
  EXPECT_THROW(evaluate(s, spec, th, 1), std::domain_error);
}

TEST(Loglik, RejectsInconsistentInputs) {
  const ParamVector th = common_theta(1.0, 0.5);
  EXPECT_THROW(loglik(three_obs(), ModelSpec::truncated(0.0), th), std::invalid_argument);
  EXPECT_THROW(evaluate(three_obs(), ModelSpec::censored(0.61), th, 3), std::invalid_argument);
  EXPECT_THROW(loglik(three_obs(), ModelSpec::censored(0.61), {Eigen::Vector2d(1, 2), th.log_sigma}),
               std::invalid_argument);
  EXPECT_THROW(validate(make_sample({0.5, 1.0}), ModelSpec::censored(0.61)), std::invalid_argument);
  EXPECT_THROW(validate(make_sample({-0.1, 1.0}), ModelSpec::truncated(0.0)), std::invalid_argument);
  EXPECT_THROW(validate(make_sample({0.7, 1.0}, {true, false}), ModelSpec::censored(0.61)), std::invalid_argument);
  EXPECT_THROW(ModelSpec::censored_truncated(0.61, 0.61).validate(), std::invalid_argument);
  EXPECT_THROW(ModelSpec::censored_truncated(normal::kInf, 0.61).validate(), std::invalid_argument);
}

TEST(Loglik, ValidationErrorNamesRow) {
  try {
    validate(make_sample({1.0, 0.5, 1.2}), ModelSpec::censored(0.61));
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}
