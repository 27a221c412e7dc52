#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "tcens/normal.hpp"

namespace n = tcens::normal;

namespace {

void expect_rel(double got, double want, double tol) {
  EXPECT_LE(std::abs(got - want), tol * std::abs(want)) << "got " << got << " want " << want;
}

}  // namespace

// Reference values from 50-digit arithmetic at the exact double inputs.
TEST(NormalLogCdf, MatchesHighPrecisionValues) {
  expect_rel(n::log_cdf(-40.0), -804.60844201375378817, 1e-14);
  expect_rel(n::log_cdf(-30.0), -454.32124395634319711, 1e-14);
  expect_rel(n::log_cdf(-20.5), -214.06672896326380017, 1e-14);
  expect_rel(n::log_cdf(-10.0), -53.231285150512470578, 1e-14);
  expect_rel(n::log_cdf(-1.0), -1.8410216450092635058, 1e-14);
  expect_rel(n::log_cdf(0.0), -0.69314718055994530942, 1e-15);
  expect_rel(n::log_cdf(3.0), -0.0013508099647481937988, 1e-13);
  expect_rel(n::log_cdf(5.0), -2.8665161296376359338e-7, 1e-12);
  expect_rel(n::log_cdf(8.0), -6.2209605742717860585e-16, 1e-12);
}

TEST(NormalLogCdf, ContinuousAcrossBranchPoints) {
  for (double x : {-20.0, 0.0}) {
    const double lo = n::log_cdf(std::nextafter(x, -1e9));
    const double hi = n::log_cdf(std::nextafter(x, 1e9));
    expect_rel(lo, hi, 1e-13);
  }
}

TEST(NormalLogCdf, MonotoneOnGrid) {
  double prev = -std::numeric_limits<double>::infinity();
  for (double x = -60.0; x <= 12.0; x += 0.01) {
    const double v = n::log_cdf(x);
    EXPECT_GE(v, prev) << "x = " << x;
    prev = v;
  }
}

TEST(NormalLogCdf, Limits) {
  EXPECT_EQ(n::log_cdf(-n::kInf), -n::kInf);
  EXPECT_EQ(n::log_cdf(n::kInf), 0.0);
  EXPECT_TRUE(std::isfinite(n::log_cdf(-1e3)));
}

TEST(NormalLogDiffCdf, MatchesHighPrecisionValues) {
  expect_rel(n::log_diff_cdf(1.0, 2.0), -1.9957982691807553776, 1e-14);
  expect_rel(n::log_diff_cdf(6.0, 7.0), -20.738067003282469018, 1e-13);
  expect_rel(n::log_diff_cdf(-8.0, -7.5), -31.095579450839752766, 1e-13);
  expect_rel(n::log_diff_cdf(-1e-9, 1e-9), -20.949057189591138526, 1e-9);
}

TEST(NormalLogDiffCdf, EdgeCases) {
  EXPECT_EQ(n::log_diff_cdf(1.0, 1.0), -n::kInf);
  EXPECT_EQ(n::log_diff_cdf(2.0, 1.0), -n::kInf);
  EXPECT_DOUBLE_EQ(n::log_diff_cdf(-n::kInf, 0.3), n::log_cdf(0.3));
}

TEST(NormalQuantile, MatchesHighPrecisionValues) {
  expect_rel(n::quantile(0.75), 0.67448975019608174, 1e-15);
  expect_rel(n::quantile(1e-10), -6.3613409024040561991, 1e-14);
  expect_rel(n::quantile(0.025), -1.9599639845400542118, 1e-15);
  expect_rel(n::quantile(0.95), 1.6448536269514722843, 1e-15);
  expect_rel(n::quantile(0.999999), 4.7534243088170877657, 1e-12);
}

TEST(NormalQuantile, RoundTripsThroughCdf) {
  for (double p = 1e-6; p < 1.0; p += 0.00997) {
    const double x = n::quantile(p);
    EXPECT_NEAR(n::cdf(x), p, 4e-16 * std::max(1.0, p / (1.0 - p))) << "p = " << p;
  }
  for (double e = -300; e <= -20; e += 10) {
    const double p = std::pow(10.0, e);
    expect_rel(n::cdf(n::quantile(p)), p, 1e-12);
  }
}

TEST(NormalQuantile, Endpoints) {
  EXPECT_EQ(n::quantile(0.0), -n::kInf);
  EXPECT_EQ(n::quantile(1.0), n::kInf);
  EXPECT_EQ(n::quantile(0.5), 0.0);
  EXPECT_THROW(n::quantile(-0.1), std::domain_error);
  EXPECT_THROW(n::quantile(1.1), std::domain_error);
  EXPECT_THROW(n::quantile(std::nan("")), std::domain_error);
}

TEST(NormalLog1mexp, AccurateOnBothSidesOfLn2) {
  expect_rel(n::log1mexp(-1e-10), std::log(1e-10), 1e-9);
  expect_rel(n::log1mexp(-50.0), -std::exp(-50.0), 1e-14);
  expect_rel(n::log1mexp(-0.5), std::log(1.0 - std::exp(-0.5)), 1e-15);
}
