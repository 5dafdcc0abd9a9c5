#include "xpca/normal.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace xpca {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(NormalTest, PdfAtZero) {
  EXPECT_NEAR(std_normal_pdf(0.0), 0.3989422804014326779, 1e-16);
  EXPECT_NEAR(std::exp(std_normal_log_pdf(1.3)), std_normal_pdf(1.3), 1e-16);
}

// Reference values from 40-digit arithmetic.
TEST(NormalTest, LogCdfMatchesHighPrecision) {
  struct Case { double x, expected; };
  const Case cases[] = {
      {-50.0, -1254.8313611394199013}, {-38.0, -726.5572160188201301},
      {-30.0, -454.32124395634319711}, {-20.0, -203.91715537109726394},
      {-5.0, -15.064998393988725736},  {0.0, -0.69314718055994530942},
      {3.0, -0.0013508099647481937988}, {10.0, -7.6198530241605260704e-24},
  };
  for (const Case& c : cases)
    EXPECT_NEAR(std_normal_log_cdf(c.x), c.expected, 1e-13 * std::abs(c.expected)) << c.x;
}

TEST(NormalTest, QuantileMatchesHighPrecision) {
  EXPECT_NEAR(std_normal_quantile(0.025), -1.9599639845400542355, 1e-14);
  EXPECT_NEAR(std_normal_quantile(1e-12), -7.0344838253011319298, 1e-12);
  EXPECT_NEAR(std_normal_quantile(0.9999999), 5.1993375821928169316, 1e-9);
  EXPECT_NEAR(std_normal_quantile(1e-300), -37.047096299361199237, 1e-10);
  EXPECT_EQ(std_normal_quantile(0.0), -kInf);
  EXPECT_EQ(std_normal_quantile(1.0), kInf);
  EXPECT_EQ(std_normal_quantile(0.5), 0.0);
}

TEST(NormalTest, QuantileRejectsOutOfRange) {
  EXPECT_THROW(std_normal_quantile(-0.1), std::domain_error);
  EXPECT_THROW(std_normal_quantile(1.5), std::domain_error);
  EXPECT_THROW(std_normal_quantile(std::nan("")), std::domain_error);
}

TEST(NormalTest, CdfAndQuantileRoundTripOnLogGrid) {
  for (double e = -12.0; e <= -0.30103; e += 0.25) {
    const double p = std::pow(10.0, e);
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(p)), p, 1e-12 * p) << p;
    const double q = 1.0 - p;
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(q)), q, 4e-16) << q;
  }
}

TEST(NormalTest, LogIntervalProbMatchesHighPrecision) {
  struct Case { double lo, hi, theta, sigma, expected; };
  const Case cases[] = {
      {30, 31, 0, 1, -454.32124395634325204},
      {-31, -30, 0, 1, -454.32124395634325204},
      {5, 6, 0, 1, -15.068446096529453352},
      {0, 1, 40, 1, -765.08315656437754441},
      {-1, 2, 0, 0.5, -0.023045318394535129209},
      {10, 10.001, 0, 1, -57.831689811774295286},
      {50, kInf, 0, 1, -1254.8313611394199013},
      {-kInf, -45, 0, 1, -1017.2260942419523707},
  };
  for (const Case& c : cases)
    EXPECT_NEAR(log_interval_prob({c.lo, c.hi}, c.theta, c.sigma), c.expected,
                1e-12 * std::abs(c.expected))
        << c.lo << " " << c.hi;
}

TEST(NormalTest, LogIntervalProbFullLineIsZero) {
  EXPECT_EQ(log_interval_prob({-kInf, kInf}, 3.0, 2.0), 0.0);
}

TEST(NormalTest, LogIntervalProbFourLevelInterval) {
  EXPECT_NEAR(log_interval_prob({-0.329206, 0.845199}, 0.0, 1.0), -0.843969754844861763, 1e-12);
}

TEST(NormalTest, LogIntervalProbIsMirrorSymmetric) {
  for (double t : {-7.0, -1.0, 0.3, 12.0})
    EXPECT_DOUBLE_EQ(log_interval_prob({1.0, 2.5}, t, 0.7), log_interval_prob({-2.5, -1.0}, -t, 0.7));
}

TEST(NormalTest, Log1mexp) {
  EXPECT_NEAR(log1mexp(-1e-10), std::log(1e-10), 1e-9);
  EXPECT_NEAR(log1mexp(-50.0), -std::exp(-50.0), 1e-30);
  EXPECT_NEAR(log1mexp(-std::log(2.0)), -std::log(2.0), 1e-15);
}

}  // namespace
}  // namespace xpca
