#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mardia/normal.hpp"

using namespace mardia;

TEST(NormalCdf, ReferenceValues) {
  EXPECT_DOUBLE_EQ(std_normal_cdf(0.0), 0.5);
  // 30-digit reference for Phi(1.959964)
  EXPECT_NEAR(std_normal_cdf(1.959964), 0.975000000903557595697504894747, 1e-15);
  // Phi(-8) = 6.22096057427178e-16
  EXPECT_NEAR(std_normal_cdf(-8.0), 6.220960574271785e-16, 1e-27);
  EXPECT_NEAR(std_normal_cdf(3.0), 0.9986501019683699, 1e-15);
}

TEST(NormalCdf, SymmetryAndMonotone) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const double z = u(gen);
    EXPECT_NEAR(std_normal_cdf(z) + std_normal_cdf(-z), 1.0, 1e-15);
  }
  double prev = 0.0;
  for (double z = -8.0; z <= 8.0; z += 0.01) {
    const double v = std_normal_cdf(z);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(NormalQuantile, ReferenceValues) {
  EXPECT_DOUBLE_EQ(std_normal_quantile(0.5), 0.0);
  EXPECT_NEAR(std_normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(std_normal_quantile(0.025), -1.959963984540054, 1e-14);
}

TEST(NormalQuantile, RoundTrip) {
  for (double e = -12.0; e < -0.31; e += 0.05) {
    const double u = std::pow(10.0, e);
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(u)), u, 1e-10);
    EXPECT_NEAR(std_normal_cdf(std_normal_quantile(1.0 - u)), 1.0 - u, 1e-10);
  }
  for (double u = 0.01; u < 1.0; u += 0.01) EXPECT_NEAR(std_normal_cdf(std_normal_quantile(u)), u, 1e-10);
}

TEST(NormalQuantile, Domain) {
  EXPECT_THROW((void)std_normal_quantile(0.0), Error);
  EXPECT_THROW((void)std_normal_quantile(1.0), Error);
  EXPECT_THROW((void)std_normal_quantile(std::nan("")), Error);
}

TEST(PValue, TwoSided) {
  EXPECT_DOUBLE_EQ(two_sided_p_value(0.0), 1.0);
  EXPECT_NEAR(two_sided_p_value(1.959963984540054), 0.05, 1e-14);
  EXPECT_DOUBLE_EQ(two_sided_p_value(2.5), two_sided_p_value(-2.5));
  EXPECT_GT(two_sided_p_value(37.0), 0.0);
  EXPECT_GE(two_sided_p_value(40.0), 0.0);
  EXPECT_LT(two_sided_p_value(3.0), two_sided_p_value(2.9));
}
