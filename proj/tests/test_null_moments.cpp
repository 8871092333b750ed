#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mardia/data_gen.hpp"
#include "mardia/null_moments.hpp"

using namespace mardia;

namespace {

// sum_{tau=1}^{n-1} (n - tau) r^tau in closed form
double weighted_geometric(double r, double n) { return r * (n * (1.0 - r) - 1.0 + std::pow(r, n)) / ((1.0 - r) * (1.0 - r)); }

ScalarCovSeq geometric_scalar(double s0, double a, std::size_t lags) {
  ScalarCovSeq c;
  c.s0 = s0;
  for (std::size_t k = 1; k <= lags; ++k) c.s.push_back(s0 * std::pow(a, static_cast<double>(k)));
  return c;
}

EmbeddingCorrelation random_correlation(std::mt19937_64& gen, std::size_t delta, std::size_t len) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  EmbeddingCorrelation c;
  c.delta = delta;
  const double decay = 0.3 + 0.6 * std::abs(u(gen));
  c.c.push_back(1.0 + std::abs(u(gen)));
  for (std::size_t k = 1; k < len; ++k) c.c.push_back(c.c[0] * u(gen) * std::pow(decay, static_cast<double>(k)));
  return c;
}

}  // namespace

TEST(IidMoments, TheoremValues) {
  auto m = iid_moments(1, 100);
  EXPECT_DOUBLE_EQ(m.mean, 297.0 / 101.0);
  EXPECT_DOUBLE_EQ(m.variance, 0.24);
  m = iid_moments(2, 1000);
  EXPECT_NEAR(m.mean, 7.984015984015984, 1e-14);
  EXPECT_DOUBLE_EQ(m.variance, 0.064);
  EXPECT_NEAR(iid_moments(3, 100000000).mean, 15.0, 1e-6);
  EXPECT_THROW((void)iid_moments(1, 1), Error);
}

TEST(ScalarColored, ZeroLagsReduceToIid) {
  ScalarCovSeq c;
  c.s0 = 2.5;
  c.s.assign(99, 0.0);
  const auto m = scalar_colored_moments(c, 100);
  EXPECT_DOUBLE_EQ(m.mean, 3.0 - 6.0 / 100.0);
  EXPECT_DOUBLE_EQ(m.variance, 24.0 / 100.0);
  EXPECT_EQ(m.model, NullModel::ScalarColored);
}

TEST(ScalarColored, Ar1ClosedSums) {
  const std::size_t n = 1000;
  const auto m = scalar_colored_moments(geometric_scalar(1.0, 0.8, n - 1), n);
  const double N = static_cast<double>(n);
  const double mean = 3.0 - 6.0 / N - 12.0 / (N * N) * weighted_geometric(0.64, N);
  const double var = 24.0 / N * (1.0 + 2.0 / N * weighted_geometric(0.4096, N));
  EXPECT_NEAR(m.mean, mean, 1e-12);
  EXPECT_NEAR(m.variance, var, 1e-14);
  // frozen: 2.972725925925926 / 0.05724440919205941; the rounded reference
  // values 2.97267 / 0.057302 drop the -tau part of the (n - tau) weights
  EXPECT_NEAR(m.mean, 2.972725925925926, 1e-12);
  EXPECT_NEAR(m.variance, 0.05724440919205941, 1e-14);
  EXPECT_NEAR(m.mean, 2.97267, 1e-4);
  EXPECT_NEAR(m.variance, 0.057302, 1e-4);
}

TEST(ScalarColored, ScaleFreeAndSensitivity) {
  const auto a = scalar_colored_moments(geometric_scalar(1.0, 0.5, 20), 200);
  const auto b = scalar_colored_moments(geometric_scalar(7.0, 0.5, 20), 200);
  EXPECT_NEAR(a.mean, b.mean, 1e-14);
  EXPECT_NEAR(a.variance, b.variance, 1e-15);
  EXPECT_GT(a.variance, 24.0 / 200.0);

  auto c = geometric_scalar(1.0, 0.5, 20);
  double prev = scalar_colored_moments(c, 200).variance;
  for (double bump : {0.1, 0.2, 0.3}) {
    c.s[3] = -(0.0625 + bump);
    const double v = scalar_colored_moments(c, 200).variance;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(ScalarColored, TruncatesPastN) {
  // lags beyond n - 1 never enter the sums
  const auto a = scalar_colored_moments(geometric_scalar(1.0, 0.9, 9), 10);
  const auto b = scalar_colored_moments(geometric_scalar(1.0, 0.9, 50), 10);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.variance, b.variance);
}

TEST(ScalarColored, Errors) {
  ScalarCovSeq c;
  c.s0 = 0.0;
  try {
    (void)scalar_colored_moments(c, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveS0);
  }
  c.s0 = 1.0;
  c.s = {1.5};
  EXPECT_FALSE(c.cauchy_schwarz_ok());
}

TEST(Bivariate, ZeroLagsReduceToIid) {
  Matrix s0(2, 2);
  s0 << 2.0, 0.3, 0.3, 1.0;
  std::vector<Matrix> lags{s0, Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  const auto m = bivariate_colored_moments(LagCovarianceSeq::from_lags(lags), 50);
  EXPECT_DOUBLE_EQ(m.mean, 8.0 - 16.0 / 50.0);
  EXPECT_DOUBLE_EQ(m.variance, 64.0 / 50.0);
}

TEST(Bivariate, DiagonalKernel) {
  const double s = 1.7, c = 0.6;
  const bivariate::LagTerms v{s, s, 0.0, c, 0.0, 0.0, c};
  EXPECT_NEAR(bivariate::q1(v), 8.0 * s * s * c * c, 1e-13);
  EXPECT_NEAR(printed::q1(v), 8.0 * s * s * c * c, 1e-13);
}

TEST(Bivariate, KernelsMatchTraceForms) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix a(2, 2);
    a << u(gen), u(gen), u(gen), u(gen);
    Matrix s0 = a * a.transpose() + 0.5 * Matrix::Identity(2, 2);
    Matrix t(2, 2);
    t << u(gen), u(gen), u(gen), u(gen);
    const bivariate::LagTerms v{s0(0, 0), s0(1, 1), s0(0, 1), t(0, 0), t(0, 1), t(1, 0), t(1, 1)};
    const double det = s0.determinant();
    const Matrix g = s0.inverse();
    const Matrix gt = g * t;
    const double trace_form =
        det * det * (gt.trace() * gt.trace() + (gt * gt).trace() + (g * t * g * t.transpose()).trace());
    EXPECT_NEAR(bivariate::q1(v), trace_form, 1e-10 * (1.0 + std::abs(trace_form)));
    // the printed kernel differs by 3 (S11 t22 - S22 t11)^2
    const double gap = 3.0 * std::pow(s0(0, 0) * t(1, 1) - s0(1, 1) * t(0, 0), 2);
    EXPECT_NEAR(printed::q1(v) - bivariate::q1(v), gap, 1e-10 * (1.0 + gap));
  }
}

TEST(Bivariate, Degenerate) {
  Matrix s0(2, 2);
  s0 << 1.0, 1.0, 1.0, 1.0;
  try {
    (void)bivariate_colored_moments(LagCovarianceSeq::from_lags({s0, Matrix::Zero(2, 2)}), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCovariance);
  }
  try {
    (void)bivariate_colored_moments(LagCovarianceSeq::from_lags({Matrix::Identity(3, 3)}), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModeDimensionMismatch);
  }
}

TEST(Embedding, WhiteReducesToIid) {
  EmbeddingCorrelation c;
  c.delta = 2;
  c.c = {1.3, 0.0, 0.0, 0.0, 0.0};
  const auto m = embedded_bivariate_moments(c, 200);
  EXPECT_DOUBLE_EQ(m.mean, 8.0 - 16.0 / 200.0);
  EXPECT_DOUBLE_EQ(m.variance, 64.0 / 200.0);
}

TEST(Embedding, MatchesBivariateUnderIdentity) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t delta = 1 + static_cast<std::size_t>(trial % 3);
    const std::size_t n = 30 + static_cast<std::size_t>(trial);
    const auto corr = random_correlation(gen, delta, 2 + static_cast<std::size_t>(trial % 17));
    const auto e = embedded_bivariate_moments(corr, n);
    const auto b = bivariate_colored_moments(corr.as_bivariate(n - 1), n);
    EXPECT_NEAR(e.mean, b.mean, 1e-10 * std::abs(b.mean));
    EXPECT_NEAR(e.variance, b.variance, 1e-10 * b.variance);
  }
}

TEST(Embedding, PrintedBivariateKernelAgreesOnEmbeddedStructure) {
  // S11(tau) = S22(tau) = C(tau delta) and S11 = S22 = C0 make the extra term vanish
  std::mt19937_64 gen(2);
  const auto corr = random_correlation(gen, 2, 12);
  const auto a = bivariate_colored_moments(corr.as_bivariate(39), 40);
  const auto b = bivariate_colored_moments_printed(corr.as_bivariate(39), 40);
  EXPECT_NEAR(a.mean, b.mean, 1e-12);
}

TEST(Embedding, Degenerate) {
  EmbeddingCorrelation c;
  c.c = {1.0, 1.0};
  EXPECT_THROW((void)embedded_bivariate_moments(c, 20), Error);
}

TEST(PlugIn, AutoTruncation) {
  EXPECT_EQ(auto_truncation(1000), 317u);
  EXPECT_EQ(auto_truncation(50), 49u);
  EXPECT_EQ(auto_truncation(1), 0u);
}

TEST(PlugIn, WhiteNoiseLagsSmall) {
  SeededRng rng(1, 0);
  const std::size_t n = 4000;
  const auto x = TimeSeries::scalar(ar1(0.0, n, 0, rng));
  const auto seq = plug_in_cov(x, 100);
  std::size_t inside = 0;
  for (std::size_t tau = 1; tau <= 100; ++tau) {
    if (std::abs(seq.lags[tau](0, 0) / seq.lags[0](0, 0)) < 4.0 / std::sqrt(static_cast<double>(n))) ++inside;
  }
  EXPECT_GE(inside, 95u);
}

TEST(PlugIn, Ar1LagRatio) {
  SeededRng rng(2, 0);
  const auto x = TimeSeries::scalar(ar1(0.8, 100000, 1000, rng));
  const auto seq = plug_in_cov(x, 5);
  EXPECT_NEAR(seq.lags[1](0, 0) / seq.lags[0](0, 0), 0.8, 0.02);
}

TEST(PlugIn, ZeroWindowGivesIidLikeMoments) {
  SeededRng rng(3, 0);
  const auto x = TimeSeries::scalar(ar1(0.8, 300, 100, rng));
  const auto m = scalar_colored_moments(ScalarCovSeq::from(plug_in_cov(x, 0)), 300);
  EXPECT_DOUBLE_EQ(m.mean, 3.0 - 6.0 / 300.0);
  EXPECT_DOUBLE_EQ(m.variance, 24.0 / 300.0);
}

TEST(PlugIn, EmbeddingCorrelationWindow) {
  SeededRng rng(4, 0);
  const auto y = TimeSeries::scalar(ar1(0.5, 1001, 100, rng));
  const auto c = plug_in_correlation(y, 2, 500, 10);
  EXPECT_EQ(c.c.size(), 22u);
  EXPECT_EQ(c.delta, 2u);
}
