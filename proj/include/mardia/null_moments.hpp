#pragma once

// Null-hypothesis mean and variance of Mardia's kurtosis for i.i.d. samples,
// colored scalar processes, colored bivariate processes and the bivariate
// time embedding of a scalar process. All colored forms are accurate to o(1/N).
//
// Lags missing from a supplied covariance sequence are treated as zero.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mardia/error.hpp"
#include "mardia/stats_core.hpp"

namespace mardia {

enum class NullModel { IID, ScalarColored, BivariateColored, EmbeddedBivariate };

inline std::string_view to_string(NullModel m) {
  switch (m) {
    case NullModel::IID: return "iid";
    case NullModel::ScalarColored: return "scalar-colored";
    case NullModel::BivariateColored: return "bivariate";
    case NullModel::EmbeddedBivariate: return "embedded";
  }
  return "unknown";
}

inline NullModel null_model_from_string(std::string_view s) {
  if (s == "iid") return NullModel::IID;
  if (s == "scalar-colored" || s == "scalar") return NullModel::ScalarColored;
  if (s == "bivariate" || s == "bivariate-colored") return NullModel::BivariateColored;
  if (s == "embedded" || s == "embedded-bivariate") return NullModel::EmbeddedBivariate;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

struct NullMoments {
  double mean = 0.0;
  double variance = 0.0;
  NullModel model = NullModel::IID;
  std::size_t n = 0;

  [[nodiscard]] double stddev() const { return std::sqrt(variance); }
};

/// Scalar autocovariance: s0 = S(0) and s[k] = S(k + 1).
struct ScalarCovSeq {
  double s0 = 1.0;
  std::vector<double> s;

  [[nodiscard]] double at(std::size_t tau) const {
    if (tau == 0) return s0;
    return tau <= s.size() ? s[tau - 1] : 0.0;
  }

  /// |S(tau)| <= S(0) for every stored lag.
  [[nodiscard]] bool cauchy_schwarz_ok() const {
    for (double v : s) {
      if (std::abs(v) > s0) return false;
    }
    return true;
  }

  static ScalarCovSeq from(const LagCovarianceSeq& seq) {
    if (seq.dim() != 1) throw Error(ErrorCode::ModeDimensionMismatch, "scalar covariance needs p = 1");
    ScalarCovSeq out;
    out.s0 = seq.lags[0](0, 0);
    for (std::size_t tau = 1; tau < seq.lags.size(); ++tau) out.s.push_back(seq.lags[tau](0, 0));
    return out;
  }
};

/// Correlation function C(0..L) of a scalar series y and the embedding stride.
/// The embedded vector is x_a(n) = y(n delta + a), so S_ab(tau) = C(tau delta + a - b).
struct EmbeddingCorrelation {
  std::vector<double> c;
  std::size_t delta = 1;

  [[nodiscard]] double at(long j) const {
    const auto mag = static_cast<std::size_t>(j < 0 ? -j : j);
    return mag < c.size() ? c[mag] : 0.0;
  }

  /// gamma_i(tau) = C(tau delta + i).
  [[nodiscard]] double gamma(long i, std::size_t tau) const {
    return at(static_cast<long>(tau * delta) + i);
  }

  [[nodiscard]] bool cauchy_schwarz_ok() const {
    for (double v : c) {
      if (std::abs(v) > c.front()) return false;
    }
    return true;
  }

  /// Equivalent bivariate lag sequence S_ab(tau) = C(tau delta + a - b), tau = 0..max_lag.
  [[nodiscard]] LagCovarianceSeq as_bivariate(std::size_t max_lag) const {
    std::vector<Matrix> lags;
    for (std::size_t tau = 0; tau <= max_lag; ++tau) {
      Matrix s(2, 2);
      for (long a = 0; a < 2; ++a) {
        for (long b = 0; b < 2; ++b) s(a, b) = at(static_cast<long>(tau * delta) + a - b);
      }
      lags.push_back(std::move(s));
    }
    return LagCovarianceSeq::from_lags(std::move(lags));
  }
};

/// Exact i.i.d. moments: mean p(p+2)(n-1)/(n+1), variance 8p(p+2)/n.
inline NullMoments iid_moments(std::size_t p, std::size_t n) {
  if (p < 1 || n < 2) throw Error(ErrorCode::InvalidArgument, "iid moments need p >= 1 and n >= 2");
  const double pp = static_cast<double>(p * (p + 2));
  const double nn = static_cast<double>(n);
  return {pp * (nn - 1.0) / (nn + 1.0), 8.0 * pp / nn, NullModel::IID, n};
}

inline NullMoments scalar_colored_moments(const ScalarCovSeq& cov, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "colored moments need n >= 2");
  if (!(cov.s0 > 0.0)) throw Error(ErrorCode::NonPositiveS0, "S(0) must be positive");
  const double nn = static_cast<double>(n);
  const std::size_t last = std::min(n - 1, cov.s.size());
  double sum2 = 0.0;
  double sum4 = 0.0;
  for (std::size_t tau = 1; tau <= last; ++tau) {
    const double r = cov.s[tau - 1] / cov.s0;
    const double w = nn - static_cast<double>(tau);
    sum2 += w * r * r;
    sum4 += w * r * r * r * r;
  }
  const double mean = 3.0 - 6.0 / nn - 12.0 / (nn * nn) * sum2;
  const double variance = 24.0 / nn * (1.0 + 2.0 / nn * sum4);
  return {mean, variance, NullModel::ScalarColored, n};
}

namespace bivariate {

/// Zero-lag entries and one lag matrix T = S(tau), named as in the closed forms.
struct LagTerms {
  double s11, s22, s12;
  double t11, t12, t21, t22;  ///< t12 = S_12(tau) = E[x_1(n) x_2(n - tau)]
};

/// Mean kernel: equals det^2 [ (tr GT)^2 + tr(GTGT) + tr(GTGT^T) ].
inline double q1(const LagTerms& v) {
  const double cross = v.t12 + v.t21;
  return 3.0 * v.s11 * v.s11 * v.t22 * v.t22 + 3.0 * v.s22 * v.s22 * v.t11 * v.t11 +
         v.s11 * v.s22 * (2.0 * v.t11 * v.t22 + cross * cross) +
         v.s12 * v.s12 * (4.0 * v.t11 * v.t22 + 2.0 * cross * cross) -
         6.0 * v.s11 * v.s12 * v.t22 * cross - 6.0 * v.s22 * v.s12 * v.t11 * cross;
}

/// Variance kernel: det^4 [ (tr M)^2 + 2 tr(M^2) ] with M = G T G T^T.
inline double q2(const LagTerms& v) {
  Eigen::Matrix2d adj;
  adj << v.s22, -v.s12, -v.s12, v.s11;
  Eigen::Matrix2d t;
  t << v.t11, v.t12, v.t21, v.t22;
  const Eigen::Matrix2d m = adj * t * adj * t.transpose();
  const double tr = m.trace();
  return tr * tr + 2.0 * (m * m).trace();
}

}  // namespace bivariate

namespace printed {

// Literal transcriptions of the bivariate kernels as typeset in the source
// derivation; kept only so `verify` can report where they depart from the
// Isserlis oracle. Not used for testing data.

inline double q1(const bivariate::LagTerms& v) {
  const double cross = v.t12 + v.t21;
  return v.s11 * v.s22 * (cross * cross - 4.0 * v.t11 * v.t22) +
         v.s12 * v.s12 * (2.0 * cross * cross + 4.0 * v.t22 * v.t11) -
         6.0 * v.s22 * v.s12 * (v.t11 * cross) - 6.0 * v.s11 * v.s12 * (v.t22 * cross) +
         6.0 * v.s11 * v.s11 * v.t22 * v.t22 + 6.0 * v.s22 * v.s22 * v.t11 * v.t11;
}

// Unbalanced parentheses closed right after S_21(tau).
inline double q2(const bivariate::LagTerms& v) {
  const double a = v.t11, b = v.t22, c = v.t12, d = v.t21;
  const double s11 = v.s11, s22 = v.s22, s12 = v.s12;
  const double inner = (2 * a * b + d * d + c * c) * s11 * s22 + 2 * (a * b + c * d) * s12 * s12;
  return (2 * a * a * b * b - 16 * a * b * c * d + 3 * (d * d + c * c) * (d * d + c * c) +
          12 * a * b * (c + d) * (c + d) - 4 * c * c * d * d) * s11 * s11 * s22 * s22 +
         2 * s11 * s11 * s12 * s12 * (8 * a * b + 3 * (5 * a * b + d * c) * (d + c) * (d + c) - 4 * d * c * (b * b + d * c)) +
         2 * s22 * s22 * s12 * s12 * (8 * b * a + 3 * (5 * a * b + d * c) * (d + c) * (d + c) - 4 * d * c * (a * a + d * c)) +
         3 * s11 * s11 * s11 * s11 * b * b * b * b + 3 * s22 * s22 * s22 * s22 * a * a * a * a +
         8 * s12 * s12 * s12 * s12 * (a * a * b * b + 4 * a * b * c * c + d * d * c * c) -
         12 * s11 * s12 * b * (c + d) * inner - 12 * s22 * s12 * a * (c + d) * inner;
}

}  // namespace printed

namespace detail {

inline bivariate::LagTerms lag_terms(const LagCovarianceSeq& cov, std::size_t tau) {
  const Matrix& s0 = cov.lags[0];
  const Matrix& t = cov.lags[tau];
  return {s0(0, 0), s0(1, 1), 0.5 * (s0(0, 1) + s0(1, 0)), t(0, 0), t(0, 1), t(1, 0), t(1, 1)};
}

template <class Q1, class Q2>
NullMoments bivariate_with(const LagCovarianceSeq& cov, std::size_t n, Q1 kernel1, Q2 kernel2) {
  if (cov.dim() != 2) throw Error(ErrorCode::ModeDimensionMismatch, "bivariate moments need p = 2");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "colored moments need n >= 2");
  const auto zero = lag_terms(cov, 0);
  const double det = zero.s11 * zero.s22 - zero.s12 * zero.s12;
  if (!(det > 0.0)) throw Error(ErrorCode::DegenerateCovariance, "S11 S22 - S12^2 must be positive");
  const double nn = static_cast<double>(n);
  const std::size_t last = std::min(n - 1, cov.max_lag());
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (std::size_t tau = 1; tau <= last; ++tau) {
    const auto v = lag_terms(cov, tau);
    const double w = nn - static_cast<double>(tau);
    sum1 += w * kernel1(v);
    sum2 += w * kernel2(v);
  }
  const double det2 = det * det;
  const double mean = 8.0 - 16.0 / nn - 4.0 / (nn * nn) * sum1 / det2;
  const double variance = 64.0 / nn + 16.0 / (nn * nn) * sum2 / (det2 * det2);
  return {mean, variance, NullModel::BivariateColored, n};
}

}  // namespace detail

inline NullMoments bivariate_colored_moments(const LagCovarianceSeq& cov, std::size_t n) {
  return detail::bivariate_with(cov, n, bivariate::q1, bivariate::q2);
}

/// Same assembly with the printed kernels; diagnostic only.
inline NullMoments bivariate_colored_moments_printed(const LagCovarianceSeq& cov, std::size_t n) {
  return detail::bivariate_with(cov, n, printed::q1, printed::q2);
}

namespace embedding {

/// gamma_{-1}, gamma_0, gamma_1 at one lag, with C0 = C(0), C1 = C(1).
struct Gammas {
  double c0, c1;
  double gm, g0, g1;
};

inline double q1(const Gammas& v) {
  const double s = v.g1 + v.gm;
  return (s * s + 8.0 * v.g0 * v.g0) * v.c0 * v.c0 - 12.0 * v.c0 * v.c1 * v.g0 * s +
         (2.0 * s * s + 4.0 * v.g0 * v.g0) * v.c1 * v.c1;
}

inline double q2(const Gammas& v) {
  const double s = v.g1 + v.gm;
  const double g00 = v.g0 * v.g0;
  const double pm = v.g1 * v.gm;
  const double c02 = v.c0 * v.c0;
  const double c12 = v.c1 * v.c1;
  const double diff = v.g1 * v.g1 - v.gm * v.gm;
  return (8.0 * (g00 - pm) * (g00 - pm) + 3.0 * diff * diff + 12.0 * g00 * s * s) * c02 * c02 +
         4.0 * (8.0 * g00 * g00 + 3.0 * (5.0 * g00 + pm) * s * s - 4.0 * pm * (g00 + pm)) * c02 * c12 +
         8.0 * (g00 * g00 + 4.0 * g00 * pm + pm * pm) * c12 * c12 -
         24.0 * v.c0 * v.c1 * v.g0 * s *
             ((2.0 * g00 + v.g1 * v.g1 + v.gm * v.gm) * c02 + 2.0 * (g00 + pm) * c12);
}

}  // namespace embedding

inline NullMoments embedded_bivariate_moments(const EmbeddingCorrelation& corr, std::size_t n) {
  if (corr.delta < 1) throw Error(ErrorCode::InvalidArgument, "embedding stride must be >= 1");
  if (corr.c.empty()) throw Error(ErrorCode::InvalidArgument, "empty correlation sequence");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "colored moments need n >= 2");
  const double c0 = corr.at(0);
  const double c1 = corr.at(1);
  const double det = c0 * c0 - c1 * c1;
  if (!(det > 0.0)) throw Error(ErrorCode::DegenerateCovariance, "C0^2 - C1^2 must be positive");
  const double nn = static_cast<double>(n);
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (std::size_t tau = 1; tau < n; ++tau) {
    // every gamma_i(tau) is zero once tau delta - 1 leaves the stored range
    if (tau * corr.delta >= corr.c.size() + 1) break;
    const embedding::Gammas g{c0, c1, corr.gamma(-1, tau), corr.gamma(0, tau), corr.gamma(1, tau)};
    const double w = nn - static_cast<double>(tau);
    sum1 += w * embedding::q1(g);
    sum2 += w * embedding::q2(g);
  }
  const double det2 = det * det;
  const double mean = 8.0 - 16.0 / nn - 4.0 / (nn * nn) * sum1 / det2;
  const double variance = 64.0 / nn + 16.0 / (nn * nn) * sum2 / (det2 * det2);
  return {mean, variance, NullModel::EmbeddedBivariate, n};
}

/// Default estimation window for plug-in covariances: min(n - 1, ceil(10 sqrt(n))).
inline std::size_t auto_truncation(std::size_t n) {
  if (n < 1) return 0;
  const auto l = static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
  return std::min(n - 1, l);
}

/// Sample lag covariances for the colored formulas when S(tau) is unknown.
inline LagCovarianceSeq plug_in_cov(const TimeSeries& x, std::optional<std::size_t> truncation = std::nullopt,
                                    Centering centering = Centering::SubtractMean) {
  const std::size_t l = truncation.value_or(auto_truncation(x.size()));
  return lag_covariance(x, l, centering);
}

/// Plug-in C(0..L delta + 1) from a scalar record, for the embedding formulas.
/// `vectors` is the number of embedded samples the statistic will use.
inline EmbeddingCorrelation plug_in_correlation(const TimeSeries& y, std::size_t delta, std::size_t vectors,
                                                std::optional<std::size_t> truncation = std::nullopt,
                                                Centering centering = Centering::SubtractMean) {
  if (y.dim() != 1) throw Error(ErrorCode::ModeDimensionMismatch, "embedding correlation needs a scalar series");
  const std::size_t l = truncation.value_or(auto_truncation(vectors));
  const std::size_t max_lag = std::min(y.size() - 1, l * delta + 1);
  const auto seq = lag_covariance(y, max_lag, centering);
  EmbeddingCorrelation out;
  out.delta = delta;
  for (const auto& s : seq.lags) out.c.push_back(s(0, 0));
  return out;
}

}  // namespace mardia
