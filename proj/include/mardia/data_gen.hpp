#pragma once

// Seeded generators: AR(1) Gaussian series, copula-coupled bivariate series
// with colored standard normal marginals, scalar embeddings and the additive
// non-Gaussian detection scenario.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mardia/error.hpp"
#include "mardia/normal.hpp"
#include "mardia/null_moments.hpp"
#include "mardia/stats_core.hpp"

namespace mardia {

/// Deterministic engine for one replication: identical (seed, stream) gives an
/// identical sequence regardless of how replications are scheduled.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    std::seed_seq seq{split(state), split(state), split(state), split(state)};
    engine_.seed(seq);
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

  double normal() { return normal_(engine_); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = std::generate_canonical<double, 53>(engine_);
      if (u > 0.0) return u;
    }
  }

  double exponential() { return -std::log(uniform()); }

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  /// Laplace(0, 1) by inverse CDF; variance 2.
  double laplace() {
    const double u = uniform() - 0.5;
    return u < 0.0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint32_t split(std::uint64_t& x) {
    // splitmix64
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return static_cast<std::uint32_t>((z ^ (z >> 31)) >> 16);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

enum class ProcessFamily { IIDGaussian, AR1Gaussian, GaussianCopula, ClaytonCopula, GumbelCopula, DetectionMixture, Embedded };

NLOHMANN_JSON_SERIALIZE_ENUM(ProcessFamily, {{ProcessFamily::IIDGaussian, "IIDGaussian"},
                                             {ProcessFamily::AR1Gaussian, "AR1Gaussian"},
                                             {ProcessFamily::GaussianCopula, "GaussianCopula"},
                                             {ProcessFamily::ClaytonCopula, "ClaytonCopula"},
                                             {ProcessFamily::GumbelCopula, "GumbelCopula"},
                                             {ProcessFamily::DetectionMixture, "DetectionMixture"},
                                             {ProcessFamily::Embedded, "Embedded"}})

inline std::string to_string(ProcessFamily f) { return nlohmann::json(f).get<std::string>(); }

inline constexpr std::size_t kDefaultBurnIn = 1000;

struct ProcessSpec {
  ProcessFamily family = ProcessFamily::IIDGaussian;
  std::size_t dim = 1;          ///< IIDGaussian only
  double a = 0.8;               ///< marginal AR(1) coefficient
  double r12 = 0.8;             ///< GaussianCopula correlation
  double theta = 2.0;           ///< Archimedean parameter
  std::optional<double> k;      ///< DetectionMixture amplitude
  std::optional<double> snr_db; ///< DetectionMixture SNR, alternative to k
  std::size_t delta = 2;        ///< Embedded stride
  std::size_t embed_dim = 2;    ///< Embedded output dimension
  std::size_t burn_in = kDefaultBurnIn;
  std::shared_ptr<ProcessSpec> inner;  ///< Embedded: the scalar source process

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ParameterOutOfDomain, msg); };
    switch (family) {
      case ProcessFamily::IIDGaussian:
        if (dim < 1) fail("IIDGaussian needs dim >= 1");
        break;
      case ProcessFamily::AR1Gaussian:
        if (!(std::abs(a) < 1.0)) fail("AR coefficient must satisfy |a| < 1");
        break;
      case ProcessFamily::GaussianCopula:
        if (!(std::abs(a) < 1.0)) fail("AR coefficient must satisfy |a| < 1");
        if (!(std::abs(r12) < 1.0)) fail("Gaussian copula needs |R12| < 1");
        break;
      case ProcessFamily::ClaytonCopula:
        if (!(std::abs(a) < 1.0)) fail("AR coefficient must satisfy |a| < 1");
        if (!(theta >= -1.0) || theta == 0.0 || !std::isfinite(theta)) fail("Clayton needs theta in [-1, inf) \\ {0}");
        break;
      case ProcessFamily::GumbelCopula:
        if (!(std::abs(a) < 1.0)) fail("AR coefficient must satisfy |a| < 1");
        if (!(theta >= 1.0) || !std::isfinite(theta)) fail("Gumbel needs theta in [1, inf)");
        break;
      case ProcessFamily::DetectionMixture:
        if (k && snr_db) fail("give either k or snr_db, not both");
        break;
      case ProcessFamily::Embedded:
        if (!inner) fail("Embedded needs an inner scalar process");
        if (delta < 1 || embed_dim < 1) fail("Embedded needs delta >= 1 and embed_dim >= 1");
        inner->validate();
        break;
    }
  }
};

inline void to_json(nlohmann::json& j, const ProcessSpec& s) {
  j = nlohmann::json{{"family", s.family}, {"burn_in", s.burn_in}};
  switch (s.family) {
    case ProcessFamily::IIDGaussian: j["dim"] = s.dim; break;
    case ProcessFamily::AR1Gaussian: j["a"] = s.a; break;
    case ProcessFamily::GaussianCopula: j["a"] = s.a; j["r12"] = s.r12; break;
    case ProcessFamily::ClaytonCopula:
    case ProcessFamily::GumbelCopula: j["a"] = s.a; j["theta"] = s.theta; break;
    case ProcessFamily::DetectionMixture:
      if (s.k) j["k"] = *s.k;
      if (s.snr_db) j["snr_db"] = *s.snr_db;
      break;
    case ProcessFamily::Embedded:
      j["delta"] = s.delta;
      j["embed_dim"] = s.embed_dim;
      if (s.inner) j["inner"] = *s.inner;
      break;
  }
}

inline void from_json(const nlohmann::json& j, ProcessSpec& s) {
  static const std::vector<std::string> known = {"family", "burn_in", "dim", "a", "r12", "theta",
                                                 "k", "snr_db", "delta", "embed_dim", "inner"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown process field '" + key + "'");
    }
  }
  s = ProcessSpec{};
  s.family = j.at("family").get<ProcessFamily>();
  if (j.contains("burn_in")) s.burn_in = j["burn_in"].get<std::size_t>();
  if (j.contains("dim")) s.dim = j["dim"].get<std::size_t>();
  if (j.contains("a")) s.a = j["a"].get<double>();
  if (j.contains("r12")) s.r12 = j["r12"].get<double>();
  if (j.contains("theta")) s.theta = j["theta"].get<double>();
  if (j.contains("k")) s.k = j["k"].get<double>();
  if (j.contains("snr_db")) s.snr_db = j["snr_db"].get<double>();
  if (j.contains("delta")) s.delta = j["delta"].get<std::size_t>();
  if (j.contains("embed_dim")) s.embed_dim = j["embed_dim"].get<std::size_t>();
  if (j.contains("inner")) s.inner = std::make_shared<ProcessSpec>(j["inner"].get<ProcessSpec>());
}

/// y(t) = a y(t-1) + eta(t), scaled by sqrt(1 - a^2) so that E[y(n) y(n-k)] = a^|k|.
inline std::vector<double> ar1(double a, std::size_t n, std::size_t burn_in, SeededRng& rng) {
  if (!(std::abs(a) < 1.0)) throw Error(ErrorCode::ParameterOutOfDomain, "AR coefficient must satisfy |a| < 1");
  const double scale = std::sqrt(1.0 - a * a);
  std::vector<double> out;
  out.reserve(n);
  double y = rng.normal();
  for (std::size_t t = 1; t < burn_in + n + 1; ++t) {
    if (t > burn_in) out.push_back(scale * y);
    y = a * y + rng.normal();
  }
  return out;
}

enum class CopulaFamily { Gaussian, Clayton, Gumbel };

namespace detail {

inline double clamp_unit(double u) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - DBL_EPSILON / 2.0;
  return std::clamp(u, lo, hi);
}

inline void check_copula(CopulaFamily family, double param) {
  switch (family) {
    case CopulaFamily::Gaussian:
      if (!(std::abs(param) < 1.0)) throw Error(ErrorCode::ParameterOutOfDomain, "Gaussian copula needs |R12| < 1");
      break;
    case CopulaFamily::Clayton:
      if (!(param >= -1.0) || param == 0.0 || !std::isfinite(param)) {
        throw Error(ErrorCode::ParameterOutOfDomain, "Clayton needs theta in [-1, inf) \\ {0}");
      }
      break;
    case CopulaFamily::Gumbel:
      if (!(param >= 1.0) || !std::isfinite(param)) throw Error(ErrorCode::ParameterOutOfDomain, "Gumbel needs theta >= 1");
      break;
  }
}

// Solve z + (theta - 1) log z = rhs for z >= x; the left side is increasing and
// concave, so Newton from z = x approaches the root monotonically from below.
inline double gumbel_solve(double x, double theta, double rhs) {
  double z = x;
  for (int it = 0; it < 200; ++it) {
    const double f = z + (theta - 1.0) * std::log(z) - rhs;
    const double step = f / (1.0 + (theta - 1.0) / z);
    z -= step;
    if (std::abs(step) <= 1e-15 * z) break;
  }
  return std::max(z, x);
}

}  // namespace detail

/// Conditional-distribution inverse: returns v' with C(v' | u) = w, so that
/// (u, v') is distributed according to the copula when w is uniform and
/// independent of u.
inline double copula_conditional_inverse(CopulaFamily family, double param, double u, double w) {
  detail::check_copula(family, param);
  u = detail::clamp_unit(u);
  w = detail::clamp_unit(w);
  switch (family) {
    case CopulaFamily::Gaussian: {
      const double z = param * std_normal_quantile(u) + std::sqrt(1.0 - param * param) * std_normal_quantile(w);
      return detail::clamp_unit(std_normal_cdf(z));
    }
    case CopulaFamily::Clayton: {
      const double theta = param;
      if (theta == -1.0) return detail::clamp_unit(1.0 - u);
      // v = (1 + u^-theta (w^(-theta/(1+theta)) - 1))^(-1/theta)
      const double inner = std::exp(-theta * std::log(u)) * std::expm1(-theta / (1.0 + theta) * std::log(w));
      if (1.0 + inner <= 0.0) return std::numeric_limits<double>::min();
      return detail::clamp_unit(std::exp(-std::log1p(inner) / theta));
    }
    case CopulaFamily::Gumbel: {
      const double theta = param;
      if (theta == 1.0) return w;
      const double x = -std::log(u);
      const double rhs = x + (theta - 1.0) * std::log(x) - std::log(w);
      const double z = detail::gumbel_solve(x, theta, rhs);
      const double ratio = std::pow(x / z, theta);
      const double y = z * std::pow(std::max(0.0, 1.0 - ratio), 1.0 / theta);
      return detail::clamp_unit(std::exp(-y));
    }
  }
  return w;
}

/// Archimedean pair by the conditional method from given uniforms: (u, C^{-1}(w | u)).
inline std::pair<double, double> archimedean_pair(CopulaFamily family, double theta, double u, double w) {
  if (family == CopulaFamily::Gaussian) {
    throw Error(ErrorCode::InvalidArgument, "archimedean_pair needs the Clayton or Gumbel family");
  }
  return {u, copula_conditional_inverse(family, theta, u, w)};
}

/// Archimedean pair by the Marshall-Olkin frailty construction: Gamma(1/theta)
/// frailty for Clayton, positive 1/theta-stable frailty (Chambers-Mallows-Stuck)
/// for Gumbel. Clayton with theta < 0 has no frailty representation and falls
/// back to the conditional method.
inline std::pair<double, double> archimedean_pair(CopulaFamily family, double theta, SeededRng& rng) {
  detail::check_copula(family, theta);
  if (family == CopulaFamily::Gaussian) {
    throw Error(ErrorCode::InvalidArgument, "archimedean_pair needs the Clayton or Gumbel family");
  }
  if (family == CopulaFamily::Clayton) {
    if (theta < 0.0) {
      const double u = rng.uniform();
      return archimedean_pair(family, theta, u, rng.uniform());
    }
    const double v = rng.gamma(1.0 / theta);
    const double e1 = rng.exponential();
    const double e2 = rng.exponential();
    return {detail::clamp_unit(std::exp(-std::log1p(e1 / v) / theta)),
            detail::clamp_unit(std::exp(-std::log1p(e2 / v) / theta))};
  }
  if (theta == 1.0) return {rng.uniform(), rng.uniform()};
  const double alpha = 1.0 / theta;
  const double angle = std::numbers::pi * rng.uniform();
  const double w = rng.exponential();
  const double v = std::sin(alpha * angle) / std::pow(std::sin(angle), 1.0 / alpha) *
                   std::pow(std::sin((1.0 - alpha) * angle) / w, (1.0 - alpha) / alpha);
  const double e1 = rng.exponential();
  const double e2 = rng.exponential();
  return {detail::clamp_unit(std::exp(-std::pow(e1 / v, alpha))), detail::clamp_unit(std::exp(-std::pow(e2 / v, alpha)))};
}

/// Bivariate series with AR(1)-colored standard normal marginals coupled by a
/// copula. The first marginal is kept as is (u' = u); the second is
/// v' = C^{-1}(v | u) using the independent colored uniform v.
inline TimeSeries colored_copula_process(CopulaFamily family, double param, double a, std::size_t n,
                                         SeededRng& rng, std::size_t burn_in = kDefaultBurnIn) {
  detail::check_copula(family, param);
  const auto y1 = ar1(a, n, burn_in, rng);
  const auto y2 = ar1(a, n, burn_in, rng);
  Matrix x(2, static_cast<Eigen::Index>(n));
  const double c = std::sqrt(1.0 - param * param);
  for (std::size_t t = 0; t < n; ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    x(0, col) = y1[t];
    if (family == CopulaFamily::Gaussian) {
      // Phi^{-1}(C^{-1}(Phi(y2) | Phi(y1))) in closed form
      x(1, col) = param * y1[t] + c * y2[t];
    } else {
      const double u = std_normal_cdf(y1[t]);
      const double v = std_normal_cdf(y2[t]);
      x(1, col) = std_normal_quantile(copula_conditional_inverse(family, param, u, v));
    }
  }
  return TimeSeries(std::move(x));
}

/// x_a(n) = y(n delta + a), a = 1..p, n = 1..floor((len - p) / delta), with y
/// indexed from 1.
inline TimeSeries embed(const std::vector<double>& y, std::size_t delta, std::size_t p) {
  if (delta < 1 || p < 1) throw Error(ErrorCode::InvalidArgument, "embedding needs delta >= 1 and p >= 1");
  if (y.size() < delta + p) throw Error(ErrorCode::InsufficientLength, "series too short for one embedded sample");
  const std::size_t count = (y.size() - p) / delta;
  Matrix x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(count));
  for (std::size_t n = 1; n <= count; ++n) {
    for (std::size_t a = 1; a <= p; ++a) {
      x(static_cast<Eigen::Index>(a - 1), static_cast<Eigen::Index>(n - 1)) = y[n * delta + a - 1];
    }
  }
  return TimeSeries(std::move(x));
}

/// Stationary variance of y = phi1 y(-1) + phi2 y(-2) + e, Var e = sigma2 (Yule-Walker).
inline double ar2_stationary_variance(double phi1, double phi2, double sigma2) {
  const double den = (1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1);
  if (!(den > 0.0)) throw Error(ErrorCode::ParameterOutOfDomain, "AR(2) coefficients are not stationary");
  return sigma2 * (1.0 - phi2) / den;
}

namespace detection {

inline constexpr double kCarrierAr = 0.8;
inline constexpr double kCorruptionAr1 = 0.8;
inline constexpr double kCorruptionAr2 = -0.5;

/// E[x^2] of the unscaled AR(1) carrier with unit innovations.
inline double carrier_variance() { return 1.0 / (1.0 - kCarrierAr * kCarrierAr); }

/// E[b^2] of the AR(2) corruption with unit-scale Laplace innovations (variance 2).
inline double corruption_variance() { return ar2_stationary_variance(kCorruptionAr1, kCorruptionAr2, 2.0); }

inline double snr(double k) { return k * k * corruption_variance() / carrier_variance(); }

inline double amplitude_for_snr_db(double snr_db) {
  return std::sqrt(std::pow(10.0, snr_db / 10.0) * carrier_variance() / corruption_variance());
}

}  // namespace detection

struct DetectionSample {
  std::vector<double> y;
  double snr = 0.0;  ///< k^2 E[b^2] / E[x^2] from stationary variances
  double snr_db = -INFINITY;
};

/// y(n) = x(n) + k b(n): x Gaussian AR(1) 0.8, b AR(2) (0.8, -0.5) driven by
/// Laplace noise; started at x(1) = eta(1), b(1) = eps(1), first burn_in dropped.
inline DetectionSample detection_mixture(double k, std::size_t n, SeededRng& rng,
                                         std::size_t burn_in = kDefaultBurnIn) {
  DetectionSample out;
  out.y.reserve(n);
  double x = 0.0;
  double b1 = 0.0;  // b(t-1)
  double b2 = 0.0;  // b(t-2)
  for (std::size_t t = 0; t < burn_in + n; ++t) {
    x = detection::kCarrierAr * x + rng.normal();
    const double b = detection::kCorruptionAr1 * b1 + detection::kCorruptionAr2 * b2 + rng.laplace();
    b2 = b1;
    b1 = b;
    if (t >= burn_in) out.y.push_back(x + k * b);
  }
  out.snr = detection::snr(k);
  out.snr_db = out.snr > 0.0 ? 10.0 * std::log10(out.snr) : -INFINITY;
  return out;
}

inline CopulaFamily copula_of(ProcessFamily f) {
  switch (f) {
    case ProcessFamily::GaussianCopula: return CopulaFamily::Gaussian;
    case ProcessFamily::ClaytonCopula: return CopulaFamily::Clayton;
    case ProcessFamily::GumbelCopula: return CopulaFamily::Gumbel;
    default: throw Error(ErrorCode::InvalidArgument, "not a copula family");
  }
}

/// One realization of `spec` with n time steps (for Embedded: n embedded vectors).
inline TimeSeries generate(const ProcessSpec& spec, std::size_t n, SeededRng& rng) {
  spec.validate();
  switch (spec.family) {
    case ProcessFamily::IIDGaussian: {
      Matrix x(static_cast<Eigen::Index>(spec.dim), static_cast<Eigen::Index>(n));
      for (Eigen::Index t = 0; t < x.cols(); ++t) {
        for (Eigen::Index a = 0; a < x.rows(); ++a) x(a, t) = rng.normal();
      }
      return TimeSeries(std::move(x));
    }
    case ProcessFamily::AR1Gaussian: return TimeSeries::scalar(ar1(spec.a, n, spec.burn_in, rng));
    case ProcessFamily::GaussianCopula: return colored_copula_process(CopulaFamily::Gaussian, spec.r12, spec.a, n, rng, spec.burn_in);
    case ProcessFamily::ClaytonCopula:
    case ProcessFamily::GumbelCopula:
      return colored_copula_process(copula_of(spec.family), spec.theta, spec.a, n, rng, spec.burn_in);
    case ProcessFamily::DetectionMixture: {
      const double k = spec.k ? *spec.k : (spec.snr_db ? detection::amplitude_for_snr_db(*spec.snr_db) : 0.0);
      return TimeSeries::scalar(detection_mixture(k, n, rng, spec.burn_in).y);
    }
    case ProcessFamily::Embedded: {
      const std::size_t len = n * spec.delta + spec.embed_dim;
      const TimeSeries y = generate(*spec.inner, len, rng);
      if (y.dim() != 1) throw Error(ErrorCode::ModeDimensionMismatch, "embedding needs a scalar inner process");
      std::vector<double> values(y.data().data(), y.data().data() + y.size());
      return embed(values, spec.delta, spec.embed_dim);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown process family");
}

/// True lag covariances S(0..max_lag) of the Gaussian families, for
/// calibration with a correctly specified model; nullopt otherwise.
inline std::optional<LagCovarianceSeq> known_covariance(const ProcessSpec& spec, std::size_t max_lag) {
  std::vector<Matrix> lags;
  switch (spec.family) {
    case ProcessFamily::IIDGaussian:
      lags.push_back(Matrix::Identity(static_cast<Eigen::Index>(spec.dim), static_cast<Eigen::Index>(spec.dim)));
      for (std::size_t tau = 1; tau <= max_lag; ++tau) lags.push_back(Matrix::Zero(lags[0].rows(), lags[0].cols()));
      break;
    case ProcessFamily::AR1Gaussian:
      for (std::size_t tau = 0; tau <= max_lag; ++tau) {
        lags.push_back(Matrix::Constant(1, 1, std::pow(spec.a, static_cast<double>(tau))));
      }
      break;
    case ProcessFamily::GaussianCopula: {
      Matrix base(2, 2);
      base << 1.0, spec.r12, spec.r12, 1.0;
      for (std::size_t tau = 0; tau <= max_lag; ++tau) lags.push_back(std::pow(spec.a, static_cast<double>(tau)) * base);
      break;
    }
    default: return std::nullopt;
  }
  return LagCovarianceSeq::from_lags(std::move(lags));
}

/// C(0..max_lag) of a scalar Gaussian family, for the embedding formulas.
inline std::optional<EmbeddingCorrelation> known_correlation(const ProcessSpec& scalar_spec, std::size_t delta,
                                                            std::size_t max_lag) {
  EmbeddingCorrelation out;
  out.delta = delta;
  switch (scalar_spec.family) {
    case ProcessFamily::IIDGaussian:
      if (scalar_spec.dim != 1) return std::nullopt;
      out.c.assign(max_lag + 1, 0.0);
      out.c[0] = 1.0;
      return out;
    case ProcessFamily::AR1Gaussian:
      for (std::size_t k = 0; k <= max_lag; ++k) out.c.push_back(std::pow(scalar_spec.a, static_cast<double>(k)));
      return out;
    default: return std::nullopt;
  }
}

}  // namespace mardia
