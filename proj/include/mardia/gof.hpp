#pragma once

// Goodness-of-fit helpers for simulation checks: one-sample Kolmogorov-Smirnov
// and Kendall's tau.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "mardia/error.hpp"

namespace mardia {

/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
template <class Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "KS needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace detail {

// Stephens' finite-n scaling of the asymptotic distribution.
inline double ks_scale(std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return rn + 0.12 + 0.11 / rn;
}

}  // namespace detail

inline double ks_p_value(double d, std::size_t n) { return kolmogorov_survival(detail::ks_scale(n) * d); }

/// Smallest D with p-value <= alpha at sample size n.
inline double ks_critical_value(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  double lo = 0.2, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_survival(mid) > alpha ? lo : hi) = mid;
  }
  return hi / detail::ks_scale(n);
}

/// Kendall's tau-a in O(n log n) (Knight): count discordant pairs as the
/// inversions left in y after sorting by x. Assumes no ties.
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "kendall_tau needs two equal-length samples");
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> v(x.size()), buf(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) v[i] = y[idx[i]];
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += mid - i;
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  const double n = static_cast<double>(x.size());
  return 1.0 - 4.0 * static_cast<double>(swaps) / (n * (n - 1.0));
}

}  // namespace mardia
