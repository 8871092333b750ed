#pragma once

// Brute-force Gaussian moment machinery. Higher moments of a zero-mean
// stationary Gaussian vector process are expanded over perfect matchings
// (Isserlis/Wick); expectations of products of A_ij = x(i)^T G x(j) follow by
// summing over component assignments. A faster contraction route evaluates
// the same sums matching by matching as products of traces of G S(tau) chains.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mardia/data_gen.hpp"
#include "mardia/error.hpp"
#include "mardia/parallel.hpp"
#include "mardia/stats_core.hpp"

namespace mardia::oracle {

/// One factor x_space(time) of a moment; `space` is a zero-based component.
struct MetaIndex {
  long time = 0;
  std::size_t space = 0;
};

/// S_ab(tau) = E[x_a(n) x_b(n - tau)].
using CovarianceFn = std::function<double(std::size_t, std::size_t, long)>;

inline CovarianceFn covariance_fn(const LagCovarianceSeq& seq) {
  return [&seq](std::size_t a, std::size_t b, long tau) { return seq.entry(a, b, tau); };
}

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// (2r)! / (2^r r!) perfect matchings of 2r slots, exact.
inline std::uint64_t count_pairings(unsigned r) {
  if (r > 8) throw Error(ErrorCode::Overflow, "pairing count supported up to r = 8");
  std::uint64_t out = 1;
  for (std::uint64_t k = 3; k < 2 * static_cast<std::uint64_t>(r); k += 2) out *= k;
  return out;
}

using Matching = std::vector<std::pair<std::uint8_t, std::uint8_t>>;

namespace detail {

template <class F>
void match_rec(std::uint32_t free_mask, Matching& current, F& f) {
  if (free_mask == 0) {
    f(std::as_const(current));
    return;
  }
  const int first = std::countr_zero(free_mask);
  const std::uint32_t rest = free_mask & ~(1u << first);
  for (std::uint32_t m = rest; m != 0; m &= m - 1) {
    const int second = std::countr_zero(m);
    current.emplace_back(static_cast<std::uint8_t>(first), static_cast<std::uint8_t>(second));
    match_rec(rest & ~(1u << second), current, f);
    current.pop_back();
  }
}

}  // namespace detail

/// Visits every perfect matching of `slots` labeled slots exactly once, pairing
/// the smallest unpaired slot with each remaining slot in increasing order.
template <class F>
void for_each_matching(std::size_t slots, F&& f) {
  if (slots % 2 != 0 || slots > 32) throw Error(ErrorCode::InvalidArgument, "matchings need an even slot count <= 32");
  Matching current;
  current.reserve(slots / 2);
  const std::uint32_t all = slots == 32 ? 0xFFFFFFFFu : ((1u << slots) - 1u);
  detail::match_rec(all, current, f);
}

namespace detail {

inline void isserlis_rec(std::span<const MetaIndex> idx, std::uint32_t free_mask, double product,
                         const CovarianceFn& cov, CompensatedSum& acc) {
  if (free_mask == 0) {
    acc.add(product);
    return;
  }
  const int first = std::countr_zero(free_mask);
  const std::uint32_t rest = free_mask & ~(1u << first);
  const MetaIndex& a = idx[static_cast<std::size_t>(first)];
  for (std::uint32_t m = rest; m != 0; m &= m - 1) {
    const int second = std::countr_zero(m);
    const MetaIndex& b = idx[static_cast<std::size_t>(second)];
    const double c = cov(a.space, b.space, a.time - b.time);
    if (c == 0.0) continue;
    isserlis_rec(idx, rest & ~(1u << second), product * c, cov, acc);
  }
}

}  // namespace detail

/// E[prod_k x_{space_k}(time_k)] for a zero-mean Gaussian process: the sum over
/// all perfect matchings of the products of pairwise covariances.
inline double isserlis_moment(std::span<const MetaIndex> indices, const CovarianceFn& cov) {
  if (indices.size() > 16) throw Error(ErrorCode::InvalidArgument, "moments above order 16 are not supported");
  if (indices.size() % 2 != 0) return 0.0;
  if (indices.empty()) return 1.0;
  CompensatedSum acc;
  detail::isserlis_rec(indices, (1u << indices.size()) - 1u, 1.0, cov, acc);
  return acc.value();
}

/// Time labels (alpha, beta) of one factor A_{alpha beta}.
using APair = std::pair<long, long>;

inline constexpr double kTermBudget = 1e9;

/// E[prod_l A_{alpha_l beta_l}] by literal enumeration: every component
/// assignment (r_l, c_l) weighted by prod G_{r_l c_l}, times the Isserlis
/// moment of the 2L meta-indices. Cost p^{2L} (2L-1)!!.
inline double expected_A_product(std::span<const APair> pairs, const CovarianceFn& cov, const Matrix& g) {
  const std::size_t L = pairs.size();
  if (L > 8) throw Error(ErrorCode::InvalidArgument, "at most eight A factors");
  const auto p = static_cast<std::size_t>(g.rows());
  const double terms = std::pow(static_cast<double>(p), 2.0 * static_cast<double>(L)) *
                       static_cast<double>(count_pairings(static_cast<unsigned>(L)));
  if (terms > kTermBudget) throw Error(ErrorCode::BudgetExceeded, "brute-force term count exceeds 1e9");

  std::vector<MetaIndex> idx(2 * L);
  for (std::size_t l = 0; l < L; ++l) {
    idx[2 * l].time = pairs[l].first;
    idx[2 * l + 1].time = pairs[l].second;
  }
  std::vector<std::size_t> digit(2 * L, 0);
  CompensatedSum acc;
  for (;;) {
    double weight = 1.0;
    for (std::size_t l = 0; l < L && weight != 0.0; ++l) {
      weight *= g(static_cast<Eigen::Index>(digit[2 * l]), static_cast<Eigen::Index>(digit[2 * l + 1]));
    }
    if (weight != 0.0) {
      for (std::size_t s = 0; s < 2 * L; ++s) idx[s].space = digit[s];
      acc.add(weight * isserlis_moment(idx, cov));
    }
    std::size_t s = 0;
    while (s < 2 * L && ++digit[s] == p) digit[s++] = 0;
    if (s == 2 * L) break;
  }
  return acc.value();
}

/// Contraction route for a fixed product shape. Factors are given as pairs of
/// symbolic time labels; for each matching, summing over components collapses
/// every closed walk (G edge, matching edge, G edge, ...) into
/// tr(G S(d_1) G S(d_2) ...), where d_k is the time difference across the k-th
/// matching edge. Matchings with the same multiset of walks are merged, so the
/// per-evaluation cost is the number of distinct walk patterns.
class ContractedProduct {
 public:
  using Step = std::pair<int, int>;  ///< matching edge from label to label
  using Cycle = std::vector<Step>;
  using Form = std::vector<Cycle>;
  using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

  explicit ContractedProduct(std::vector<std::pair<int, int>> label_pairs) : label_pairs_(std::move(label_pairs)) {
    const std::size_t L = label_pairs_.size();
    if (L < 1 || L > 8) throw Error(ErrorCode::InvalidArgument, "contraction needs 1..8 factors");
    std::vector<int> label(2 * L);
    for (std::size_t l = 0; l < L; ++l) {
      label[2 * l] = label_pairs_[l].first;
      label[2 * l + 1] = label_pairs_[l].second;
      labels_ = std::max({labels_, label_pairs_[l].first + 1, label_pairs_[l].second + 1});
    }
    std::map<Form, std::uint64_t> grouped;
    std::vector<int> partner(2 * L);
    std::vector<bool> seen(2 * L);
    for_each_matching(2 * L, [&](const Matching& m) {
      for (const auto& [a, b] : m) {
        partner[a] = b;
        partner[b] = a;
      }
      std::fill(seen.begin(), seen.end(), false);
      Form form;
      for (std::size_t start = 0; start < 2 * L; ++start) {
        if (seen[start]) continue;
        Cycle cycle;
        std::size_t cur = start;
        do {
          const std::size_t across = cur ^ 1u;  // the other slot of the same A factor
          seen[cur] = seen[across] = true;
          const auto next = static_cast<std::size_t>(partner[across]);
          cycle.emplace_back(label[across], label[next]);
          cur = next;
        } while (cur != start);
        form.push_back(canonical(cycle));
      }
      std::sort(form.begin(), form.end());
      ++grouped[form];
    });
    forms_.assign(grouped.begin(), grouped.end());
  }

  [[nodiscard]] std::size_t distinct_forms() const { return forms_.size(); }
  [[nodiscard]] const std::vector<std::pair<Form, std::uint64_t>>& forms() const { return forms_; }
  [[nodiscard]] int label_count() const { return labels_; }

  /// W(d) = G S(d) for every d the evaluation may need.
  class Context {
   public:
    Context(const LagCovarianceSeq& cov, const Matrix& g, long max_span) : offset_(max_span) {
      ws_.reserve(static_cast<std::size_t>(2 * max_span + 1));
      for (long d = -max_span; d <= max_span; ++d) ws_.emplace_back(g * cov.at(d));
    }
    [[nodiscard]] const Small& w(long d) const { return ws_[static_cast<std::size_t>(d + offset_)]; }
    [[nodiscard]] long max_span() const { return offset_; }

   private:
    long offset_;
    std::vector<Small> ws_;
  };

  /// Value for concrete times (times[label]); all pairwise differences must lie
  /// within the context's span.
  [[nodiscard]] double evaluate(std::span<const long> times, const Context& ctx) const {
    CompensatedSum acc;
    for (const auto& [form, count] : forms_) {
      double term = static_cast<double>(count);
      for (const auto& cycle : form) {
        if (cycle.size() == 1) {
          term *= ctx.w(times[cycle[0].first] - times[cycle[0].second]).trace();
          continue;
        }
        Small prod = ctx.w(times[cycle[0].first] - times[cycle[0].second]);
        for (std::size_t k = 1; k + 1 < cycle.size(); ++k) {
          prod = (prod * ctx.w(times[cycle[k].first] - times[cycle[k].second])).eval();
        }
        const Small& last = ctx.w(times[cycle.back().first] - times[cycle.back().second]);
        term *= (prod.cwiseProduct(last.transpose())).sum();
        if (term == 0.0) break;
      }
      acc.add(term);
    }
    return acc.value();
  }

 private:
  // Smallest representative among all rotations of the walk and of its reverse
  // (reversal transposes every S, i.e. swaps each step's labels).
  static Cycle canonical(const Cycle& c) {
    Cycle rev;
    rev.reserve(c.size());
    for (auto it = c.rbegin(); it != c.rend(); ++it) rev.emplace_back(it->second, it->first);
    Cycle best = c;
    for (const Cycle* base : std::initializer_list<const Cycle*>{&c, &rev}) {
      for (std::size_t k = 0; k < base->size(); ++k) {
        Cycle r(base->begin() + static_cast<long>(k), base->end());
        r.insert(r.end(), base->begin(), base->begin() + static_cast<long>(k));
        if (r < best) best = std::move(r);
      }
    }
    return best;
  }

  std::vector<std::pair<int, int>> label_pairs_;
  std::vector<std::pair<Form, std::uint64_t>> forms_;
  int labels_ = 0;
};

enum class Route { Brute, Contracted };

/// Leading-order assembly of E[B_p] from the four term families of the
/// second-order expansion of the sample precision matrix:
///   (6/N) sum_n E[A_nn^2] - (8/N^2) sum_{n,i} E[A_nn A_ni^2]
///   + (1/N^3) sum_{n,i,j} E[A_ni^2 A_nj^2] + (2/N^3) sum_{n,j,k} E[A_nn A_nj A_jk A_kn].
/// Stationarity reduces each sum to time offsets weighted by how many
/// start times fit in 0..N-1.
struct MeanAssembly {
  double value = 0.0;
  double term1 = 0.0, term2 = 0.0, term3 = 0.0, term4 = 0.0;
};

inline MeanAssembly assembled_mean(const LagCovarianceSeq& cov, std::size_t n, Route route = Route::Contracted) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "assembly needs n >= 2");
  const Matrix g = precision(cov.lags[0]).g;
  const auto nn = static_cast<long>(n);
  const double N = static_cast<double>(n);
  const auto cfn = covariance_fn(cov);

  const std::vector<std::pair<int, int>> shape1 = {{0, 0}, {0, 0}};
  const std::vector<std::pair<int, int>> shape2 = {{0, 0}, {0, 1}, {0, 1}};
  const std::vector<std::pair<int, int>> shape3 = {{0, 1}, {0, 1}, {0, 2}, {0, 2}};
  const std::vector<std::pair<int, int>> shape4 = {{0, 0}, {0, 1}, {1, 2}, {2, 0}};

  std::optional<ContractedProduct::Context> ctx;
  std::vector<ContractedProduct> contracted;
  if (route == Route::Contracted) {
    ctx.emplace(cov, g, nn - 1);
    for (const auto* s : {&shape1, &shape2, &shape3, &shape4}) contracted.emplace_back(*s);
  }
  auto expect = [&](std::size_t which, const std::vector<std::pair<int, int>>& shape, std::span<const long> t) {
    if (route == Route::Contracted) return contracted[which].evaluate(t, *ctx);
    std::vector<APair> pairs;
    for (const auto& [a, b] : shape) pairs.emplace_back(t[static_cast<std::size_t>(a)], t[static_cast<std::size_t>(b)]);
    return expected_A_product(pairs, cfn, g);
  };

  MeanAssembly out;
  const long zero[1] = {0};
  out.term1 = 6.0 * expect(0, shape1, zero);

  CompensatedSum t2;
  for (long d = -(nn - 1); d <= nn - 1; ++d) {
    const long t[2] = {0, d};
    t2.add((N - static_cast<double>(std::abs(d))) * expect(1, shape2, t));
  }
  out.term2 = -8.0 / (N * N) * t2.value();

  CompensatedSum t3, t4;
  for (long d1 = -(nn - 1); d1 <= nn - 1; ++d1) {
    for (long d2 = -(nn - 1); d2 <= nn - 1; ++d2) {
      const long span = std::max({0L, d1, d2}) - std::min({0L, d1, d2});
      if (span >= nn) continue;
      const double w = N - static_cast<double>(span);
      const long t[3] = {0, d1, d2};
      t3.add(w * expect(2, shape3, t));
      t4.add(w * expect(3, shape4, t));
    }
  }
  out.term3 = t3.value() / (N * N * N);
  out.term4 = 2.0 * t4.value() / (N * N * N);
  out.value = out.term1 + out.term2 + out.term3 + out.term4;
  return out;
}

/// A product type for p = 1: a sorted multiset of label pairs, i.e. a product
/// of covariances S(label_a - label_b).
using ProductType = std::vector<std::pair<int, int>>;

/// Exact integer coefficients of the Isserlis expansion of a scalar moment whose
/// factors carry the given time labels, grouped by product type.
inline std::map<ProductType, std::uint64_t> group_scalar_moment(const std::vector<int>& labels) {
  if (labels.size() % 2 != 0 || labels.size() > 16) {
    throw Error(ErrorCode::InvalidArgument, "grouping needs an even number of labels <= 16");
  }
  std::map<ProductType, std::uint64_t> out;
  for_each_matching(labels.size(), [&](const Matching& m) {
    ProductType t;
    t.reserve(m.size());
    for (const auto& [a, b] : m) t.emplace_back(std::minmax(labels[a], labels[b]));
    std::sort(t.begin(), t.end());
    ++out[t];
  });
  return out;
}

/// Sorted coefficient multiset of a grouping.
inline std::vector<std::uint64_t> coefficients(const std::map<ProductType, std::uint64_t>& grouped) {
  std::vector<std::uint64_t> out;
  for (const auto& [_, c] : grouped) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

struct MonteCarloMoments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;  ///< jackknife
  std::size_t replications = 0;
};

/// Sample mean and variance with the jackknife standard error of the variance.
inline MonteCarloMoments summarize(const std::vector<double>& values) {
  const std::size_t m = values.size();
  if (m < 3) throw Error(ErrorCode::InvalidArgument, "need at least three replications");
  const double M = static_cast<double>(m);
  CompensatedSum s1;
  for (double v : values) s1.add(v);
  const double mean = s1.value() / M;
  CompensatedSum s2;
  for (double v : values) s2.add((v - mean) * (v - mean));
  const double ss = s2.value();

  MonteCarloMoments out;
  out.replications = m;
  out.mean = mean;
  out.variance = ss / (M - 1.0);
  out.mean_se = std::sqrt(out.variance / M);
  // leave-one-out: SS_(i) = SS - (M / (M - 1)) (v_i - mean)^2
  std::vector<double> loo(m);
  CompensatedSum lsum;
  for (std::size_t i = 0; i < m; ++i) {
    const double dev = values[i] - mean;
    loo[i] = (ss - M / (M - 1.0) * dev * dev) / (M - 2.0);
    lsum.add(loo[i]);
  }
  const double lmean = lsum.value() / M;
  CompensatedSum jk;
  for (double v : loo) jk.add((v - lmean) * (v - lmean));
  out.variance_se = std::sqrt((M - 1.0) / M * jk.value());
  return out;
}

/// Empirical moments of B_p over `replications` seeded realizations of a
/// Gaussian process; replication r uses stream r of `seed`.
inline MonteCarloMoments mc_null_moments(const ProcessSpec& spec, std::size_t n, std::size_t replications,
                                         std::uint64_t seed, Centering centering = Centering::SubtractMean,
                                         std::size_t threads = 0) {
  spec.validate();
  const bool gaussian = spec.family == ProcessFamily::IIDGaussian || spec.family == ProcessFamily::AR1Gaussian ||
                        spec.family == ProcessFamily::GaussianCopula ||
                        (spec.family == ProcessFamily::Embedded && spec.inner &&
                         (spec.inner->family == ProcessFamily::AR1Gaussian ||
                          spec.inner->family == ProcessFamily::IIDGaussian));
  if (!gaussian) throw Error(ErrorCode::InvalidArgument, "moment Monte Carlo needs a Gaussian process");
  std::vector<double> values(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    SeededRng rng(seed, r);
    values[r] = mardia_statistic(generate(spec, n, rng), centering);
  });
  return summarize(values);
}

}  // namespace mardia::oracle
