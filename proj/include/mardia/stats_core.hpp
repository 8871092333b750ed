#pragma once

// Sample statistics for p-variate time series: lag covariances, precision
// matrix, the quadratic forms A_ij = x(i)^T G x(j) and Mardia's kurtosis.
//
// Time indices are zero-based throughout (column n of the p x N matrix is the
// sample x(n)).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mardia/error.hpp"

namespace mardia {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Centering {
  SubtractMean,    ///< remove the per-component sample mean first (default)
  AssumeZeroMean,  ///< use the raw samples as given
};

/// p x N real sample matrix; one column per time step.
class TimeSeries {
 public:
  TimeSeries() = default;

  explicit TimeSeries(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw Error(ErrorCode::InvalidArgument, "time series needs p >= 1 and N >= 1");
    }
    if (!data_.allFinite()) {
      throw Error(ErrorCode::NonFinite, "time series contains a non-finite entry");
    }
  }

  /// Scalar series (p = 1).
  static TimeSeries scalar(const std::vector<double>& y) {
    Matrix m(1, static_cast<Eigen::Index>(y.size()));
    for (std::size_t n = 0; n < y.size(); ++n) m(0, static_cast<Eigen::Index>(n)) = y[n];
    return TimeSeries(std::move(m));
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(data_.rows()); }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(data_.cols()); }
  [[nodiscard]] const Matrix& data() const { return data_; }
  [[nodiscard]] auto sample(std::size_t n) const { return data_.col(static_cast<Eigen::Index>(n)); }

  [[nodiscard]] TimeSeries component(std::size_t a) const {
    if (a >= dim()) throw Error(ErrorCode::IndexOutOfRange, "component index out of range");
    return TimeSeries(Matrix(data_.row(static_cast<Eigen::Index>(a))));
  }

  [[nodiscard]] TimeSeries centered() const {
    Vector mean = data_.rowwise().mean();
    return TimeSeries(Matrix(data_.colwise() - mean));
  }

  /// Any nonsingular linear map x -> A x.
  [[nodiscard]] TimeSeries transformed(const Matrix& a) const { return TimeSeries(Matrix(a * data_)); }

 private:
  Matrix data_;
};

namespace detail {

// (1/N) sum_{n=tau}^{N-1} x(n) x(n-tau)^T with a fixed loop order, so the
// tau = 0 result is bit-identical to the sample covariance.
inline Matrix lag_product(const Matrix& x, std::size_t tau) {
  const Eigen::Index p = x.rows();
  const Eigen::Index n_samples = x.cols();
  const auto t = static_cast<Eigen::Index>(tau);
  Matrix s = Matrix::Zero(p, p);
  for (Eigen::Index n = t; n < n_samples; ++n) {
    for (Eigen::Index b = 0; b < p; ++b) {
      const double xb = x(b, n - t);
      for (Eigen::Index a = 0; a < p; ++a) s(a, b) += x(a, n) * xb;
    }
  }
  s /= static_cast<double>(n_samples);
  return s;
}

inline const Matrix& maybe_center(const TimeSeries& x, Centering centering, Matrix& storage) {
  if (centering == Centering::AssumeZeroMean) return x.data();
  if (x.size() < 2) {
    throw Error(ErrorCode::InsufficientLength, "centering needs at least two samples");
  }
  Vector mean = x.data().rowwise().mean();
  storage = x.data().colwise() - mean;
  return storage;
}

}  // namespace detail

/// S-hat = (1/N) sum_k x(k) x(k)^T; normalized by N, not N - 1.
inline Matrix sample_covariance(const TimeSeries& x, Centering centering = Centering::SubtractMean) {
  Matrix storage;
  return detail::lag_product(detail::maybe_center(x, centering, storage), 0);
}

/// Lag covariances S(0..L) of a stationary p-variate process.
struct LagCovarianceSeq {
  std::vector<Matrix> lags;  ///< lags[tau] = S(tau), S_ab(tau) = E[x_a(n) x_b(n - tau)]
  Matrix omega_diag;         ///< Omega_ab = sum_tau S_ab(tau)^2 over the stored lags

  [[nodiscard]] std::size_t dim() const { return lags.empty() ? 0 : static_cast<std::size_t>(lags[0].rows()); }
  [[nodiscard]] std::size_t max_lag() const { return lags.empty() ? 0 : lags.size() - 1; }

  /// S(tau) for any signed tau, using S(-tau) = S(tau)^T and zero past L.
  [[nodiscard]] Matrix at(long tau) const {
    const auto mag = static_cast<std::size_t>(tau < 0 ? -tau : tau);
    if (mag >= lags.size()) return Matrix::Zero(lags[0].rows(), lags[0].cols());
    return tau < 0 ? Matrix(lags[mag].transpose()) : lags[mag];
  }

  [[nodiscard]] double entry(std::size_t a, std::size_t b, long tau) const {
    const auto mag = static_cast<std::size_t>(tau < 0 ? -tau : tau);
    if (mag >= lags.size()) return 0.0;
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    return tau < 0 ? lags[mag](ib, ia) : lags[mag](ia, ib);
  }

  /// Builds the sequence from explicit matrices and fills omega_diag.
  static LagCovarianceSeq from_lags(std::vector<Matrix> lags) {
    if (lags.empty()) throw Error(ErrorCode::InvalidArgument, "empty lag covariance sequence");
    LagCovarianceSeq seq;
    seq.omega_diag = Matrix::Zero(lags[0].rows(), lags[0].cols());
    for (const auto& s : lags) {
      if (s.rows() != lags[0].rows() || s.cols() != lags[0].cols()) {
        throw Error(ErrorCode::InvalidArgument, "lag matrices must share one p x p shape");
      }
      seq.omega_diag += s.cwiseProduct(s);
    }
    seq.lags = std::move(lags);
    return seq;
  }
};

inline LagCovarianceSeq lag_covariance(const TimeSeries& x, std::size_t max_lag,
                                       Centering centering = Centering::SubtractMean) {
  if (max_lag >= x.size()) {
    throw Error(ErrorCode::LagOutOfRange,
                "max lag " + std::to_string(max_lag) + " must be below N = " + std::to_string(x.size()));
  }
  Matrix storage;
  const Matrix& data = detail::maybe_center(x, centering, storage);
  std::vector<Matrix> lags;
  lags.reserve(max_lag + 1);
  for (std::size_t tau = 0; tau <= max_lag; ++tau) lags.push_back(detail::lag_product(data, tau));
  return LagCovarianceSeq::from_lags(std::move(lags));
}

struct PrecisionMatrix {
  Matrix g;
  double source_det = 0.0;

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(g.rows()); }
};

/// G = S^{-1}. Closed-form cofactors for p <= 2, LU for larger p.
inline PrecisionMatrix precision(const Matrix& s0) {
  if (s0.rows() != s0.cols() || s0.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "precision needs a square matrix");
  }
  if (!s0.allFinite()) throw Error(ErrorCode::NonFinite, "covariance has a non-finite entry");
  const Eigen::Index p = s0.rows();
  const double scale = s0.cwiseAbs().maxCoeff();
  if ((s0 - s0.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::InvalidArgument, "covariance matrix is not symmetric");
  }

  PrecisionMatrix out;
  if (p == 1) {
    out.source_det = s0(0, 0);
  } else if (p == 2) {
    out.source_det = s0(0, 0) * s0(1, 1) - s0(0, 1) * s0(1, 0);
  } else {
    out.source_det = s0.fullPivLu().determinant();
  }
  if (scale == 0.0 || std::abs(out.source_det) < 1e-12 * std::pow(scale, static_cast<double>(p))) {
    throw Error(ErrorCode::SingularCovariance, "covariance matrix is numerically singular");
  }

  if (p == 1) {
    out.g = Matrix::Constant(1, 1, 1.0 / s0(0, 0));
  } else if (p == 2) {
    out.g.resize(2, 2);
    const double inv = 1.0 / out.source_det;
    out.g(0, 0) = s0(1, 1) * inv;
    out.g(1, 1) = s0(0, 0) * inv;
    out.g(0, 1) = -s0(0, 1) * inv;
    out.g(1, 0) = -s0(1, 0) * inv;
  } else {
    out.g = s0.fullPivLu().inverse();
    out.g = 0.5 * (out.g + out.g.transpose()).eval();
  }
  return out;
}

/// A_ij = x(i)^T G x(j).
inline double quadratic_form(const TimeSeries& x, const PrecisionMatrix& g, std::size_t i, std::size_t j) {
  if (i >= x.size() || j >= x.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "time index out of range");
  }
  if (g.dim() != x.dim()) throw Error(ErrorCode::InvalidArgument, "precision / series dimension mismatch");
  return x.sample(i).dot(g.g * x.sample(j));
}

/// Mardia's sample kurtosis (1/N) sum_n (x(n)^T S-hat^{-1} x(n))^2.
inline double mardia_statistic(const TimeSeries& x, Centering centering = Centering::SubtractMean) {
  if (x.size() < x.dim() + 1) {
    throw Error(ErrorCode::InsufficientLength, "Mardia statistic needs N >= p + 1");
  }
  Matrix storage;
  const Matrix& data = detail::maybe_center(x, centering, storage);
  const PrecisionMatrix g = precision(detail::lag_product(data, 0));
  const Matrix gx = g.g * data;
  double acc = 0.0;
  for (Eigen::Index n = 0; n < data.cols(); ++n) {
    const double q = data.col(n).dot(gx.col(n));
    acc += q * q;
  }
  return acc / static_cast<double>(data.cols());
}

/// 2-norm condition number of a symmetric matrix.
inline double condition_number(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.cwiseAbs().minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  return lo == 0.0 ? INFINITY : hi / lo;
}

}  // namespace mardia
