#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "symbatch/core/error.hpp"

namespace symbatch {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& xi : x) xi *= alpha;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ConfigError("Matrix: data size " + std::to_string(data_.size()) + " != " +
                        std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// YᵀY for an N×d matrix Y; the result is d×d.
inline Matrix gram(const Matrix& y) {
  const std::size_t d = y.cols();
  Matrix g(d, d);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto row = y.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double yi = row[i];
      if (yi == 0.0) continue;
      for (std::size_t j = i; j < d; ++j) g(i, j) += yi * row[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

/// out = A x
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> out) {
  assert(a.cols() == x.size() && a.rows() == out.size());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
}

inline constexpr double kDefaultPowerTol = 1e-10;
inline constexpr std::size_t kPowerIterationCap = 100000;

/// Largest eigenvalue of YᵀY by power iteration on the d×d Gram matrix.
///
/// Starts from the normalized all-ones vector and stops once successive
/// Rayleigh quotients agree to relative accuracy `tol`. Throws
/// ConvergenceError (carrying the last estimate) after `max_iter` sweeps.
inline double spectral_norm_gram(const Matrix& features, double tol = kDefaultPowerTol,
                                 std::size_t max_iter = kPowerIterationCap) {
  if (!(tol > 0.0)) throw ConfigError("spectral_norm_gram: tol must be positive");
  const std::size_t d = features.cols();
  if (d == 0) return 0.0;
  const Matrix g = gram(features);

  Vector v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Vector w(d);
  double estimate = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    matvec(g, v, w);
    const double next = dot(v, w);  // Rayleigh quotient, v has unit norm
    const double wn = norm(w);
    if (wn == 0.0) return 0.0;
    for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / wn;
    if (it > 0 && std::abs(next - estimate) <= tol * std::abs(next)) return next;
    estimate = next;
  }
  throw ConvergenceError("spectral_norm_gram: no convergence after " +
                             std::to_string(max_iter) + " iterations (last estimate " +
                             std::to_string(estimate) + ")",
                         estimate);
}

}  // namespace symbatch
