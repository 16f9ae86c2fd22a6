#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace symbatch {

/// Pairwise summation: fixed association order, error growth O(log n).
inline double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 16;
  if (xs.size() <= kLeaf) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Summary of per-realization squared errors ‖x_K − X*‖².
struct ErrorSummary {
  double mse = 0.0;
  double mse_stderr = 0.0;  ///< standard error of the mean squared error
  double rmse = 0.0;
  double rmse_stderr = 0.0;  ///< delta method: SE(mse) / (2 rmse)
};

inline ErrorSummary summarize_squared_errors(std::span<const double> sq) {
  ErrorSummary out;
  const std::size_t m = sq.size();
  if (m == 0) return out;
  out.mse = pairwise_sum(sq) / static_cast<double>(m);
  if (m > 1) {
    std::vector<double> dev(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double d = sq[i] - out.mse;
      dev[i] = d * d;
    }
    const double var = pairwise_sum(dev) / static_cast<double>(m - 1);
    out.mse_stderr = std::sqrt(var / static_cast<double>(m));
  }
  out.rmse = std::sqrt(out.mse);
  out.rmse_stderr = out.rmse > 0.0 ? out.mse_stderr / (2.0 * out.rmse) : 0.0;
  return out;
}

}  // namespace symbatch
