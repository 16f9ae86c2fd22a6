#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symbatch/batching.hpp"
#include "symbatch/core/dataset.hpp"
#include "symbatch/core/error.hpp"
#include "symbatch/core/linalg.hpp"
#include "symbatch/core/rng.hpp"

namespace symbatch {

/// Finite-sum objective F = (1/N) Σ f_i.
///
/// Gradients are accumulated: `add_component_gradient(i, x, scale, out)` does
/// out += scale · ∇f_i(x), which keeps batch gradients allocation-free.
template <class T>
concept FiniteSumObjective = requires(const T& f, std::size_t i, std::span<const double> x,
                                      double scale, std::span<double> out) {
  { f.size() } -> std::convertible_to<std::size_t>;
  { f.dim() } -> std::convertible_to<std::size_t>;
  { f.component_value(i, x) } -> std::convertible_to<double>;
  { f.add_component_gradient(i, x, scale, out) };
};

template <FiniteSumObjective Obj>
double value(const Obj& f, std::span<const double> x) {
  if constexpr (requires { f.value(x); }) {
    return f.value(x);
  } else {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.component_value(i, x);
    return s / static_cast<double>(f.size());
  }
}

template <FiniteSumObjective Obj>
void component_gradient(const Obj& f, std::size_t i, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  f.add_component_gradient(i, x, 1.0, out);
}

template <FiniteSumObjective Obj>
void full_gradient(const Obj& f, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const double w = 1.0 / static_cast<double>(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) f.add_component_gradient(i, x, w, out);
}

template <FiniteSumObjective Obj>
Vector full_gradient(const Obj& f, std::span<const double> x) {
  Vector g(f.dim());
  full_gradient(f, x, g);
  return g;
}

/// Minibatch gradient weight · mean_{j ∈ batch} ∇f_j(x). For a full batch
/// the weight is 1; for a ragged final batch of n_R < n points it is n_R/n,
/// so the result is (1/n) Σ_j ∇f_j.
template <FiniteSumObjective Obj>
void stochastic_gradient(const Obj& f, const Batch& batch, std::span<const double> x, std::span<double> out) {
  if (batch.indices.empty()) throw ConfigError("stochastic_gradient: empty batch");
  std::fill(out.begin(), out.end(), 0.0);
  const double w = batch.weight / static_cast<double>(batch.indices.size());
  for (std::size_t j : batch.indices) f.add_component_gradient(j, x, w, out);
}

/// Numerically stable logistic function.
inline double sigmoid(double t) {
  const double e = std::exp(-std::abs(t));
  return t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

/// L2-regularized logistic regression. Each component carries the ridge term:
/// f_i(x) = λ/2‖x‖² − z_i xᵀỹ_i + log(1 + exp(xᵀỹ_i)).
class LogisticObjective {
 public:
  LogisticObjective(Dataset data, double lambda) : data_(std::move(data)), lambda_(lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("LogisticObjective: lambda must be >= 0");
  }

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim() const noexcept { return data_.dim(); }
  double lambda() const noexcept { return lambda_; }
  const Dataset& data() const noexcept { return data_; }

  double component_value(std::size_t i, std::span<const double> x) const {
    const double t = dot(x, data_.features_row(i));
    return 0.5 * lambda_ * squared_norm(x) - data_.label(i) * t + softplus(t);
  }

  double value(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double t = dot(x, data_.features_row(i));
      s += softplus(t) - data_.label(i) * t;
    }
    return s / static_cast<double>(size()) + 0.5 * lambda_ * squared_norm(x);
  }

  void add_component_gradient(std::size_t i, std::span<const double> x, double scale,
                              std::span<double> out) const {
    const auto row = data_.features_row(i);
    const double r = sigmoid(dot(x, row)) - data_.label(i);
    const double a = scale * lambda_;
    const double b = scale * r;
    for (std::size_t k = 0; k < x.size(); ++k) out[k] += a * x[k] + b * row[k];
  }

 private:
  Dataset data_;
  double lambda_;
};

/// 1-D Gaussian mean model: F(x) = ½ Σ σ_i⁻² (x − y_i)², written as the mean
/// of components f_i(x) = (N/2) σ_i⁻² (x − y_i)².
class GaussianMeanObjective {
 public:
  GaussianMeanObjective(std::vector<double> y, std::vector<double> sigma_sq)
      : y_(std::move(y)), sigma_sq_(std::move(sigma_sq)) {
    if (y_.empty()) throw ConfigError("GaussianMeanObjective: need at least one observation");
    if (sigma_sq_.size() != y_.size())
      throw ConfigError("GaussianMeanObjective: y and sigma_sq lengths differ");
    for (double s : sigma_sq_)
      if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("GaussianMeanObjective: variances must be positive");
    const double n = static_cast<double>(y_.size());
    curvature_.resize(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i) curvature_[i] = n / sigma_sq_[i];
  }

  /// Constant variance σ² for every observation.
  GaussianMeanObjective(std::vector<double> y, double sigma_sq)
      : GaussianMeanObjective(y, std::vector<double>(y.size(), sigma_sq)) {}

  std::size_t size() const noexcept { return y_.size(); }
  std::size_t dim() const noexcept { return 1; }
  const std::vector<double>& observations() const noexcept { return y_; }
  const std::vector<double>& variances() const noexcept { return sigma_sq_; }

  double component_value(std::size_t i, std::span<const double> x) const {
    const double r = x[0] - y_[i];
    return 0.5 * curvature_[i] * r * r;
  }

  void add_component_gradient(std::size_t i, std::span<const double> x, double scale,
                              std::span<double> out) const {
    out[0] += scale * curvature_[i] * (x[0] - y_[i]);
  }

  /// The σ⁻²-weighted mean of y.
  double minimizer() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      num += y_[i] / sigma_sq_[i];
      den += 1.0 / sigma_sq_[i];
    }
    return num / den;
  }

  /// Curvature of F, Σ σ_i⁻².
  double hessian() const {
    double s = 0.0;
    for (double v : sigma_sq_) s += 1.0 / v;
    return s;
  }

  /// Largest component curvature, max N σ_i⁻².
  double smoothness() const { return *std::max_element(curvature_.begin(), curvature_.end()); }

  /// Smallest component curvature, min N σ_i⁻².
  double min_curvature() const { return *std::min_element(curvature_.begin(), curvature_.end()); }

  /// Same problem translated so that the minimizer sits at the origin.
  /// Iterates then carry the error directly, which keeps tiny biases above
  /// the rounding level of the position.
  GaussianMeanObjective centered() const {
    const double shift = minimizer();
    std::vector<double> y = y_;
    for (double& v : y) v -= shift;
    return GaussianMeanObjective(std::move(y), sigma_sq_);
  }

 private:
  std::vector<double> y_;
  std::vector<double> sigma_sq_;
  std::vector<double> curvature_;
};

struct LogRegConstants {
  double smoothness;  ///< L = ‖YᵀY‖₂ / 4N
  double lambda;      ///< L / √N
};

inline LogRegConstants logreg_constants(const Dataset& data, double tol = kDefaultPowerTol) {
  const double n = static_cast<double>(data.size());
  const double l = spectral_norm_gram(data.features(), tol) / (4.0 * n);
  return {l, l / std::sqrt(n)};
}

/// Logistic objective with the default ridge λ = L/√N.
inline LogisticObjective make_logistic_objective(Dataset data, double tol = kDefaultPowerTol) {
  const auto c = logreg_constants(data, tol);
  return LogisticObjective(std::move(data), c.lambda);
}

/// Upper bound on the component smoothness, used for stepsize ceilings.
inline double smoothness_bound(const LogisticObjective& f, double tol = kDefaultPowerTol) {
  return logreg_constants(f.data(), tol).smoothness + f.lambda();
}
inline double smoothness_bound(const GaussianMeanObjective& f, double = kDefaultPowerTol) {
  return f.smoothness();
}

/// Strong-convexity modulus of F used to tune the full-gradient solver.
inline double strong_convexity(const LogisticObjective& f) { return f.lambda(); }
inline double strong_convexity(const GaussianMeanObjective& f) { return f.hessian(); }

struct MonteCarloEstimate {
  double mean;
  double stderr_;
};

/// Monte-Carlo estimate of σ*² = E‖∇f_ω(X*)‖² over fresh without-replacement
/// batches of size n.
template <FiniteSumObjective Obj>
MonteCarloEstimate sigma_star_sq(const Obj& f, std::span<const double> x_star, std::size_t batch_size,
                                 std::size_t reps, RngStream& rng) {
  if (reps == 0) throw ConfigError("sigma_star_sq: reps must be >= 1");
  BatchSchedule schedule(Strategy::rm, f.size(), batch_size);
  Vector g(f.dim());
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    stochastic_gradient(f, schedule.next(rng), x_star, g);
    const double s = squared_norm(g);
    sum += s;
    sum_sq += s * s;
  }
  const double m = static_cast<double>(reps);
  const double mean = sum / m;
  const double var = reps > 1 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0)) : 0.0;
  return {mean, std::sqrt(var / m)};
}

/// Wraps an objective and counts component-gradient evaluations.
template <FiniteSumObjective Obj>
class CountingObjective {
 public:
  explicit CountingObjective(const Obj& inner) : inner_(&inner) {}

  std::size_t size() const { return inner_->size(); }
  std::size_t dim() const { return inner_->dim(); }
  double component_value(std::size_t i, std::span<const double> x) const { return inner_->component_value(i, x); }
  void add_component_gradient(std::size_t i, std::span<const double> x, double scale,
                              std::span<double> out) const {
    count_.fetch_add(1, std::memory_order_relaxed);
    inner_->add_component_gradient(i, x, scale, out);
  }

  std::size_t count() const { return count_.load(); }
  void reset() { count_.store(0); }

 private:
  const Obj* inner_;
  mutable std::atomic<std::size_t> count_{0};
};

}  // namespace symbatch
