#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "symbatch/analytic.hpp"
#include "symbatch/batching.hpp"
#include "symbatch/core/csv.hpp"
#include "symbatch/core/error.hpp"
#include "symbatch/core/rng.hpp"
#include "symbatch/harness/experiment.hpp"
#include "symbatch/harness/parallel.hpp"
#include "symbatch/harness/stats.hpp"
#include "symbatch/objectives.hpp"

namespace symbatch {

// ---------------------------------------------------------------------------
// Unit rescaling of the Gaussian mean problem with constant variance σ².
//
// F has curvature c = N/σ². First-order steps x ← x − h c (x − ŷ) become
// x ← (1 − h̃) x + h̃ ŷ with h̃ = h c, i.e. a raw stepsize h̃ σ²/N.
// The damped dynamics x'' = −γ x' − c (x − ŷ) become unit-curvature after
// t̃ = ω t with ω = √c = √N/σ, so h̃ = ω h and γ̃ = γ/ω.

inline double rescale_first_order_step(double h_raw, double sigma_sq, std::size_t n_points) {
  return h_raw * static_cast<double>(n_points) / sigma_sq;
}

inline double raw_first_order_step(double h_rescaled, double sigma_sq, std::size_t n_points) {
  return h_rescaled * sigma_sq / static_cast<double>(n_points);
}

struct MomentumScaling {
  double h;
  double gamma;
};

inline MomentumScaling rescale_momentum(double h_raw, double gamma_raw, double sigma_sq, std::size_t n_points) {
  const double omega = std::sqrt(static_cast<double>(n_points) / sigma_sq);
  return {omega * h_raw, gamma_raw / omega};
}

inline MomentumScaling raw_momentum(double h_rescaled, double gamma_rescaled, double sigma_sq,
                                    std::size_t n_points) {
  const double omega = std::sqrt(static_cast<double>(n_points) / sigma_sq);
  return {h_rescaled / omega, gamma_rescaled * omega};
}

// ---------------------------------------------------------------------------
// Direct simulation of the rescaled recursions

/// R values with mean 0 and population variance V. A random permutation of
/// them has exactly the batch-mean second moments assumed by the closed forms:
/// variance V and pairwise covariance −V/(R − 1).
inline std::vector<double> standardized_batch_means(std::size_t r, double variance) {
  if (r < 2) throw DomainError("standardized_batch_means: need R >= 2");
  std::vector<double> a(r);
  const double mid = 0.5 * static_cast<double>(r - 1);
  double ss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    a[i] = static_cast<double>(i) - mid;
    ss += a[i] * a[i];
  }
  const double scale = std::sqrt(variance * static_cast<double>(r) / ss);
  for (double& v : a) v *= scale;
  return a;
}

/// Iterations simulated per realization: the smallest multiple of the
/// resampling period after which the start-up transient has decayed by
/// `transient` in mean square.
inline std::size_t model_burn_in(analytic::Dynamics dyn, Strategy strategy, const analytic::ModelParams& p,
                                 double transient = 1e-8) {
  const double rho = dyn == analytic::Dynamics::first_order
                         ? 1.0 - p.h
                         : analytic::spectral_radius(analytic::exact_flow(p.h, p.gamma));
  if (!(rho < 1.0) || !(rho > 0.0)) throw DomainError("model_burn_in: recursion is not contractive");
  const double steps = std::ceil(std::log(transient) / (2.0 * std::log(rho)));
  const std::size_t period = strategy == Strategy::sms ? 2 * p.batches_per_epoch
                             : strategy == Strategy::rm ? 1
                                                        : p.batches_per_epoch;
  const auto k = static_cast<std::size_t>(steps);
  return ((k + period - 1) / period) * period;
}

/// Monte-Carlo estimate of the stationary mean-squared error of the rescaled
/// model recursion, sampled at a resampling boundary. Realization i uses
/// stream (seed, i).
inline MonteCarloEstimate simulate_model_mse(analytic::Dynamics dyn, Strategy strategy,
                                             const analytic::ModelParams& p, std::size_t reps,
                                             std::uint64_t seed, unsigned threads = 0) {
  if (reps < 2) throw ConfigError("simulate_model_mse: need at least 2 realizations");
  if (strategy != Strategy::rm && strategy != Strategy::rr && strategy != Strategy::sms)
    throw ConfigError("simulate_model_mse: strategy must be rm, rr or sms");
  const std::size_t r = p.batches_per_epoch;
  const auto values = standardized_batch_means(r, p.variance);
  const std::size_t steps = model_burn_in(dyn, strategy, p);
  std::vector<double> sq(reps);

  if (dyn == analytic::Dynamics::first_order) {
    if (!(p.h > 0.0 && p.h < 1.0)) throw DomainError("simulate_model_mse: h must lie in (0, 1)");
    parallel_for(
        reps,
        [&](std::size_t i) {
          RngStream rng(seed, i);
          BatchSchedule batches(strategy, r, 1);
          double x = 0.0;
          for (std::size_t k = 0; k < steps; ++k) x = (1.0 - p.h) * x + p.h * values[batches.next(rng).indices[0]];
          sq[i] = x * x;
        },
        threads);
  } else {
    const analytic::Mat2 e = analytic::exact_flow(p.h, p.gamma);
    const double ix = 1.0 - e.a, iv = -e.c;  // (I − E) e₁
    parallel_for(
        reps,
        [&](std::size_t i) {
          RngStream rng(seed, i);
          BatchSchedule batches(strategy, r, 1);
          double x = 0.0, v = 0.0;
          for (std::size_t k = 0; k < steps; ++k) {
            const double y = values[batches.next(rng).indices[0]];
            const double nx = e.a * x + e.b * v + ix * y;
            const double nv = e.c * x + e.d * v + iv * y;
            x = nx;
            v = nv;
          }
          sq[i] = x * x;
        },
        threads);
  }
  const auto s = summarize_squared_errors(sq);
  return {s.mse, s.mse_stderr};
}

// ---------------------------------------------------------------------------
// Variable-variance experiment

inline const std::vector<double>& variable_variances() {
  static const std::vector<double> v{2.5, 1.5, 0.05, 0.15, 0.1};
  return v;
}

/// 17 log-spaced stepsizes over [10⁻⁶, 10⁻⁴].
inline std::vector<double> variable_variance_h_grid() { return logspace(1e-6, 1e-4, 17); }

struct VariableVarianceOptions {
  std::vector<double> sigma_sq = variable_variances();
  Strategy strategy = Strategy::sms;
  OptimizerKind optimizer = OptimizerKind::euler_momentum;
  double gamma = 1.0;
  std::vector<double> h_grid = variable_variance_h_grid();
  std::size_t realizations = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

/// Gaussian mean problem with y_i = i (i = 1..N), per-point variances σ_i²
/// and single-point batches, swept in h from X*. The problem is shifted so
/// that X* = 0, which keeps the tiny errors above the rounding level of X*.
inline SweepResult variable_variance_experiment(const VariableVarianceOptions& opt = {}) {
  const std::size_t n = opt.sigma_sq.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(i + 1);
  const GaussianMeanObjective f = GaussianMeanObjective(y, opt.sigma_sq).centered();

  ExperimentConfig cfg;
  cfg.optimizer = opt.optimizer;
  cfg.strategy = opt.strategy;
  cfg.batch_size = 1;
  cfg.gamma = opt.gamma;
  cfg.seed = opt.seed;
  cfg.realizations = opt.realizations;
  cfg.h_grid = opt.h_grid;
  cfg.threads = opt.threads;
  cfg.objective_label = "gaussian y=1..N sigma_sq=" + csv::join_doubles(opt.sigma_sq, ';');
  const Vector x_star{0.0};
  return bias_sweep(f, cfg, x_star);
}

}  // namespace symbatch
