#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "symbatch/core/error.hpp"
#include "symbatch/core/linalg.hpp"
#include "symbatch/objectives.hpp"

namespace symbatch {

struct Minimizer {
  Vector x_star;
  double f_star = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMinimizerIterationCap = 1'000'000;

/// Full-gradient Nesterov with the optimal constant-momentum tuning for an
/// L-smooth, μ-strongly convex F. In the (h, η) form used by nag_step the
/// learning rate is h², so h = 1/√L and η = (1 − √(μ/L)) / (1 + √(μ/L)).
///
/// Stops when ‖∇F(x)‖ ≤ tol. A non-positive tol selects
/// 10⁻¹³ · max(1, ‖∇F(x₀)‖).
template <FiniteSumObjective Obj>
Minimizer minimize_full_gradient(const Obj& f, double smoothness, double mu, Vector x0, double tol = 0.0,
                                 std::size_t max_iter = kMinimizerIterationCap) {
  if (!(smoothness > 0.0) || !(mu > 0.0))
    throw ConfigError("compute_minimizer: objective must be smooth and strongly convex");
  if (x0.size() != f.dim()) throw ConfigError("compute_minimizer: start point has the wrong dimension");
  const double h = 1.0 / std::sqrt(smoothness);
  const double q = std::sqrt(std::min(1.0, mu / smoothness));
  const double eta = (1.0 - q) / (1.0 + q);

  const std::size_t d = f.dim();
  Vector x = std::move(x0), v(d, 0.0), y(d), g(d);
  full_gradient(f, x, g);
  if (tol <= 0.0) tol = 1e-13 * std::max(1.0, norm(g));

  std::size_t it = 0;
  double gnorm = norm(g);
  while (gnorm > tol) {
    if (it == max_iter)
      throw ConvergenceError("compute_minimizer: no convergence after " + std::to_string(max_iter) +
                                 " iterations, gradient norm " + std::to_string(gnorm),
                             gnorm);
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * eta * v[i];
    full_gradient(f, y, g);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = y[i] - h * h * g[i];
      v[i] = eta * v[i] - h * g[i];
    }
    if (!all_finite(x)) throw ConvergenceError("compute_minimizer: iterate became non-finite", gnorm);
    full_gradient(f, x, g);
    gnorm = norm(g);
    ++it;
  }
  Minimizer out;
  out.f_star = value(f, x);
  out.x_star = std::move(x);
  out.grad_norm = gnorm;
  out.iterations = it;
  return out;
}

/// X* and F(X*) for the built-in objectives, started from the origin.
template <class Obj>
Minimizer compute_minimizer(const Obj& f, double tol = 0.0) {
  return minimize_full_gradient(f, smoothness_bound(f), strong_convexity(f), Vector(f.dim(), 0.0), tol);
}

}  // namespace symbatch
