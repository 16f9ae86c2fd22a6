#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

#include "symbatch/core/error.hpp"
#include "symbatch/core/linalg.hpp"
#include "symbatch/objectives.hpp"

namespace symbatch {

/// Phase point (x, v) of the damped dynamics plus the global iteration count.
struct OptimizerState {
  Vector x;
  Vector v;
  std::uint64_t k = 0;

  OptimizerState() = default;
  explicit OptimizerState(Vector x0) : x(std::move(x0)), v(x.size(), 0.0) {}
  OptimizerState(Vector x0, Vector v0) : x(std::move(x0)), v(std::move(v0)) {
    if (x.size() != v.size()) throw ConfigError("OptimizerState: x and v dimensions differ");
  }

  std::size_t dim() const noexcept { return x.size(); }
  bool finite() const { return all_finite(x) && all_finite(v); }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

enum class OptimizerKind {
  sgd,             ///< x ← x − h g
  heavy_ball,      ///< Lie-Trotter kick-then-drift
  nesterov,        ///< heavy ball with the gradient taken at the look-ahead point
  strang,          ///< half drift, kick, half drift
  euler_momentum,  ///< explicit Euler on the damped dynamics
};

inline std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::heavy_ball: return "hb";
    case OptimizerKind::nesterov: return "nag";
    case OptimizerKind::strang: return "strang";
    case OptimizerKind::euler_momentum: return "euler";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "hb") return OptimizerKind::heavy_ball;
  if (name == "nag") return OptimizerKind::nesterov;
  if (name == "strang") return OptimizerKind::strang;
  if (name == "euler") return OptimizerKind::euler_momentum;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

inline bool uses_momentum(OptimizerKind k) { return k != OptimizerKind::sgd; }

/// Form of the momentum kick v ← η v − c(h) g.
///  - linear: c(h) = h, which makes one heavy-ball step the Lie-Trotter product
///  - exact: c(h) = (1 − e^{−γh})/γ, the exact solution of v' = −g − γv;
///    only this form makes the Strang step exactly time-reversible
enum class KickForm { linear, exact };

// All gradient arguments are g = ∇f (ascent direction); the minus sign is
// applied here.

inline void sgd_step(OptimizerState& s, std::span<const double> g, double h) {
  axpy(-h, g, s.x);
  ++s.k;
}

/// Drift φ^A(h): x ← x + h v. Any sign of h is allowed.
inline void phi_A(OptimizerState& s, double h) { axpy(h, s.v, s.x); }

/// Kick φ^B(h): v ← e^{−γh} v − c(h) g with g evaluated at the (unchanged) x.
inline void phi_B(OptimizerState& s, std::span<const double> g, double h, double gamma,
                  KickForm form = KickForm::linear) {
  const double eta = std::exp(-gamma * h);
  double c = h;
  if (form == KickForm::exact && gamma != 0.0) c = -std::expm1(-gamma * h) / gamma;
  for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = eta * s.v[i] - c * g[i];
}

/// Heavy ball with η = e^{−γh}:
///   x⁺ = x + hηv − h²g,  v⁺ = ηv − hg.
inline void hb_step(OptimizerState& s, std::span<const double> g, double h, double gamma) {
  const double eta = std::exp(-gamma * h);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    s.x[i] += h * eta * s.v[i] - h * h * g[i];
    s.v[i] = eta * s.v[i] - h * g[i];
  }
  ++s.k;
}

/// Explicit Euler on x' = v, v' = −∇f − γv: both updates use the old state.
inline void euler_momentum_step(OptimizerState& s, std::span<const double> g, double h, double gamma) {
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const double v = s.v[i];
    s.x[i] += h * v;
    s.v[i] = v - gamma * h * v - h * g[i];
  }
  ++s.k;
}

/// Scratch buffers for the look-ahead steps, sized to the problem dimension.
struct StepScratch {
  Vector point;
  Vector grad;
  explicit StepScratch(std::size_t d) : point(d), grad(d) {}
};

/// Nesterov: with y = x + hηv and g = ∇f(y),
///   x⁺ = x + hηv − h²g,  v⁺ = ηv − hg.
/// `grad_fn(at, out)` is called exactly once.
template <class GradFn>
void nag_step(OptimizerState& s, GradFn&& grad_fn, double h, double gamma, StepScratch& scratch) {
  const double eta = std::exp(-gamma * h);
  for (std::size_t i = 0; i < s.x.size(); ++i) scratch.point[i] = s.x[i] + h * eta * s.v[i];
  grad_fn(std::span<const double>(scratch.point), std::span<double>(scratch.grad));
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    s.x[i] = scratch.point[i] - h * h * scratch.grad[i];
    s.v[i] = eta * s.v[i] - h * scratch.grad[i];
  }
  ++s.k;
}

template <class GradFn>
void nag_step(OptimizerState& s, GradFn&& grad_fn, double h, double gamma) {
  StepScratch scratch(s.dim());
  nag_step(s, std::forward<GradFn>(grad_fn), h, gamma, scratch);
}

/// Strang: φ^A(h/2), then φ^B(h) with the gradient at the half-drifted x,
/// then φ^A(h/2). One gradient evaluation.
template <class GradFn>
void strang_step(OptimizerState& s, GradFn&& grad_fn, double h, double gamma, StepScratch& scratch,
                 KickForm form = KickForm::linear) {
  phi_A(s, 0.5 * h);
  grad_fn(std::span<const double>(s.x), std::span<double>(scratch.grad));
  phi_B(s, scratch.grad, h, gamma, form);
  phi_A(s, 0.5 * h);
  ++s.k;
}

template <class GradFn>
void strang_step(OptimizerState& s, GradFn&& grad_fn, double h, double gamma,
                 KickForm form = KickForm::linear) {
  StepScratch scratch(s.dim());
  strang_step(s, std::forward<GradFn>(grad_fn), h, gamma, scratch, form);
}

/// One step of any kind. `grad_fn(at, out)` writes ∇f(at); it is called once.
template <class GradFn>
void optimizer_step(OptimizerKind kind, OptimizerState& s, GradFn&& grad_fn, double h, double gamma,
                    StepScratch& scratch, KickForm form = KickForm::linear) {
  switch (kind) {
    case OptimizerKind::sgd:
      grad_fn(std::span<const double>(s.x), std::span<double>(scratch.grad));
      sgd_step(s, scratch.grad, h);
      return;
    case OptimizerKind::heavy_ball:
      grad_fn(std::span<const double>(s.x), std::span<double>(scratch.grad));
      hb_step(s, scratch.grad, h, gamma);
      return;
    case OptimizerKind::nesterov:
      nag_step(s, grad_fn, h, gamma, scratch);
      return;
    case OptimizerKind::strang:
      strang_step(s, grad_fn, h, gamma, scratch, form);
      return;
    case OptimizerKind::euler_momentum:
      grad_fn(std::span<const double>(s.x), std::span<double>(scratch.grad));
      euler_momentum_step(s, scratch.grad, h, gamma);
      return;
  }
}

// ---------------------------------------------------------------------------
// Stepsize schedules

struct ConstantStep {
  double h;
};

/// h_k = 1 / [S (1 + δ max(0, k − 20R) / R)]: constant for 20 epochs, then
/// decaying like 1/k. S is the stepsize scale, see schedule_scale.
struct DecreasingStep {
  double smoothness;
  double delta;
  std::size_t batches_per_epoch;
};

using StepsizeSchedule = std::variant<ConstantStep, DecreasingStep>;

/// Scale S for DecreasingStep. For momentum methods h is the time step of
/// the damped dynamics, whose natural frequency is √L, so S = √L.
inline double schedule_scale(OptimizerKind kind, double smoothness) {
  return uses_momentum(kind) ? std::sqrt(smoothness) : smoothness;
}

inline double stepsize_at(const StepsizeSchedule& schedule, std::uint64_t k) {
  return std::visit(
      [k](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantStep>) {
          return s.h;
        } else {
          const double r = static_cast<double>(s.batches_per_epoch);
          const double late = std::max(0.0, static_cast<double>(k) - 20.0 * r);
          const double base = s.smoothness * (1.0 + s.delta * late / r);
          return 1.0 / base;
        }
      },
      schedule);
}

inline void validate(const StepsizeSchedule& schedule) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantStep>) {
          if (!(s.h > 0.0)) throw ConfigError("constant stepsize must be positive");
        } else {
          if (!(s.smoothness > 0.0)) throw ConfigError("schedule smoothness L must be positive");
          if (!(s.delta >= 0.0)) throw ConfigError("schedule delta must be >= 0");
          if (s.batches_per_epoch == 0) throw ConfigError("schedule R must be >= 1");
        }
      },
      schedule);
}

// ---------------------------------------------------------------------------
// Lyapunov monitor

/// Effective friction (1 − η)/(hη) with η = e^{−γh}.
inline double effective_friction(double gamma, double h) {
  return std::expm1(gamma * h) / h;  // (1 − η)/(hη) = (e^{γh} − 1)/h
}

/// 𝒱(x, v) = F(x) − F* + (γ_h²/4)‖x−X*‖² + (γ_h/2)⟨x−X*, v⟩ + ½‖v‖².
template <FiniteSumObjective Obj>
double lyapunov(std::span<const double> x, std::span<const double> v, const Obj& f,
                std::span<const double> x_star, double f_star, double gamma, double h) {
  const double gh = effective_friction(gamma, h);
  double dist_sq = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - x_star[i];
    dist_sq += e * e;
    cross += e * v[i];
  }
  return value(f, x) - f_star + 0.25 * gh * gh * dist_sq + 0.5 * gh * cross + 0.5 * squared_norm(v);
}

}  // namespace symbatch
