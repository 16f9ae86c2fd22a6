#pragma once

// Asymptotic mean-squared error of stochastic-gradient iterations on the
// scalar Gaussian model problem, in rescaled units (unit curvature).
//
// With ŷ_k the batch mean used at step k and V = Var[ŷ]:
//   first order:  x ← (1 − h) x + h ŷ_k
//   momentum:     z ← e^{hA} z + (I − e^{hA}) (ŷ_k, 0)ᵀ,  A = [[0, 1], [−1, −γ]]
// Within an epoch of R batches that partition the data, distinct batch means
// have covariance −V/(R − 1). Errors are measured at epoch boundaries (RR)
// or double-epoch boundaries (SMS), where the process is stationary.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "symbatch/batching.hpp"
#include "symbatch/core/error.hpp"

namespace symbatch::analytic {

// ---------------------------------------------------------------------------
// 2×2 real matrices

struct Mat2 {
  double a = 0.0, b = 0.0;  // first row
  double c = 0.0, d = 0.0;  // second row

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr double trace() const { return a + d; }
  constexpr double det() const { return a * d - b * c; }
  constexpr Mat2 transpose() const { return {a, c, b, d}; }

  friend constexpr Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
  friend constexpr Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend constexpr Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& x) { return {s * x.a, s * x.b, s * x.c, s * x.d}; }
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}
inline constexpr Vec2 operator+(const Vec2& u, const Vec2& v) { return {u.x + v.x, u.y + v.y}; }
inline constexpr Vec2 operator-(const Vec2& u, const Vec2& v) { return {u.x - v.x, u.y - v.y}; }
inline constexpr Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
inline constexpr Mat2 outer(const Vec2& u, const Vec2& v) { return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}; }

inline double max_abs(const Mat2& m) {
  return std::max(std::max(std::abs(m.a), std::abs(m.b)), std::max(std::abs(m.c), std::abs(m.d)));
}

inline Mat2 power(Mat2 m, std::size_t k) {
  Mat2 out = Mat2::identity();
  while (k > 0) {
    if (k & 1u) out = out * m;
    m = m * m;
    k >>= 1u;
  }
  return out;
}

/// Largest eigenvalue modulus of a real 2×2 matrix.
inline double spectral_radius(const Mat2& m) {
  const std::complex<double> half_tr(0.5 * m.trace(), 0.0);
  const auto disc = std::sqrt(half_tr * half_tr - m.det());
  return std::max(std::abs(half_tr + disc), std::abs(half_tr - disc));
}

// ---------------------------------------------------------------------------
// Exact flow of the damped oscillator

inline constexpr double kDegenerateDampingTol = 1e-8;

/// e^{tA} for A = [[0, 1], [−1, −γ]], γ > 0, γ ≠ 2.
///
/// Uses e^{tA} = e^{−γt/2} [c(t) I + s(t) (A + γ/2 I)] with (c, s) = (cos ωt, sin ωt / ω)
/// in the underdamped case (ω² = 1 − γ²/4) and (cosh βt, sinh βt / β) in the
/// overdamped case (β² = γ²/4 − 1).
class DampedFlow {
 public:
  explicit DampedFlow(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("DampedFlow: gamma must be positive");
    if (std::abs(gamma - 2.0) < kDegenerateDampingTol)
      throw DomainError("DampedFlow: critical damping gamma = 2 is excluded");
    const std::complex<double> root = std::sqrt(std::complex<double>(0.25 * gamma * gamma - 1.0, 0.0));
    lambda_plus_ = -0.5 * gamma + root;
    lambda_minus_ = -0.5 * gamma - root;
  }

  double gamma() const noexcept { return gamma_; }
  bool underdamped() const noexcept { return gamma_ < 2.0; }
  std::complex<double> lambda_plus() const noexcept { return lambda_plus_; }
  std::complex<double> lambda_minus() const noexcept { return lambda_minus_; }

  /// The generator A.
  Mat2 generator() const { return {0.0, 1.0, -1.0, -gamma_}; }

  Mat2 at(double t) const {
    const double g2 = 0.5 * gamma_;
    double cpart = 0.0, spart = 0.0;  // already multiplied by e^{−γt/2}
    if (underdamped()) {
      const double omega = std::sqrt(1.0 - g2 * g2);
      const double damp = std::exp(-g2 * t);
      cpart = damp * std::cos(omega * t);
      spart = damp * std::sin(omega * t) / omega;
    } else {
      const double beta = std::sqrt(g2 * g2 - 1.0);
      // e^{−γt/2} cosh βt and e^{−γt/2} sinh βt without overflowing either factor
      const double up = std::exp((beta - g2) * t);
      const double down = std::exp(-(beta + g2) * t);
      cpart = 0.5 * (up + down);
      spart = 0.5 * (up - down) / beta;
    }
    return {cpart + spart * g2, spart, -spart, cpart - spart * g2};
  }

 private:
  double gamma_;
  std::complex<double> lambda_plus_;
  std::complex<double> lambda_minus_;
};

inline Mat2 exact_flow(double t, double gamma) { return DampedFlow(gamma).at(t); }

// ---------------------------------------------------------------------------
// Discrete Lyapunov equation

/// Solves X = M X Mᵀ + Q for 2×2 matrices through the 4×4 system
/// (I − M⊗M) vec(X) = vec(Q). Requires spectral radius of M below 1.
inline Mat2 solve_discrete_lyapunov(const Mat2& m, const Mat2& q) {
  if (!(spectral_radius(m) < 1.0)) throw DomainError("solve_discrete_lyapunov: M is not contractive");
  const std::array<double, 4> mv{m.a, m.b, m.c, m.d};
  auto at = [&](int i, int j) { return mv[static_cast<std::size_t>(2 * i + j)]; };
  std::array<std::array<double, 5>, 4> sys{};
  const std::array<double, 4> rhs{q.a, q.b, q.c, q.d};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const int row = 2 * i + j;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const int col = 2 * k + l;
          sys[row][col] = (row == col ? 1.0 : 0.0) - at(i, k) * at(j, l);
        }
      sys[row][4] = rhs[static_cast<std::size_t>(row)];
    }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(sys[r][col]) > std::abs(sys[pivot][col])) pivot = r;
    std::swap(sys[col], sys[pivot]);
    if (sys[col][col] == 0.0) throw DomainError("solve_discrete_lyapunov: singular system");
    for (int r = col + 1; r < 4; ++r) {
      const double f = sys[r][col] / sys[col][col];
      for (int c = col; c < 5; ++c) sys[r][c] -= f * sys[col][c];
    }
  }
  std::array<double, 4> x{};
  for (int r = 3; r >= 0; --r) {
    double s = sys[r][4];
    for (int c = r + 1; c < 4; ++c) s -= sys[r][c] * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(r)] = s / sys[r][r];
  }
  return {x[0], x[1], x[2], x[3]};
}

// ---------------------------------------------------------------------------
// Parameter checks

namespace detail {

inline void check_first_order(double h, double v) {
  if (!(h > 0.0 && h < 1.0)) throw DomainError("stepsize h must lie in (0, 1), got " + std::to_string(h));
  if (!(v >= 0.0)) throw DomainError("variance V must be >= 0");
}

inline void check_epoch(std::size_t r) {
  if (r < 2) throw DomainError("batches per epoch R must be >= 2");
}

inline void check_momentum(double h, double v) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("stepsize h must be positive");
  if (!(v >= 0.0)) throw DomainError("variance V must be >= 0");
}

/// 1 − (1 − h)^k in extended precision.
inline long double one_minus_decay(long double h, long double k) {
  return -std::expm1(k * std::log1p(-h));
}

/// e^z − 1 for complex z without cancellation near 0.
inline std::complex<double> expm1(std::complex<double> z) {
  const double a = z.real(), b = z.imag();
  const double s = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

/// (1 − e^{z})² / (1 − e^{2z}) = (1 − e^{z}) / (1 + e^{z}) = −tanh(z/2).
inline std::complex<double> squared_over_double(std::complex<double> z) { return -std::tanh(0.5 * z); }

inline double real_part_checked(std::complex<double> value, const char* who) {
  if (std::abs(value.imag()) > 1e-10 * std::abs(value.real()) && std::abs(value.imag()) > 1e-300)
    throw DomainError(std::string(who) + ": imaginary residue " + std::to_string(value.imag()));
  return value.real();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// First-order dynamics

/// SGD-RM: h²V / (1 − (1 − h)²) = hV / (2 − h).
inline double sgd_rm_mse(double h, double v) {
  detail::check_first_order(h, v);
  return h * v / (2.0 - h);
}

/// SGD-RR: Var[ũ] / (1 − (1 − h)^{2R}) with
/// Var[ũ] = V/(R−1) [R h (1 − (1−h)^{2R})/(2 − h) − (1 − (1−h)^R)²].
inline double sgd_rr_mse(double h, double v, std::size_t r) {
  detail::check_first_order(h, v);
  detail::check_epoch(r);
  const long double hl = h, rl = static_cast<long double>(r);
  const long double a2 = detail::one_minus_decay(hl, 2 * rl);
  const long double a1 = detail::one_minus_decay(hl, rl);
  const long double u = (rl * hl * a2 / (2.0L - hl) - a1 * a1) / (rl - 1.0L);
  return static_cast<double>(v * (u / a2));
}

/// SGD-SMS: Var[ũ] / (1 − (1 − h)^{4R}) with
/// Var[ũ] = V/(R−1) [R h (1 − (1−h)^{4R})/(2 − h) − (1 − (1−h)^{2R})² + 2h²R²(1−h)^{2R−1}].
inline double sgd_sms_mse(double h, double v, std::size_t r) {
  detail::check_first_order(h, v);
  detail::check_epoch(r);
  const long double hl = h, rl = static_cast<long double>(r);
  const long double a4 = detail::one_minus_decay(hl, 4 * rl);
  const long double a2 = detail::one_minus_decay(hl, 2 * rl);
  const long double mirror = 2.0L * hl * hl * rl * rl * std::exp((2 * rl - 1) * std::log1p(-hl));
  const long double u = (rl * hl * a4 / (2.0L - hl) - a2 * a2 + mirror) / (rl - 1.0L);
  return static_cast<double>(v * (u / a4));
}

// ---------------------------------------------------------------------------
// Momentum dynamics (exact flow)

/// MSGD-RM:
/// V/(λ₊−λ₋)² [λ₋²(1−e^{hλ₊})²/(1−e^{2hλ₊}) − 2(1−e^{hλ₊})(1−e^{hλ₋})/(1−e^{−γh})
///             + λ₊²(1−e^{hλ₋})²/(1−e^{2hλ₋})].
inline double msgd_rm_mse(double h, double v, double gamma) {
  detail::check_momentum(h, v);
  const DampedFlow flow(gamma);
  const auto lp = flow.lambda_plus(), lm = flow.lambda_minus();
  const auto ep = detail::expm1(h * lp), em = detail::expm1(h * lm);  // e^{hλ} − 1
  const double damp = -std::expm1(-gamma * h);
  const auto bracket = lm * lm * detail::squared_over_double(h * lp) - 2.0 * (ep * em) / damp +
                       lp * lp * detail::squared_over_double(h * lm);
  const auto diff = lp - lm;
  return v * detail::real_part_checked(bracket / (diff * diff), "msgd_rm_mse");
}

/// MSGD-RR: the six-term closed form in λ±, with each (1−e^{z})²/(1−e^{2z})
/// ratio evaluated as −tanh(z/2).
inline double msgd_rr_mse(double h, double v, double gamma, std::size_t r) {
  detail::check_momentum(h, v);
  detail::check_epoch(r);
  const DampedFlow flow(gamma);
  const auto lp = flow.lambda_plus(), lm = flow.lambda_minus();
  const double rd = static_cast<double>(r);
  const double rh = rd * h;
  const auto ep1 = detail::expm1(h * lp), em1 = detail::expm1(h * lm);
  const auto epr = detail::expm1(rh * lp), emr = detail::expm1(rh * lm);
  const double damp1 = -std::expm1(-gamma * h);
  const double dampr = -std::expm1(-gamma * rh);
  const auto bracket = rd * lm * lm * detail::squared_over_double(h * lp) -
                       lm * lm * detail::squared_over_double(rh * lp) - 2.0 * rd * (ep1 * em1) / damp1 +
                       2.0 * (epr * emr) / dampr + rd * lp * lp * detail::squared_over_double(h * lm) -
                       lp * lp * detail::squared_over_double(rh * lm);
  const auto diff = lp - lm;
  return v * detail::real_part_checked(bracket / ((rd - 1.0) * diff * diff), "msgd_rr_mse");
}

/// Stationary covariance of z at resampling boundaries, built directly from
/// the per-step noise directions and the 2×2 Lyapunov equation.
///
/// With E = e^{hA} and period P (1 for RM, R for RR, 2R for SMS), step j of
/// the period injects w_j ŷ_j, w_j = E^{P−1−j}(I − E)e₁. Collecting the
/// directions of each batch b into s_b (for SMS s_b = w_b + w_{2R−1−b}),
/// Var[ũ] = V R/(R−1) Σ_b (s_b − s̄)(s_b − s̄)ᵀ and Var[z] solves
/// X = E^P X E^{Pᵀ} + Var[ũ].
inline Mat2 momentum_stationary_covariance(Strategy strategy, double h, double v, double gamma,
                                           std::size_t r) {
  detail::check_momentum(h, v);
  const Mat2 e = exact_flow(h, gamma);
  const Mat2 i_minus_e = Mat2::identity() - e;
  const Vec2 inject = i_minus_e * Vec2{1.0, 0.0};
  if (strategy == Strategy::rm) {
    return solve_discrete_lyapunov(e, v * outer(inject, inject));
  }
  if (strategy != Strategy::rr && strategy != Strategy::sms)
    throw DomainError("momentum_stationary_covariance: only rm, rr and sms have a stationary closed form");
  detail::check_epoch(r);
  const std::size_t period = strategy == Strategy::sms ? 2 * r : r;
  std::vector<Vec2> w(period);
  Vec2 cur = inject;  // w_{P−1}
  for (std::size_t j = period; j-- > 0;) {
    w[j] = cur;
    cur = e * cur;
  }
  std::vector<Vec2> s(r);
  Vec2 mean{};
  for (std::size_t b = 0; b < r; ++b) {
    s[b] = w[b];
    if (strategy == Strategy::sms) s[b] = s[b] + w[period - 1 - b];
    mean = mean + s[b];
  }
  mean = (1.0 / static_cast<double>(r)) * mean;
  Mat2 acc{};
  for (std::size_t b = 0; b < r; ++b) {
    const Vec2 dev = s[b] - mean;
    acc = acc + outer(dev, dev);
  }
  const double rd = static_cast<double>(r);
  const Mat2 noise = (v * rd / (rd - 1.0)) * acc;
  return solve_discrete_lyapunov(power(e, period), noise);
}

/// MSGD-SMS: upper-left entry of the stationary covariance over double epochs.
inline double msgd_sms_mse(double h, double v, double gamma, std::size_t r) {
  return momentum_stationary_covariance(Strategy::sms, h, v, gamma, r).a;
}

// ---------------------------------------------------------------------------
// Leading-order terms

namespace leading {

inline double sgd_rm(double h, double v) { return v * h / 2.0; }

inline double sgd_rr(double h, double v, std::size_t r) {
  const double rd = static_cast<double>(r);
  return v * h * h * h * rd * (rd + 1.0) / 24.0;
}

inline double sgd_sms(double h, double v, std::size_t r) {
  const double rd = static_cast<double>(r);
  return std::pow(h, 5) * v * rd * (rd + 1.0) * (2.0 * rd - 1.0) * (2.0 * rd + 1.0) / 180.0;
}

inline double msgd_rm(double h, double v, double gamma) { return v * h / (2.0 * gamma); }

inline double msgd_rr(double h, double v, double gamma, std::size_t r) {
  const double rd = static_cast<double>(r);
  return v * rd * (rd + 1.0) * h * h * h / (24.0 * gamma);
}

inline double msgd_sms(double h, double v, double gamma, std::size_t r) {
  const double rd = static_cast<double>(r);
  return rd * v * std::pow(h, 5) * (rd + 1.0) * (2.0 * rd - 1.0) * (2.0 * rd + 1.0) * (gamma * gamma + 1.0) /
         (180.0 * gamma);
}

}  // namespace leading

// ---------------------------------------------------------------------------
// Dispatch

enum class Dynamics { first_order, momentum };

inline std::string_view to_string(Dynamics d) { return d == Dynamics::first_order ? "sgd" : "msgd"; }

/// Rescaled model-problem parameters.
struct ModelParams {
  double h;
  double variance;  ///< V = Var[ŷ]
  std::size_t batches_per_epoch;
  double gamma = 1.0;  ///< momentum only
};

inline double asymptotic_mse(Dynamics dyn, Strategy strategy, const ModelParams& p) {
  const bool first = dyn == Dynamics::first_order;
  switch (strategy) {
    case Strategy::rm:
      return first ? sgd_rm_mse(p.h, p.variance) : msgd_rm_mse(p.h, p.variance, p.gamma);
    case Strategy::rr:
      return first ? sgd_rr_mse(p.h, p.variance, p.batches_per_epoch)
                   : msgd_rr_mse(p.h, p.variance, p.gamma, p.batches_per_epoch);
    case Strategy::sms:
      return first ? sgd_sms_mse(p.h, p.variance, p.batches_per_epoch)
                   : msgd_sms_mse(p.h, p.variance, p.gamma, p.batches_per_epoch);
    default:
      throw DomainError("asymptotic_mse: no closed form for strategy " + std::string(to_string(strategy)));
  }
}

inline double leading_term(Dynamics dyn, Strategy strategy, const ModelParams& p) {
  const bool first = dyn == Dynamics::first_order;
  switch (strategy) {
    case Strategy::rm:
      return first ? leading::sgd_rm(p.h, p.variance) : leading::msgd_rm(p.h, p.variance, p.gamma);
    case Strategy::rr:
      return first ? leading::sgd_rr(p.h, p.variance, p.batches_per_epoch)
                   : leading::msgd_rr(p.h, p.variance, p.gamma, p.batches_per_epoch);
    case Strategy::sms:
      return first ? leading::sgd_sms(p.h, p.variance, p.batches_per_epoch)
                   : leading::msgd_sms(p.h, p.variance, p.gamma, p.batches_per_epoch);
    default:
      throw DomainError("leading_term: no closed form for strategy " + std::string(to_string(strategy)));
  }
}

}  // namespace symbatch::analytic
