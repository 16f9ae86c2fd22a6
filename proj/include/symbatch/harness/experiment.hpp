#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symbatch/batching.hpp"
#include "symbatch/core/csv.hpp"
#include "symbatch/core/error.hpp"
#include "symbatch/core/linalg.hpp"
#include "symbatch/core/rng.hpp"
#include "symbatch/harness/fit.hpp"
#include "symbatch/harness/parallel.hpp"
#include "symbatch/harness/stats.hpp"
#include "symbatch/objectives.hpp"
#include "symbatch/optimizers.hpp"
#include "symbatch/version.hpp"

namespace symbatch {

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Everything that defines a Monte-Carlo run apart from the objective itself.
struct ExperimentConfig {
  OptimizerKind optimizer = OptimizerKind::sgd;
  Strategy strategy = Strategy::rm;
  std::size_t batch_size = 1;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::size_t realizations = 100;
  std::vector<double> h_grid;
  /// Fixed epoch count. Unset: bias sweeps use epochs_for_stepsize(h).
  std::optional<std::size_t> epochs;
  /// Stepsize schedule for schedule runs.
  StepsizeSchedule schedule = ConstantStep{0.01};
  /// Start point for schedule runs; unset means the origin.
  std::optional<Vector> x0;
  bool reweight_ragged = true;
  /// Run Strang as φ^A(h/2), heavy-ball steps, φ^A(−h/2). Same map, regrouped.
  bool conjugate_strang = false;
  KickForm kick = KickForm::linear;
  unsigned threads = 0;
  /// Free-form description of the objective, echoed into output metadata.
  std::string objective_label;
};

/// Epoch count 2⌈max(5/h, 500)/2⌉; always even, so SMS periods are whole.
inline std::size_t epochs_for_stepsize(double h) {
  if (!(h > 0.0)) throw ConfigError("epochs_for_stepsize: h must be positive");
  const double base = std::max(5.0 / h, 500.0);
  return 2 * static_cast<std::size_t>(std::ceil(base / 2.0));
}

/// `count` log-spaced values from lo to hi inclusive.
inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw ConfigError("logspace: need 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = hi;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Default sweep grid: about 8 points per decade over [h_max/256, h_max],
/// h_max = 1/(2R√L).
inline std::vector<double> default_h_grid(double smoothness, std::size_t batches) {
  if (!(smoothness > 0.0) || batches == 0) throw ConfigError("default_h_grid: need L > 0 and R >= 1");
  const double h_max = 1.0 / (2.0 * static_cast<double>(batches) * std::sqrt(smoothness));
  const auto count = static_cast<std::size_t>(std::lround(8.0 * std::log10(256.0))) + 1;
  return logspace(h_max / 256.0, h_max, count);
}

inline void validate(const ExperimentConfig& cfg, std::size_t n_points) {
  if (cfg.realizations == 0) throw ConfigError("realizations must be >= 1");
  if (cfg.batch_size == 0 || cfg.batch_size > n_points)
    throw ConfigError("batch size must be in [1, N], got " + std::to_string(cfg.batch_size));
  for (double h : cfg.h_grid)
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h_grid entries must be positive");
  if (uses_momentum(cfg.optimizer) && !(cfg.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (cfg.epochs && cfg.strategy == Strategy::sms && *cfg.epochs % 2 != 0)
    throw ConfigError("SMS needs an even number of epochs");
  if (cfg.conjugate_strang && cfg.optimizer != OptimizerKind::strang)
    throw ConfigError("conjugate_strang requires the strang optimizer");
  validate(cfg.schedule);
}

inline Metadata describe(const ExperimentConfig& cfg, std::size_t n_points) {
  Metadata m;
  m.emplace_back("version", std::string(kVersion));
  m.emplace_back("objective", cfg.objective_label);
  m.emplace_back("N", std::to_string(n_points));
  m.emplace_back("optimizer", std::string(to_string(cfg.optimizer)));
  m.emplace_back("strategy", std::string(to_string(cfg.strategy)));
  m.emplace_back("n", std::to_string(cfg.batch_size));
  m.emplace_back("R", std::to_string(batches_per_epoch(n_points, cfg.batch_size)));
  if (uses_momentum(cfg.optimizer)) m.emplace_back("gamma", csv::format_double(cfg.gamma));
  m.emplace_back("seed", std::to_string(cfg.seed));
  m.emplace_back("realizations", std::to_string(cfg.realizations));
  m.emplace_back("epochs", cfg.epochs ? std::to_string(*cfg.epochs) : std::string("2*ceil(max(5/h,500)/2)"));
  if (!cfg.reweight_ragged) m.emplace_back("reweight_ragged", "false");
  if (cfg.kick == KickForm::exact) m.emplace_back("kick", "exact");
  if (cfg.conjugate_strang) m.emplace_back("conjugate_strang", "true");
  return m;
}

/// Receives (epoch, state) at the start and after every epoch.
struct NoObserver {
  void operator()(std::size_t, const OptimizerState&) const noexcept {}
};

/// One Monte-Carlo realization: `epochs` epochs of R batches from `start`
/// with v₀ = 0, the stream keyed by (cfg.seed, stream_id).
template <FiniteSumObjective Obj, class Observer = NoObserver>
OptimizerState run_realization(const Obj& f, const ExperimentConfig& cfg, const StepsizeSchedule& steps,
                               std::span<const double> start, std::size_t epochs, std::uint64_t stream_id,
                               Observer&& observe = {}) {
  if (start.size() != f.dim()) throw ConfigError("run_realization: start point has the wrong dimension");
  RngStream rng(cfg.seed, stream_id);
  BatchSchedule batches(cfg.strategy, f.size(), cfg.batch_size, cfg.reweight_ragged);
  const std::size_t r = batches.batches_per_epoch();
  OptimizerState state(Vector(start.begin(), start.end()));
  StepScratch scratch(f.dim());
  Batch batch;
  auto grad = [&](std::span<const double> at, std::span<double> out) { stochastic_gradient(f, batch, at, out); };

  const bool conjugated = cfg.conjugate_strang && cfg.optimizer == OptimizerKind::strang;
  double h = stepsize_at(steps, 0);
  if (conjugated) phi_A(state, 0.5 * h);

  observe(std::size_t{0}, state);
  for (std::size_t e = 1; e <= epochs; ++e) {
    for (std::size_t j = 0; j < r; ++j) {
      batch = batches.next(rng);
      h = stepsize_at(steps, state.k);
      if (conjugated) {
        grad(state.x, scratch.grad);
        phi_B(state, scratch.grad, h, cfg.gamma, cfg.kick);
        phi_A(state, h);
        ++state.k;
      } else {
        optimizer_step(cfg.optimizer, state, grad, h, cfg.gamma, scratch, cfg.kick);
      }
    }
    if (!state.finite()) throw DivergenceError(h, state.k);
    observe(e, state);
  }
  if (conjugated) phi_A(state, -0.5 * h);
  return state;
}

struct SweepRow {
  double h = 0.0;
  double rmse = 0.0;
  double stderr_ = 0.0;
  std::size_t epochs = 0;
  double wallclock_s = 0.0;
  bool diverged = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< sorted by h ascending
  /// Set when at least 3 non-diverged rows with positive rmse exist.
  std::optional<OrderFit> fit;
  Metadata metadata;

  double slope() const { return fit ? fit->slope : std::numeric_limits<double>::quiet_NaN(); }
  bool any_diverged() const {
    return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.diverged; });
  }
};

/// Fits the order over usable rows; leaves `fit` empty when fewer than three remain.
inline void refit(SweepResult& result) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : result.rows)
    if (!row.diverged && row.rmse > 0.0 && std::isfinite(row.rmse)) pts.emplace_back(row.h, row.rmse);
  result.fit.reset();
  if (pts.size() >= 3) result.fit = fit_order(pts);
}

/// Starts every realization at X* and reports the RMSE of the final iterate
/// for each h. Realization i always uses stream i, so all stepsizes share
/// their random batch sequences.
template <FiniteSumObjective Obj>
SweepResult bias_sweep(const Obj& f, const ExperimentConfig& cfg, std::span<const double> x_star) {
  validate(cfg, f.size());
  if (cfg.h_grid.empty()) throw ConfigError("bias_sweep: empty h_grid");
  std::vector<double> grid = cfg.h_grid;
  std::sort(grid.begin(), grid.end());

  SweepResult result;
  result.metadata = describe(cfg, f.size());
  std::vector<double> sq(cfg.realizations);
  for (double h : grid) {
    SweepRow row;
    row.h = h;
    row.epochs = cfg.epochs.value_or(epochs_for_stepsize(h));
    const StepsizeSchedule steps = ConstantStep{h};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      parallel_for(
          cfg.realizations,
          [&](std::size_t i) {
            const auto end = run_realization(f, cfg, steps, x_star, row.epochs, i);
            sq[i] = squared_distance(end.x, x_star);
          },
          cfg.threads);
      const auto s = summarize_squared_errors(sq);
      row.rmse = s.rmse;
      row.stderr_ = s.rmse_stderr;
    } catch (const DivergenceError&) {
      row.diverged = true;
      row.rmse = row.stderr_ = std::numeric_limits<double>::quiet_NaN();
    }
    row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.rows.push_back(row);
  }
  refit(result);
  return result;
}

struct TrajectoryRow {
  std::size_t epoch = 0;
  double rmse = 0.0;
  double stderr_ = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  Metadata metadata;
};

/// RMSE ‖x − X*‖ over realizations at every epoch boundary, using
/// cfg.schedule from cfg.x0 (or the origin).
template <FiniteSumObjective Obj>
Trajectory schedule_run(const Obj& f, const ExperimentConfig& cfg, std::span<const double> x_star,
                        std::size_t epochs) {
  validate(cfg, f.size());
  if (cfg.strategy == Strategy::sms && epochs % 2 != 0) throw ConfigError("SMS needs an even number of epochs");
  const Vector start = cfg.x0.value_or(Vector(f.dim(), 0.0));
  if (start.size() != f.dim()) throw ConfigError("schedule_run: start point has the wrong dimension");

  const std::size_t cols = epochs + 1;
  std::vector<double> sq(cfg.realizations * cols);
  parallel_for(
      cfg.realizations,
      [&](std::size_t i) {
        run_realization(f, cfg, cfg.schedule, start, epochs, i, [&](std::size_t e, const OptimizerState& s) {
          sq[i * cols + e] = squared_distance(s.x, x_star);
        });
      },
      cfg.threads);

  Trajectory out;
  out.metadata = describe(cfg, f.size());
  out.metadata.erase(std::remove_if(out.metadata.begin(), out.metadata.end(),
                                    [](const auto& kv) { return kv.first == "epochs"; }),
                     out.metadata.end());
  out.metadata.emplace_back("epochs", std::to_string(epochs));
  if (const auto* s = std::get_if<DecreasingStep>(&cfg.schedule)) {
    out.metadata.emplace_back("schedule", "decreasing");
    out.metadata.emplace_back("schedule_scale", csv::format_double(s->smoothness));
    out.metadata.emplace_back("delta", csv::format_double(s->delta));
  } else {
    out.metadata.emplace_back("schedule", "constant");
    out.metadata.emplace_back("h", csv::format_double(std::get<ConstantStep>(cfg.schedule).h));
  }
  std::vector<double> column(cfg.realizations);
  for (std::size_t e = 0; e < cols; ++e) {
    for (std::size_t i = 0; i < cfg.realizations; ++i) column[i] = sq[i * cols + e];
    const auto s = summarize_squared_errors(column);
    out.rows.push_back({e, s.rmse, s.rmse_stderr});
  }
  return out;
}

}  // namespace symbatch
