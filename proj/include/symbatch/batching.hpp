#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symbatch/core/error.hpp"
#include "symbatch/core/rng.hpp"

namespace symbatch {

/// How minibatches are drawn.
///  - rm:  fresh without-replacement batch every iteration (Robbins-Monro)
///  - rr:  random partition of the data, reshuffled every epoch
///  - sms: random partition traversed forward then backward, reshuffled every two epochs
///  - ig:  fixed contiguous blocks, never shuffled
///  - so:  one shuffle at the start, then fixed
enum class Strategy { rm, rr, sms, ig, so };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::rm: return "rm";
    case Strategy::rr: return "rr";
    case Strategy::sms: return "sms";
    case Strategy::ig: return "ig";
    case Strategy::so: return "so";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "rm") return Strategy::rm;
  if (name == "rr") return Strategy::rr;
  if (name == "sms") return Strategy::sms;
  if (name == "ig") return Strategy::ig;
  if (name == "so") return Strategy::so;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

/// Batches per epoch, ⌈N/n⌉.
inline std::size_t batches_per_epoch(std::size_t n_points, std::size_t batch_size) {
  return (n_points + batch_size - 1) / batch_size;
}

namespace detail {

/// Partial Fisher-Yates: afterwards the first k entries of `pool` are a
/// uniformly random ordered k-subset of its contents.
inline void shuffle_prefix(std::vector<std::size_t>& pool, std::size_t k, RngStream& rng) {
  const std::size_t n = pool.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(pool[i], pool[j]);
  }
}

}  // namespace detail

/// m×n matrix of pairwise-distinct dataset indices, stored row-major.
class BatchMatrix {
 public:
  BatchMatrix() = default;
  BatchMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const std::size_t> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }
  std::span<const std::size_t> entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> entries_;
};

/// Draws m·n distinct indices from [0, N) without replacement.
inline BatchMatrix sample_batch_matrix(std::size_t n_points, std::size_t batch_size, std::size_t rows,
                                       RngStream& rng) {
  if (batch_size == 0) throw ConfigError("sample_batch_matrix: batch size must be >= 1");
  if (rows * batch_size > n_points)
    throw ConfigError("sample_batch_matrix: m*n = " + std::to_string(rows * batch_size) +
                      " exceeds N = " + std::to_string(n_points));
  std::vector<std::size_t> pool(n_points);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  detail::shuffle_prefix(pool, rows * batch_size, rng);
  pool.resize(rows * batch_size);
  return BatchMatrix(rows, batch_size, std::move(pool));
}

/// One minibatch. `indices` views storage owned by the schedule and stays
/// valid until the next call to next().
struct Batch {
  std::span<const std::size_t> indices;
  double weight = 1.0;  ///< |indices| / n, so ragged batches contribute in proportion
};

/// Per-iteration batch stream for one strategy.
///
/// With R = ⌈N/n⌉ the epoch is a permutation cut into R rows; when n does not
/// divide N the last row is short and carries weight n_R/n. Setting
/// `reweight_ragged` to false forces that weight to 1 (plain averaging over
/// the short batch), which is only useful to demonstrate the loss of order.
class BatchSchedule {
 public:
  BatchSchedule(Strategy strategy, std::size_t n_points, std::size_t batch_size,
                bool reweight_ragged = true)
      : strategy_(strategy),
        n_points_(n_points),
        batch_size_(batch_size),
        reweight_ragged_(reweight_ragged),
        order_(n_points) {
    if (n_points == 0) throw ConfigError("BatchSchedule: N must be >= 1");
    if (batch_size == 0 || batch_size > n_points)
      throw ConfigError("BatchSchedule: batch size must be in [1, N]");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    n_batches_ = symbatch::batches_per_epoch(n_points, batch_size);
  }

  Strategy strategy() const noexcept { return strategy_; }
  std::size_t size() const noexcept { return n_points_; }
  std::size_t batch_size() const noexcept { return batch_size_; }
  /// R, the number of iterations in one epoch.
  std::size_t batches_per_epoch() const noexcept { return n_batches_; }
  /// Iterations between resamples: 1 for RM, R for RR, 2R for SMS.
  std::size_t period() const noexcept {
    switch (strategy_) {
      case Strategy::rm: return 1;
      case Strategy::sms: return 2 * n_batches_;
      default: return n_batches_;
    }
  }
  /// Iteration counter within the current resampling period.
  std::size_t phase() const noexcept { return phase_; }
  /// Current ordering of [0, N); row r of the epoch is order[r·n, min((r+1)·n, N)).
  std::span<const std::size_t> order() const noexcept { return order_; }

  Batch next(RngStream& rng) {
    if (strategy_ == Strategy::rm) {
      detail::shuffle_prefix(order_, batch_size_, rng);
      return {std::span<const std::size_t>(order_.data(), batch_size_), 1.0};
    }
    if (phase_ == 0) refresh(rng);
    std::size_t row = phase_;
    if (strategy_ == Strategy::sms && phase_ >= n_batches_) row = 2 * n_batches_ - 1 - phase_;
    phase_ = (phase_ + 1) % period();
    return row_batch(row);
  }

 private:
  void refresh(RngStream& rng) {
    switch (strategy_) {
      case Strategy::rr:
      case Strategy::sms:
        detail::shuffle_prefix(order_, n_points_, rng);
        break;
      case Strategy::so:
        if (!sampled_once_) detail::shuffle_prefix(order_, n_points_, rng);
        break;
      case Strategy::ig:
      case Strategy::rm:
        break;
    }
    sampled_once_ = true;
  }

  Batch row_batch(std::size_t row) const {
    const std::size_t begin = row * batch_size_;
    const std::size_t end = std::min(begin + batch_size_, n_points_);
    const std::size_t count = end - begin;
    const double weight = reweight_ragged_ ? static_cast<double>(count) / static_cast<double>(batch_size_) : 1.0;
    return {std::span<const std::size_t>(order_.data() + begin, count), weight};
  }

  Strategy strategy_;
  std::size_t n_points_;
  std::size_t batch_size_;
  bool reweight_ragged_;
  std::size_t n_batches_ = 0;
  std::size_t phase_ = 0;
  bool sampled_once_ = false;
  std::vector<std::size_t> order_;
};

inline Batch next_batch(BatchSchedule& schedule, RngStream& rng) { return schedule.next(rng); }

}  // namespace symbatch
