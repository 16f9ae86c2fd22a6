#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "symbatch/core/error.hpp"

namespace symbatch {

struct OrderFit {
  double slope;
  double intercept;  ///< natural-log intercept: log rmse ≈ intercept + slope · log h
};

/// Least-squares line through (log h, log rmse).
inline OrderFit fit_order(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw ConfigError("fit_order: need at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [h, e] : points) {
    if (!(h > 0.0) || !(e > 0.0))
      throw DomainError("fit_order: stepsizes and errors must be positive");
    sx += std::log(h);
    sy += std::log(e);
  }
  const double m = static_cast<double>(points.size());
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [h, e] : points) {
    const double dx = std::log(h) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (sxx == 0.0) throw DomainError("fit_order: all stepsizes are equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace symbatch
