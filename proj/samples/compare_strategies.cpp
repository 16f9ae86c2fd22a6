// Bias of SGD and heavy ball under three batching strategies on a small
// Gaussian mean problem, plus the matching closed-form predictions.
//
//   compare_strategies [realizations]

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "symbatch/symbatch.hpp"

namespace sb = symbatch;

int main(int argc, char** argv) {
  const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 50;

  // N = 32 points with σ² = N: every component has unit curvature.
  const std::size_t n_points = 32, batch = 4;
  std::vector<double> y(n_points);
  sb::RngStream data_rng(2024, 0);
  for (double& v : y) v = data_rng.normal();
  const auto f = sb::GaussianMeanObjective(y, static_cast<double>(n_points)).centered();
  const sb::Vector x_star{0.0};
  const std::size_t r = sb::batches_per_epoch(n_points, batch);

  sb::ExperimentConfig cfg;
  cfg.batch_size = batch;
  cfg.realizations = reps;
  cfg.seed = 1;
  cfg.h_grid = sb::logspace(1.0 / 1024, 1.0 / 64, 5);

  std::cout << "method     slope   rmse at h=" << cfg.h_grid.back() << '\n';
  for (auto opt : {sb::OptimizerKind::sgd, sb::OptimizerKind::heavy_ball}) {
    for (auto s : {sb::Strategy::rm, sb::Strategy::rr, sb::Strategy::sms}) {
      cfg.optimizer = opt;
      cfg.strategy = s;
      const auto res = sb::bias_sweep(f, cfg, x_star);
      const std::string label = std::string(sb::to_string(opt)) + "-" + std::string(sb::to_string(s));
      std::cout << std::left << std::setw(9) << label << std::right << std::fixed << std::setprecision(2) << std::setw(6) << res.slope() << "   "
                << std::scientific << std::setprecision(3) << res.rows.back().rmse << '\n'
                << std::defaultfloat;
    }
  }

  // Closed forms for the rescaled scalar model with the same R.
  double v = 0.0;
  for (double yi : f.observations()) v += yi * yi;
  v /= static_cast<double>(n_points);
  const double h = 0.01;
  std::cout << "\nstationary MSE of the model recursion at h=" << h << ", R=" << r << '\n';
  for (auto dyn : {sb::analytic::Dynamics::first_order, sb::analytic::Dynamics::momentum})
    for (auto s : {sb::Strategy::rm, sb::Strategy::rr, sb::Strategy::sms}) {
      const sb::analytic::ModelParams p{h, v, r, 1.0};
      std::cout << std::left << std::setw(5) << sb::analytic::to_string(dyn) << std::setw(4) << sb::to_string(s)
                << std::right << std::setw(14) << sb::analytic::asymptotic_mse(dyn, s, p) << '\n';
    }
  return 0;
}
