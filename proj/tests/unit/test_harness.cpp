#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "common/property_checks.hpp"
#include "symbatch/symbatch.hpp"

using namespace symbatch;

namespace {

std::string meta_value(const Metadata& m, const std::string& key) {
  for (const auto& [k, v] : m)
    if (k == key) return v;
  return {};
}

GaussianMeanObjective unit_gaussian() {
  // σ² = N gives unit component curvature.
  return GaussianMeanObjective({-1.5, 0.25, 2.0, -0.75, 1.0, 0.5, -2.0, 0.5}, 8.0).centered();
}

}  // namespace

TEST(Stats, PairwiseSumAndSummary) {
  std::vector<double> xs(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(xs), 100.0, 1e-12);
  const std::vector<double> sq{1.0, 4.0, 9.0, 16.0};
  const auto s = summarize_squared_errors(sq);
  EXPECT_DOUBLE_EQ(s.mse, 7.5);
  EXPECT_NEAR(s.mse_stderr, std::sqrt((42.25 + 12.25 + 2.25 + 72.25) / 3.0 / 4.0), 1e-14);
  EXPECT_DOUBLE_EQ(s.rmse, std::sqrt(7.5));
  EXPECT_NEAR(s.rmse_stderr, s.mse_stderr / (2 * s.rmse), 1e-15);
}

TEST(Fit, ExactPowerLaws) {
  std::vector<std::pair<double, double>> pts;
  for (double h : {0.1, 0.05, 0.02, 0.01}) pts.emplace_back(h, 3 * h * h);
  const auto f = fit_order(pts);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  pts.clear();
  for (double h : {1.0, 4.0, 9.0}) pts.emplace_back(h, 0.5 * std::sqrt(h));
  EXPECT_NEAR(fit_order(pts).slope, 0.5, 1e-12);
}

// Least-squares slope computed independently of fit_order.
TEST(Fit, NoisyDataMatchesNormalEquations) {
  RngStream rng(4, 0);
  std::vector<std::pair<double, double>> pts;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double h : logspace(1e-3, 1e-1, 12)) {
    const double e = std::pow(h, 1.5) * (1 + 0.05 * rng.normal());
    pts.emplace_back(h, e);
    const double x = std::log(h), y = std::log(e);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double n = 12, slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const auto f = fit_order(pts);
  EXPECT_NEAR(f.slope, slope, 1e-10);
  EXPECT_NEAR(f.slope, 1.5, 0.1);
}

TEST(Fit, RejectsDegenerateInput) {
  const std::vector<std::pair<double, double>> two{{0.1, 1.0}, {0.2, 2.0}};
  EXPECT_THROW(fit_order(two), ConfigError);
  const std::vector<std::pair<double, double>> neg{{0.1, 1.0}, {0.2, 0.0}, {0.3, 2.0}};
  EXPECT_THROW(fit_order(neg), DomainError);
  const std::vector<std::pair<double, double>> same{{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}};
  EXPECT_THROW(fit_order(same), DomainError);
}

TEST(Grid, EpochCounts) {
  EXPECT_EQ(epochs_for_stepsize(0.01), 500u);
  EXPECT_EQ(epochs_for_stepsize(1e-3), 5000u);
  EXPECT_EQ(epochs_for_stepsize(0.003), 1668u);
  EXPECT_EQ(epochs_for_stepsize(0.5), 500u);
  EXPECT_THROW(epochs_for_stepsize(0.0), ConfigError);
}

TEST(Grid, DefaultGridEndpoints) {
  const auto g = default_h_grid(4.0, 8);
  ASSERT_EQ(g.size(), 20u);
  EXPECT_DOUBLE_EQ(g.back(), 1.0 / 32.0);
  EXPECT_DOUBLE_EQ(g.front(), 1.0 / 32.0 / 256.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::pow(256.0, 1.0 / 19), 1e-12);
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.optimizer = OptimizerKind::heavy_ball;
  cfg.strategy = Strategy::sms;
  cfg.batch_size = 2;
  cfg.realizations = 16;
  cfg.h_grid = {0.05, 0.1, 0.2};
  cfg.epochs = 40;
  cfg.seed = 5;
  const Vector xs{0.0};
  cfg.threads = 1;
  const auto a = bias_sweep(f, cfg, xs);
  cfg.threads = 4;
  const auto b = bias_sweep(f, cfg, xs);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].rmse, b.rows[i].rmse);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  std::atomic<int> ran{0};
  try {
    parallel_for(
        100,
        [&](std::size_t i) {
          ++ran;
          if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
        },
        3);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "17");
  }
}

TEST(Minimizer, GaussianClosedForms) {
  const GaussianMeanObjective flat({1.0, 2.0, 6.0}, 2.0);
  EXPECT_NEAR(compute_minimizer(flat).x_star[0], 3.0, 1e-12);
  const GaussianMeanObjective weighted({1.0, 2.0, 6.0}, std::vector<double>{1.0, 0.5, 4.0});
  EXPECT_NEAR(compute_minimizer(weighted).x_star[0], weighted.minimizer(), 1e-12);
}

// Cross-check against plain full-gradient descent with h = 1/L.
TEST(Minimizer, LogisticAgreesWithGradientDescent) {
  RngStream rng(7, 0);
  const auto f = make_logistic_objective(generate_simdata(1024, 10, rng));
  const auto m = compute_minimizer(f, 1e-12);
  EXPECT_LE(m.grad_norm, 1e-12);
  const double h = 1.0 / smoothness_bound(f);
  Vector x(f.dim(), 0.0), g(f.dim());
  for (std::size_t it = 0; it < 1'000'000; ++it) {
    full_gradient(f, x, g);
    if (norm(g) <= 1e-13) break;
    axpy(-h, g, x);
  }
  EXPECT_LE(checks::max_abs_diff(x, m.x_star), 1e-8);
}

TEST(Minimizer, IterationCapRaises) {
  const GaussianMeanObjective f({1.0, 2.0}, 1.0);
  EXPECT_THROW(minimize_full_gradient(f, 8.0, 0.02, Vector{100.0}, 1e-300, 3), ConvergenceError);
}

TEST(Realization, StartingAtNoiselessMinimizerStaysPut) {
  const GaussianMeanObjective f({3.0, 3.0, 3.0, 3.0}, 1.0);
  ExperimentConfig cfg;
  cfg.optimizer = OptimizerKind::strang;
  cfg.strategy = Strategy::sms;
  cfg.batch_size = 2;
  const Vector xs{3.0};
  const auto end = run_realization(f, cfg, ConstantStep{0.1}, xs, 10, 0);
  EXPECT_EQ(end.x[0], 3.0);
  EXPECT_EQ(end.v[0], 0.0);
}

TEST(Realization, DeterministicPerStream) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.optimizer = OptimizerKind::nesterov;
  cfg.strategy = Strategy::rr;
  cfg.batch_size = 3;
  const Vector xs{0.0};
  const auto a = run_realization(f, cfg, ConstantStep{0.1}, xs, 7, 4);
  const auto b = run_realization(f, cfg, ConstantStep{0.1}, xs, 7, 4);
  const auto c = run_realization(f, cfg, ConstantStep{0.1}, xs, 7, 5);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.x, c.x);
}

// Unit curvature and single-point batches turn SGD-RM into the scalar
// recursion whose stationary variance is hV/(2 − h).
TEST(Realization, SgdRmMatchesStationaryVariance) {
  const auto f = unit_gaussian();
  double v = 0;
  for (double y : f.observations()) v += y * y / 8.0;
  ExperimentConfig cfg;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.strategy = Strategy::rm;
  cfg.batch_size = 1;
  cfg.realizations = 100000;
  cfg.h_grid = {0.05};
  cfg.epochs = 30;
  const auto r = bias_sweep(f, cfg, Vector{0.0});
  const double mse = r.rows[0].rmse * r.rows[0].rmse;
  const double se = 2 * r.rows[0].rmse * r.rows[0].stderr_;
  EXPECT_NEAR(mse, analytic::sgd_rm_mse(0.05, v), 3 * se);
}

TEST(Sweep, SinglePointHasNoFit) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.realizations = 4;
  cfg.h_grid = {0.1};
  const auto r = bias_sweep(f, cfg, Vector{0.0});
  EXPECT_FALSE(r.fit);
  EXPECT_TRUE(std::isnan(r.slope()));
  std::ostringstream out;
  write_csv(r, out);
  EXPECT_NE(out.str().find("fitted_slope=undefined"), std::string::npos);
}

TEST(Sweep, DivergentStepIsFlagged) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.realizations = 4;
  cfg.h_grid = {0.1, 50.0, 0.05, 0.02};
  cfg.epochs = 200;
  const auto r = bias_sweep(f, cfg, Vector{0.0});
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows.front().h, 0.02);
  EXPECT_TRUE(r.rows.back().diverged);
  EXPECT_TRUE(std::isnan(r.rows.back().rmse));
  EXPECT_TRUE(r.any_diverged());
  EXPECT_TRUE(r.fit.has_value());
}

TEST(Sweep, ConfigErrors) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.h_grid = {0.1};
  cfg.batch_size = 9;
  EXPECT_THROW(bias_sweep(f, cfg, Vector{0.0}), ConfigError);
  cfg.batch_size = 2;
  cfg.h_grid = {};
  EXPECT_THROW(bias_sweep(f, cfg, Vector{0.0}), ConfigError);
  cfg.h_grid = {-0.1};
  EXPECT_THROW(bias_sweep(f, cfg, Vector{0.0}), ConfigError);
  cfg.h_grid = {0.1};
  cfg.strategy = Strategy::sms;
  cfg.epochs = 3;
  EXPECT_THROW(bias_sweep(f, cfg, Vector{0.0}), ConfigError);
}

TEST(Sweep, OrdersOnUnitGaussian) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.batch_size = 2;
  cfg.realizations = 100;
  cfg.seed = 3;
  cfg.h_grid = logspace(1.0 / 512, 1.0 / 16, 6);
  cfg.optimizer = OptimizerKind::sgd;
  cfg.strategy = Strategy::rm;
  EXPECT_NEAR(bias_sweep(f, cfg, Vector{0.0}).slope(), 0.5, 0.15);
  cfg.optimizer = OptimizerKind::heavy_ball;
  cfg.strategy = Strategy::sms;
  EXPECT_NEAR(bias_sweep(f, cfg, Vector{0.0}).slope(), 2.5, 0.3);
}

// When n does not divide N the short batch must be down-weighted, otherwise
// the epoch map has the wrong fixed point and the order collapses.
TEST(Sweep, RaggedBatchNeedsReweighting) {
  std::vector<double> y(17);
  RngStream rng(13, 0);
  for (double& v : y) v = rng.normal();
  const auto f = GaussianMeanObjective(y, 17.0).centered();
  ExperimentConfig cfg;
  cfg.optimizer = OptimizerKind::heavy_ball;
  cfg.strategy = Strategy::sms;
  cfg.batch_size = 4;
  cfg.realizations = 100;
  cfg.seed = 17;
  cfg.h_grid = logspace(1.0 / 1024, 1.0 / 32, 6);
  EXPECT_GE(bias_sweep(f, cfg, Vector{0.0}).slope(), 2.2);
  cfg.reweight_ragged = false;
  EXPECT_LE(bias_sweep(f, cfg, Vector{0.0}).slope(), 1.6);
}

TEST(Schedule, ConstantScheduleMatchesSweep) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.optimizer = OptimizerKind::heavy_ball;
  cfg.strategy = Strategy::rr;
  cfg.batch_size = 2;
  cfg.realizations = 20;
  cfg.h_grid = {0.1};
  cfg.epochs = 10;
  cfg.schedule = ConstantStep{0.1};
  cfg.x0 = Vector{0.0};
  const auto sweep = bias_sweep(f, cfg, Vector{0.0});
  const auto traj = schedule_run(f, cfg, Vector{0.0}, 10);
  ASSERT_EQ(traj.rows.size(), 11u);
  EXPECT_EQ(traj.rows.front().rmse, 0.0);
  EXPECT_EQ(traj.rows.back().rmse, sweep.rows[0].rmse);
}

TEST(Schedule, MomentumWithMirroringBeatsSgd) {
  auto prob = checks::make_small_logistic(256, 5);
  const auto& f = prob.f;
  const double l = logreg_constants(f.data()).smoothness;
  ExperimentConfig cfg;
  cfg.batch_size = 32;
  cfg.realizations = 30;
  cfg.seed = 9;
  cfg.gamma = std::sqrt(l);
  cfg.optimizer = OptimizerKind::sgd;
  cfg.strategy = Strategy::rm;
  cfg.schedule = DecreasingStep{l, 1.0 / 3, 8};
  const auto sgd = schedule_run(f, cfg, prob.min.x_star, 100);
  cfg.optimizer = OptimizerKind::heavy_ball;
  cfg.strategy = Strategy::sms;
  cfg.schedule = DecreasingStep{std::sqrt(l), 1.0 / 3, 8};
  const auto hb = schedule_run(f, cfg, prob.min.x_star, 100);
  EXPECT_LT(hb.rows.back().rmse, sgd.rows.back().rmse);
  EXPECT_EQ(meta_value(hb.metadata, "schedule"), "decreasing");
}

TEST(ResultsIo, SweepRoundTrip) {
  const auto f = unit_gaussian();
  ExperimentConfig cfg;
  cfg.realizations = 8;
  cfg.seed = 1234;
  cfg.h_grid = {0.02, 0.05, 0.1};
  cfg.epochs = 20;
  const auto r = bias_sweep(f, cfg, Vector{0.0});
  const auto path = (std::filesystem::temp_directory_path() / "symbatch_sweep_test.csv").string();
  write_csv(r, path);
  const auto back = read_sweep_csv(path);
  ASSERT_EQ(back.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.rows[i].h, r.rows[i].h);
    EXPECT_EQ(back.rows[i].rmse, r.rows[i].rmse);
    EXPECT_EQ(back.rows[i].stderr_, r.rows[i].stderr_);
    EXPECT_EQ(back.rows[i].epochs, r.rows[i].epochs);
  }
  EXPECT_EQ(back.slope(), r.slope());
  EXPECT_EQ(meta_value(back.metadata, "seed"), "1234");
  std::filesystem::remove(path);
  // Same seed, same numbers.
  EXPECT_EQ(bias_sweep(f, cfg, Vector{0.0}).rows[1].rmse, r.rows[1].rmse);
}

TEST(ResultsIo, LayoutHasHeaderAndOneLinePerRow) {
  SweepResult r;
  r.rows = {{0.1, 0.2, 0.01, 500, 0.5, false}, {0.2, 0.4, 0.02, 500, 0.5, false}};
  std::ostringstream out;
  write_csv(r, out);
  std::istringstream in(out.str());
  std::string line;
  int data = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    if (line == "h,rmse,stderr,epochs,wallclock_s") header = true;
    else ++data;
  }
  EXPECT_TRUE(header);
  EXPECT_EQ(data, 2);
}

TEST(ResultsIo, TrajectoryRoundTrip) {
  Trajectory t;
  t.metadata = {{"seed", "3"}};
  t.rows = {{0, 1.0, 0.0}, {1, 0.5, 0.01}, {2, 1.0 / 3, 0.002}};
  std::stringstream buf;
  write_trajectory_csv(t, buf);
  const auto back = read_trajectory_csv(buf);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.rows[2].rmse, 1.0 / 3);
  EXPECT_EQ(meta_value(back.metadata, "seed"), "3");
}

TEST(ResultsIo, MalformedFilesRaiseParseError) {
  std::istringstream bad_header("# meta: a=b\nh,rmse\n");
  EXPECT_THROW(read_sweep_csv(bad_header), ParseError);
  std::istringstream bad_row("h,rmse,stderr,epochs,wallclock_s\n0.1,abc,0,1,0\n");
  EXPECT_THROW(read_sweep_csv(bad_row), ParseError);
  EXPECT_THROW(read_sweep_csv(std::string("/nonexistent/x.csv")), IoError);
}
