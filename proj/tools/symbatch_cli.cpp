// Command-line driver for bias sweeps, schedule runs and the model problem.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "symbatch/symbatch.hpp"

namespace sb = symbatch;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (auto field : sb::csv::split(text)) {
    const auto v = sb::csv::parse_double(field);
    if (!v) throw sb::ConfigError(std::string(what) + ": '" + std::string(field) + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

struct ObjectiveOptions {
  std::string kind = "simdata";
  std::string data_path;
  std::size_t sim_n = 1024;
  std::size_t sim_d = 10;
  std::uint64_t data_seed = 7;
  std::size_t gauss_n = 64;
  std::string y_list;
  std::string sigma_sq_list;

  void add_to(CLI::App& app) {
    app.add_option("--objective", kind, "Objective: logreg (needs --data), simdata or gaussian")
        ->check(CLI::IsMember({"logreg", "simdata", "gaussian"}))
        ->capture_default_str();
    app.add_option("--data", data_path, "Dataset CSV for --objective logreg (label,feat_1,...,feat_d)");
    app.add_option("--sim-n", sim_n, "SimData size N")->capture_default_str();
    app.add_option("--sim-d", sim_d, "SimData dimension d")->capture_default_str();
    app.add_option("--data-seed", data_seed, "Seed for generated data")->capture_default_str();
    app.add_option("--gauss-n", gauss_n, "Gaussian problem size when --y is not given")->capture_default_str();
    app.add_option("--y", y_list, "Gaussian observations, comma separated");
    app.add_option("--sigma-sq", sigma_sq_list, "Gaussian variances: one value or one per observation (default N)");
  }
};

using AnyObjective = std::variant<sb::LogisticObjective, sb::GaussianMeanObjective>;

struct BuiltObjective {
  AnyObjective objective;
  std::string label;
  double smoothness;     ///< stepsize ceiling constant (L + λ for logistic)
  double schedule_l;     ///< L in the decreasing schedule
  double gamma_default;  ///< √L
};

BuiltObjective build_objective(const ObjectiveOptions& o) {
  if (o.kind == "gaussian") {
    std::vector<double> y = parse_list(o.y_list, "--y");
    if (y.empty()) {
      sb::RngStream rng(o.data_seed, 0);
      y.resize(o.gauss_n);
      for (double& v : y) v = rng.normal();
    }
    std::vector<double> s2 = parse_list(o.sigma_sq_list, "--sigma-sq");
    if (s2.empty()) s2.assign(1, static_cast<double>(y.size()));
    if (s2.size() == 1) s2.assign(y.size(), s2[0]);
    sb::GaussianMeanObjective f(y, s2);
    const double l = f.smoothness();
    return {std::move(f), "gaussian N=" + std::to_string(y.size()), l, l, std::sqrt(l)};
  }
  std::optional<sb::Dataset> data;
  std::string label;
  if (o.kind == "logreg") {
    if (o.data_path.empty()) throw sb::ConfigError("--objective logreg needs --data PATH");
    data = sb::load_dataset_csv(o.data_path);
    label = "logreg data=" + o.data_path;
  } else {
    sb::RngStream rng(o.data_seed, 0);
    data = sb::generate_simdata(o.sim_n, o.sim_d, rng);
    label = "simdata N=" + std::to_string(o.sim_n) + " d=" + std::to_string(o.sim_d) +
            " data_seed=" + std::to_string(o.data_seed);
  }
  const auto c = sb::logreg_constants(*data);
  sb::LogisticObjective f(std::move(*data), c.lambda);
  return {std::move(f), label, c.smoothness + c.lambda, c.smoothness, std::sqrt(c.smoothness)};
}

struct RunOptions {
  std::string optimizer = "sgd";
  std::string strategy = "rm";
  std::size_t n = 0;
  std::optional<double> gamma;
  std::uint64_t seed = 1;
  std::size_t reps = 100;
  std::string hgrid;
  std::optional<std::size_t> epochs;
  unsigned threads = 0;
  std::string out;

  void add_to(CLI::App& app) {
    app.add_option("--optimizer", optimizer, "sgd, hb, nag, strang or euler")
        ->check(CLI::IsMember({"sgd", "hb", "nag", "strang", "euler"}))
        ->capture_default_str();
    app.add_option("--strategy", strategy, "rm, rr, sms, ig or so")
        ->check(CLI::IsMember({"rm", "rr", "sms", "ig", "so"}))
        ->capture_default_str();
    app.add_option("--n", n, "Batch size (default: ceil(N/8), i.e. R = 8)");
    app.add_option("--gamma", gamma, "Friction for momentum methods (default: sqrt(L))");
    app.add_option("--seed", seed, "Experiment seed")->capture_default_str();
    app.add_option("--reps", reps, "Realizations")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
  }
};

sb::ExperimentConfig make_config(const RunOptions& r, const BuiltObjective& b, std::size_t n_points) {
  sb::ExperimentConfig cfg;
  cfg.optimizer = sb::parse_optimizer(r.optimizer);
  cfg.strategy = sb::parse_strategy(r.strategy);
  cfg.batch_size = r.n != 0 ? r.n : (n_points + 7) / 8;
  cfg.gamma = r.gamma.value_or(b.gamma_default);
  cfg.seed = r.seed;
  cfg.realizations = r.reps;
  cfg.epochs = r.epochs;
  cfg.threads = r.threads;
  cfg.objective_label = b.label;
  return cfg;
}

template <class Fn>
decltype(auto) with_objective(const BuiltObjective& b, Fn&& fn) {
  return std::visit(std::forward<Fn>(fn), b.objective);
}

void print_sweep(const sb::SweepResult& res) {
  std::cout << std::setw(14) << "h" << std::setw(16) << "rmse" << std::setw(14) << "stderr" << std::setw(10)
            << "epochs" << '\n';
  for (const auto& row : res.rows) {
    std::cout << std::setw(14) << std::setprecision(6) << row.h << std::setw(16) << row.rmse << std::setw(14)
              << row.stderr_ << std::setw(10) << row.epochs << (row.diverged ? "  diverged" : "") << '\n';
  }
  if (res.fit)
    std::cout << "fitted slope " << std::setprecision(4) << res.fit->slope << '\n';
  else
    std::cout << "fitted slope undefined (fewer than 3 usable points)\n";
}

int run_bias_sweep(const ObjectiveOptions& oo, const RunOptions& ro) {
  const auto built = build_objective(oo);
  return with_objective(built, [&](const auto& f) {
    auto cfg = make_config(ro, built, f.size());
    cfg.h_grid = parse_list(ro.hgrid, "--hgrid");
    if (cfg.h_grid.empty())
      cfg.h_grid = sb::default_h_grid(built.smoothness, sb::batches_per_epoch(f.size(), cfg.batch_size));
    const auto mini = sb::compute_minimizer(f);
    auto res = sb::bias_sweep(f, cfg, mini.x_star);
    print_sweep(res);
    if (!ro.out.empty()) sb::write_csv(res, ro.out);
    return res.any_diverged() ? kExitDivergence : 0;
  });
}

int run_schedule(const ObjectiveOptions& oo, const RunOptions& ro, double delta) {
  const auto built = build_objective(oo);
  return with_objective(built, [&](const auto& f) {
    auto cfg = make_config(ro, built, f.size());
    const std::size_t r = sb::batches_per_epoch(f.size(), cfg.batch_size);
    cfg.schedule = sb::DecreasingStep{sb::schedule_scale(cfg.optimizer, built.schedule_l), delta, r};
    const std::size_t epochs = ro.epochs.value_or(200);
    const auto mini = sb::compute_minimizer(f);
    const auto traj = sb::schedule_run(f, cfg, mini.x_star, epochs);
    for (const auto& row : traj.rows)
      if (row.epoch % 20 == 0 || row.epoch == epochs)
        std::cout << "epoch " << std::setw(5) << row.epoch << "  rmse " << std::setprecision(6) << row.rmse << '\n';
    if (!ro.out.empty()) sb::write_trajectory_csv(traj, ro.out);
    return 0;
  });
}

int run_minimize(const ObjectiveOptions& oo, double tol) {
  const auto built = build_objective(oo);
  return with_objective(built, [&](const auto& f) {
    const auto m = sb::compute_minimizer(f, tol);
    std::cout << std::setprecision(17) << "f_star " << m.f_star << "\ngrad_norm " << m.grad_norm << "\niterations "
              << m.iterations << "\nx_star " << sb::csv::join_doubles(m.x_star) << '\n';
    return 0;
  });
}

int run_model_problem(double h, double v, std::size_t r, double gamma, std::size_t reps, std::uint64_t seed,
                      unsigned threads, const std::string& out_path) {
  namespace an = sb::analytic;
  std::ostringstream table;
  table << "dynamics,strategy,R,analytic,leading,mc,mc_stderr,z\n";
  std::cout << std::left << std::setw(6) << "dyn" << std::setw(5) << "str" << std::right << std::setw(16)
            << "analytic" << std::setw(16) << "leading" << std::setw(16) << "monte-carlo" << std::setw(10) << "z"
            << '\n';
  for (auto dyn : {an::Dynamics::first_order, an::Dynamics::momentum}) {
    for (auto s : {sb::Strategy::rm, sb::Strategy::rr, sb::Strategy::sms}) {
      const an::ModelParams p{h, v, r, gamma};
      const double exact = an::asymptotic_mse(dyn, s, p);
      const double lead = an::leading_term(dyn, s, p);
      std::optional<sb::MonteCarloEstimate> mc;
      if (reps >= 2) mc = sb::simulate_model_mse(dyn, s, p, reps, seed, threads);
      const double z = mc && mc->stderr_ > 0.0 ? (mc->mean - exact) / mc->stderr_ : NAN;
      std::cout << std::left << std::setw(6) << an::to_string(dyn) << std::setw(5) << sb::to_string(s) << std::right
                << std::setprecision(6) << std::setw(16) << exact << std::setw(16) << lead << std::setw(16)
                << (mc ? mc->mean : NAN) << std::setw(10) << std::setprecision(3) << z << '\n';
      table << an::to_string(dyn) << ',' << sb::to_string(s) << ',' << r << ',' << sb::csv::format_double(exact)
            << ',' << sb::csv::format_double(lead) << ',' << sb::csv::format_double(mc ? mc->mean : NAN) << ','
            << sb::csv::format_double(mc ? mc->stderr_ : NAN) << ',' << sb::csv::format_double(z) << '\n';
    }
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw sb::IoError("cannot open '" + out_path + "' for writing");
    out << table.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minibatching-strategy bias experiments"};
  app.require_subcommand(1);

  ObjectiveOptions oo;
  RunOptions ro;

  auto* sweep = app.add_subcommand("bias-sweep", "RMSE of the final iterate from X* over a stepsize grid");
  oo.add_to(*sweep);
  ro.add_to(*sweep);
  sweep->add_option("--hgrid", ro.hgrid, "Comma-separated stepsizes (default: 8 per decade below 1/(2R sqrt(L)))");
  sweep->add_option("--epochs", ro.epochs, "Fixed epoch count (default: 2*ceil(max(5/h,500)/2))");
  sweep->add_option("--out", ro.out, "Output CSV");

  double delta = 1.0 / 3.0;
  auto* sched = app.add_subcommand("schedule", "Decreasing-stepsize run, RMSE at every epoch");
  ObjectiveOptions oo_s;
  RunOptions ro_s;
  oo_s.add_to(*sched);
  ro_s.add_to(*sched);
  sched->add_option("--delta", delta, "Decay rate delta of the schedule")->capture_default_str();
  sched->add_option("--epochs", ro_s.epochs, "Epochs (default 200)");
  sched->add_option("--out", ro_s.out, "Output CSV");

  double mp_h = 0.02, mp_v = 1.0, mp_gamma = 1.0;
  std::size_t mp_r = 8, mp_reps = 100;
  std::uint64_t mp_seed = 1;
  unsigned mp_threads = 0;
  std::string mp_out;
  auto* model = app.add_subcommand("model-problem", "Closed-form MSE table with Monte-Carlo verification");
  model->set_help_flag("--help", "Print this help message and exit");
  model->add_option("--h", mp_h, "Rescaled stepsize")->capture_default_str();
  model->add_option("--V", mp_v, "Variance of the batch mean")->capture_default_str();
  model->add_option("--R", mp_r, "Batches per epoch")->capture_default_str();
  model->add_option("--gamma", mp_gamma, "Rescaled friction")->capture_default_str();
  model->add_option("--reps", mp_reps, "Monte-Carlo realizations (0 or 1: analytic only)")->capture_default_str();
  model->add_option("--seed", mp_seed, "Seed")->capture_default_str();
  model->add_option("--threads", mp_threads, "Worker threads")->capture_default_str();
  model->add_option("--out", mp_out, "Output CSV");

  sb::VariableVarianceOptions fo;
  std::string fo_strategy = "sms", fo_grid, fo_sigma, fo_out;
  auto* fig = app.add_subcommand("variable-variance", "Variable-variance Gaussian problem, Euler momentum");
  fig->add_option("--strategy", fo_strategy, "rm, rr or sms")
      ->check(CLI::IsMember({"rm", "rr", "sms"}))
      ->capture_default_str();
  fig->add_option("--gamma", fo.gamma, "Friction")->capture_default_str();
  fig->add_option("--hgrid", fo_grid, "Comma-separated stepsizes (default: 17 points over [1e-6, 1e-4])");
  fig->add_option("--sigma-sq", fo_sigma, "Variances (default 2.5,1.5,0.05,0.15,0.1)");
  fig->add_option("--reps", fo.realizations, "Realizations")->capture_default_str();
  fig->add_option("--seed", fo.seed, "Seed")->capture_default_str();
  fig->add_option("--threads", fo.threads, "Worker threads")->capture_default_str();
  fig->add_option("--out", fo_out, "Output CSV");

  double tol = 0.0;
  ObjectiveOptions oo_m;
  auto* mini = app.add_subcommand("minimize", "Full-gradient minimizer X* and F(X*)");
  oo_m.add_to(*mini);
  mini->add_option("--tol", tol, "Gradient-norm tolerance (default 1e-13*max(1,|grad F(0)|))");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sweep) return run_bias_sweep(oo, ro);
    if (*sched) return run_schedule(oo_s, ro_s, delta);
    if (*model) return run_model_problem(mp_h, mp_v, mp_r, mp_gamma, mp_reps, mp_seed, mp_threads, mp_out);
    if (*fig) {
      fo.strategy = sb::parse_strategy(fo_strategy);
      if (!fo_grid.empty()) fo.h_grid = parse_list(fo_grid, "--hgrid");
      if (!fo_sigma.empty()) fo.sigma_sq = parse_list(fo_sigma, "--sigma-sq");
      const auto res = sb::variable_variance_experiment(fo);
      print_sweep(res);
      if (!fo_out.empty()) sb::write_csv(res, fo_out);
      return res.any_diverged() ? kExitDivergence : 0;
    }
    if (*mini) return run_minimize(oo_m, tol);
  } catch (const sb::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const sb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sb::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sb::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sb::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
