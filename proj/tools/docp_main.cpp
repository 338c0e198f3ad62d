// Command-line harness: solves problem files, checks gradients, and
// runs the benchmark suites with structured CSV/JSON output.

#include "docp/backward.hpp"
#include "docp/bench/report_io.hpp"
#include "docp/bench/train.hpp"
#include "docp/oracle.hpp"
#include "docp/problems/affine_quadratic_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitSolverFailure = 2;
constexpr int kExitInvalidInput = 3;

class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

docp::AffineQuadratic load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open problem file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    return docp::affine_quadratic_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("problem file is not valid JSON: " +
                       std::string(e.what()));
  } catch (const docp::Error& e) {
    throw InvalidInput(e.what());
  }
}

nlohmann::json trajectory_json(const docp::Trajectory& z) {
  nlohmann::json j;
  auto cols = [](const docp::Matrix& m) {
    std::vector<std::vector<double>> out;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out.emplace_back(m.data() + c * m.rows(), m.data() + (c + 1) * m.rows());
    }
    return out;
  };
  j["x"] = cols(z.x);
  j["u"] = cols(z.u);
  return j;
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: DOCP_WORKERS or hardware default
  std::string out_dir = ".";
};

nlohmann::json meta_header(const std::string& command,
                           const GlobalOptions& g) {
  nlohmann::json meta;
  meta["format"] = "docp-bench/1";
  meta["command"] = command;
  meta["seed"] = g.seed;
  meta["workers"] = g.workers == 0 ? docp::default_workers() : g.workers;
  return meta;
}

int run_solve(const std::string& path, const GlobalOptions& g) {
  docp::AffineQuadratic prob = load_problem(path);
  docp::OcpDefinition ocp = prob.make_ocp();
  docp::ParameterVector theta = prob.make_theta();
  docp::SqpConfig cfg;
  docp::SolveResult res =
      docp::sqp_solve(ocp, theta, docp::Trajectory(prob.n_x, prob.n_u, prob.horizon),
                      docp::Vector::Zero(ocp.dual_size()), cfg);

  nlohmann::json out = meta_header("solve", g);
  out["problem"] = path;
  out["trajectory"] = trajectory_json(res.z);
  out["lambda"] = std::vector<double>(res.lambda.data(),
                                      res.lambda.data() + res.lambda.size());
  out["sqp_iters"] = res.sqp_iters;
  out["pcg_iters"] = res.pcg_iters;
  out["kkt_inf_norm"] = res.kkt_inf_norm;
  out["converged"] = res.converged;
  std::filesystem::create_directories(g.out_dir);
  docp::bench::write_json(std::filesystem::path(g.out_dir) / "solution.json",
                          out);
  std::cout << "solved " << path << ": sqp_iters=" << res.sqp_iters
            << " kkt_inf_norm=" << res.kkt_inf_norm
            << " converged=" << (res.converged ? "yes" : "no") << "\n";
  return 0;
}

int run_grad_check(const std::string& path, double tol,
                   const GlobalOptions& g) {
  docp::AffineQuadratic prob = load_problem(path);
  docp::OcpDefinition ocp = prob.make_ocp();
  docp::ParameterVector theta = prob.make_theta();
  docp::SqpConfig cfg;
  cfg.max_sqp_iters = 1;
  cfg.step_candidates = {1.0};

  // Generic positive weights keep every parameter's gradient away from
  // zero (an unweighted quadratic is stationary in the cost weights of
  // unit-weight problems, which turns the check into pure noise).
  docp::Vector check_w(prob.n_x + prob.n_u);
  for (Eigen::Index i = 0; i < check_w.size(); ++i)
    check_w[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  docp::TrajectoryLoss loss;
  loss.value = [check_w, &prob](const docp::Trajectory& z) {
    double acc = 0.0;
    for (int t = 0; t <= z.horizon(); ++t)
      acc += z.x.col(t).dot(check_w.head(prob.n_x).asDiagonal() * z.x.col(t));
    for (int t = 0; t < z.horizon(); ++t)
      acc += z.u.col(t).dot(check_w.tail(prob.n_u).asDiagonal() * z.u.col(t));
    return acc;
  };
  loss.grad = [check_w, &prob](const docp::Trajectory& z) {
    docp::Trajectory g(z.n_x(), z.n_u(), z.horizon());
    g.x = 2.0 * check_w.head(prob.n_x).asDiagonal() * z.x;
    g.u = 2.0 * check_w.tail(prob.n_u).asDiagonal() * z.u;
    return g.flatten();
  };

  docp::SolveResult base = docp::sqp_solve(
      ocp, theta, docp::Trajectory(prob.n_x, prob.n_u, prob.horizon),
      docp::Vector::Zero(ocp.dual_size()), cfg);
  docp::Vector grad =
      docp::backward_vjp(base, loss.grad(base.z),
                         docp::Vector::Zero(ocp.dual_size()), ocp, theta,
                         cfg.pcg)
          .grad_theta;
  docp::Vector fd = docp::oracle::fd_gradient(
      [&](const docp::Vector& values) {
        docp::ParameterVector p = theta;
        p.values() = values;
        return loss.value(
            docp::sqp_solve(ocp, p,
                            docp::Trajectory(prob.n_x, prob.n_u, prob.horizon),
                            docp::Vector::Zero(ocp.dual_size()), cfg)
                .z);
      },
      theta.values(), 1e-6);

  nlohmann::json out = meta_header("grad-check", g);
  out["problem"] = path;
  double overall = 0.0;
  for (const auto& [name, range] : theta.segments()) {
    double seg_max = 0.0;
    for (Eigen::Index i = range.start; i < range.start + range.size; ++i) {
      double rel =
          std::abs(grad[i] - fd[i]) / std::max(1e-8, std::abs(fd[i]));
      seg_max = std::max(seg_max, rel);
    }
    out["max_rel_error"][name] = seg_max;
    overall = std::max(overall, seg_max);
    std::cout << "segment " << name << ": max rel error " << seg_max << "\n";
  }
  out["overall_max_rel_error"] = overall;
  out["tolerance"] = tol;
  out["pass"] = overall <= tol;
  std::filesystem::create_directories(g.out_dir);
  docp::bench::write_json(std::filesystem::path(g.out_dir) / "gradcheck.json",
                          out);
  std::cout << "overall max rel error " << overall
            << (overall <= tol ? " (pass)" : " (FAIL)") << "\n";
  return overall <= tol ? 0 : kExitSolverFailure;
}

int run_bench_linear(const std::string& preset, const std::string& mode,
                     int steps, double lr, int repeats,
                     const GlobalOptions& g) {
  docp::bench::LinearProblemSpec spec;
  try {
    spec = docp::bench::linear_preset(preset);
  } catch (const docp::Error& e) {
    throw InvalidInput(e.what());
  }
  spec.seed = g.seed;
  std::filesystem::path dir(g.out_dir);
  nlohmann::json meta = meta_header("bench-linear", g);
  meta["preset"] = preset;
  meta["mode"] = mode;
  meta["n_x"] = spec.n_x;
  meta["n_u"] = spec.n_u;
  meta["T"] = spec.horizon;
  meta["H"] = spec.episode_length;
  meta["B"] = spec.batch;

  if (mode == "rl") {
    docp::bench::LinearBatch batch = docp::bench::gen_linear(spec);
    docp::bench::RlTask task = docp::bench::make_linear_rl_task(batch);
    docp::bench::RlTrainOptions opts;
    opts.steps = steps;
    opts.learning_rate = lr;
    opts.workers = g.workers;
    docp::bench::TrainReport report = docp::bench::train_rl(task, opts);
    docp::bench::write_train_report(dir, "train_rl_" + preset, report);
    meta["failed"] = report.failed;
    if (!report.records.empty()) {
      meta["initial_reward"] = report.records.front().objective;
      meta["final_reward"] = report.records.back().objective;
      std::cout << "reward: " << report.records.front().objective << " -> "
                << report.records.back().objective << "\n";
    }
    docp::bench::write_json(dir / "meta.json", meta);
    return report.failed ? kExitSolverFailure : 0;
  }
  if (mode == "timing") {
    std::vector<docp::bench::TimingRecord> records;
    std::uint64_t run_seed = g.seed;
    auto make_task = [&](bool with_backward) {
      return [&, with_backward](docp::bench::TaskRun& run) {
        docp::bench::LinearProblemSpec s = spec;
        s.seed = run_seed;
        docp::bench::LinearBatch batch = docp::bench::gen_linear(s);
        docp::bench::RlTask task = docp::bench::make_linear_rl_task(batch);
        std::vector<docp::bench::TaskRun> local(task.batch());
        docp::parallel_for(task.ocps.size(), g.workers, [&](std::size_t i) {
          docp::RolloutOutput roll = docp::rollout(
              task.envs[i], task.ocps[i], task.thetas[i], task.x_inits[i],
              task.episode_length, task.solve_cfg);
          for (const auto& solve : roll.record.solves) {
            local[i].sqp_iters += solve.sqp_iters;
            for (int c : solve.pcg_iters) local[i].pcg_per_solve.push_back(c);
          }
          if (with_backward) {
            docp::rollout_backward(roll.record, task.envs[i], task.ocps[i],
                                   task.thetas[i], task.solve_cfg.pcg);
          }
        });
        for (const auto& l : local) {
          run.sqp_iters += l.sqp_iters;
          run.pcg_per_solve.insert(run.pcg_per_solve.end(),
                                   l.pcg_per_solve.begin(),
                                   l.pcg_per_solve.end());
        }
        ++run_seed;
      };
    };
    records.push_back(docp::bench::time_harness(preset + "-forward",
                                                make_task(false), repeats));
    run_seed = g.seed;
    records.push_back(docp::bench::time_harness(preset + "-forward+backward",
                                                make_task(true), repeats));
    docp::bench::write_timing(dir, records);
    docp::bench::write_json(dir / "meta.json", meta);
    for (const auto& r : records)
      std::cout << r.task << ": mean " << r.mean_seconds << " s, median "
                << r.median_seconds << " s, 2sigma " << r.two_sigma_seconds
                << " s\n";
    return 0;
  }
  throw InvalidInput("bench-linear: unknown mode (expected rl or timing)");
}

int run_bench_cartpole(int epochs, double lr, const GlobalOptions& g) {
  docp::bench::CartpoleIlBundle bundle = docp::bench::gen_cartpole(g.seed);
  docp::bench::IlTrainOptions opts;
  opts.epochs = epochs;
  opts.learning_rate = lr;
  opts.seed = g.seed;
  opts.workers = g.workers;
  docp::bench::TrainReport report = docp::bench::train_il(bundle, opts);

  std::filesystem::path dir(g.out_dir);
  docp::bench::write_train_report(dir, "train_il_cartpole", report);
  nlohmann::json meta = meta_header("bench-cartpole-il", g);
  meta["epochs"] = epochs;
  meta["lr"] = lr;
  meta["failed"] = report.failed;
  if (report.failed) meta["failure"] = report.failure;
  if (!report.records.empty()) {
    meta["initial_model_distance"] = *report.records.front().model_distance;
    meta["final_model_distance"] = *report.records.back().model_distance;
    std::cout << "model distance: " << *report.records.front().model_distance
              << " -> " << *report.records.back().model_distance << "\n";
  }
  meta["final_weights"] = std::vector<double>(
      report.final_learnable.data(),
      report.final_learnable.data() + report.final_learnable.size());
  docp::bench::write_json(dir / "meta.json", meta);
  return report.failed ? kExitSolverFailure : 0;
}

int run_bench_attitude(int steps, double lr, const GlobalOptions& g) {
  docp::bench::AttitudeRlBundle bundle = docp::bench::gen_attitude(g.seed);
  docp::bench::RlTask task = docp::bench::make_attitude_rl_task(bundle);
  docp::bench::RlTrainOptions opts;
  opts.steps = steps;
  opts.learning_rate = lr;
  opts.workers = g.workers;
  docp::bench::TrainReport report = docp::bench::train_rl(task, opts);

  std::filesystem::path dir(g.out_dir);
  docp::bench::write_train_report(dir, "train_rl_attitude", report);
  nlohmann::json meta = meta_header("bench-attitude-rl", g);
  meta["steps"] = steps;
  meta["lr"] = lr;
  meta["failed"] = report.failed;
  if (!report.records.empty()) {
    meta["initial_reward"] = report.records.front().objective;
    meta["final_reward"] = report.records.back().objective;
    std::cout << "reward: " << report.records.front().objective << " -> "
              << report.records.back().objective << "\n";
  }
  docp::bench::write_json(dir / "meta.json", meta);
  return report.failed ? kExitSolverFailure : 0;
}

int run_pcg_study(std::vector<double> tols, int steps,
                  const GlobalOptions& g) {
  if (tols.empty()) tols = {1e-4, 1e-8, 1e-12};
  docp::bench::PcgStudyReport report =
      docp::bench::pcg_study(tols, steps, g.seed);
  std::filesystem::path dir(g.out_dir);
  docp::bench::write_pcg_study(dir, report);
  nlohmann::json meta = meta_header("pcg-study", g);
  meta["tols"] = tols;
  meta["steps"] = steps;
  docp::bench::write_json(dir / "meta.json", meta);
  for (const auto& s : report.summaries) {
    std::cout << "tol " << s.tol << " " << s.pass << ": warm<=cold in "
              << 100.0 * s.frac_warm_not_worse << "% of solves, mean iter"
              << " reduction " << s.mean_iter_reduction << ", time speedup "
              << 100.0 * s.speedup << "%\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable optimal-control solver benchmark harness"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for all randomized tasks");
  app.add_option("--workers", g.workers,
                 "Worker threads (0: DOCP_WORKERS env or hardware)");
  app.add_option("--out", g.out_dir, "Output directory for emitted files");

  std::string problem_path;
  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("problem", problem_path, "JSON problem file")->required();

  std::string check_path;
  double check_tol = 1e-5;
  auto* check = app.add_subcommand(
      "grad-check", "Check solver gradients against finite differences");
  check->add_option("problem", check_path, "JSON problem file")->required();
  check->add_option("--tol", check_tol, "Relative-error pass threshold");

  std::string preset = "problem1";
  std::string mode = "rl";
  int linear_steps = 50;
  double linear_lr = 1e-2;
  int repeats = 3;
  auto* linear = app.add_subcommand("bench-linear",
                                    "Randomized linear RL benchmark");
  linear->add_option("--preset", preset, "problem1..problem6");
  linear->add_option("--mode", mode, "rl or timing");
  linear->add_option("--steps", linear_steps, "Gradient steps (rl mode)");
  linear->add_option("--lr", linear_lr, "Learning rate (rl mode)");
  linear->add_option("--repeats", repeats, "Timing repeats (timing mode)");

  int il_epochs = 200;
  double il_lr = 1e-2;
  auto* cartpole = app.add_subcommand("bench-cartpole-il",
                                      "Cart-pole imitation learning");
  cartpole->add_option("--epochs", il_epochs, "Training epochs");
  cartpole->add_option("--lr", il_lr, "Learning rate");

  int rl_steps = 50;
  double rl_lr = 1e-2;
  auto* attitude = app.add_subcommand("bench-attitude-rl",
                                      "Attitude stabilization RL");
  attitude->add_option("--steps", rl_steps, "Gradient steps");
  attitude->add_option("--lr", rl_lr, "Learning rate");

  std::vector<double> tols;
  int study_steps = 50;
  auto* study = app.add_subcommand("pcg-study",
                                   "Warm vs cold PCG iteration study");
  study->add_option("--tol", tols, "Exit tolerances (repeatable)");
  study->add_option("--steps", study_steps, "Perturbation sequence length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return run_solve(problem_path, g);
    if (*check) return run_grad_check(check_path, check_tol, g);
    if (*linear)
      return run_bench_linear(preset, mode, linear_steps, linear_lr, repeats,
                              g);
    if (*cartpole) return run_bench_cartpole(il_epochs, il_lr, g);
    if (*attitude) return run_bench_attitude(rl_steps, rl_lr, g);
    if (*study) return run_pcg_study(tols, study_steps, g);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const docp::Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return 0;
}
