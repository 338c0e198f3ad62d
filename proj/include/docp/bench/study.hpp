#pragma once

#include "docp/bench/train.hpp"

#include <algorithm>
#include <cmath>

namespace docp {
namespace bench {

/// One warm-vs-cold measurement: a forward or backward Schur solve on
/// one step of the perturbation sequence.
struct WarmColdRow {
  double tol = 0.0;
  int step = 0;
  std::string pass;  // "forward" | "backward"
  int cold_iters = 0;
  int warm_iters = 0;
  double cold_seconds = 0.0;
  double warm_seconds = 0.0;
};

struct WarmColdSummary {
  double tol = 0.0;
  std::string pass;
  double frac_warm_not_worse = 0.0;  // warm_iters <= cold_iters
  double mean_iter_reduction = 0.0;  // mean(cold - warm)
  double speedup = 0.0;              // (cold - warm) / cold, wall time
};

struct PcgStudyReport {
  std::vector<WarmColdRow> rows;
  std::vector<WarmColdSummary> summaries;
};

namespace detail {

inline void perturb_coefficients(AffineQuadratic& p, std::mt19937_64& rng,
                                 double magnitude) {
  std::uniform_real_distribution<double> u(-magnitude, magnitude);
  auto jitter = [&](double& v) { v *= 1.0 + u(rng); };
  for (Eigen::Index i = 0; i < p.A.size(); ++i) jitter(p.A.data()[i]);
  for (Eigen::Index i = 0; i < p.B.size(); ++i) jitter(p.B.data()[i]);
  for (Eigen::Index i = 0; i < p.b_affine.size(); ++i)
    jitter(p.b_affine.data()[i]);
  for (Eigen::Index i = 0; i < p.x_s.size(); ++i) jitter(p.x_s.data()[i]);
}

}  // namespace detail

/// Warm-starting study: a sequence of slowly drifting convex instances
/// (coefficient perturbation <= 1% per step) is solved cold
/// (zero initial guess) and warm (previous step's solution) at each
/// exit tolerance, for both the forward Schur solve and the backward
/// (adjoint) solve with an RL-style cotangent.
inline PcgStudyReport pcg_study(const std::vector<double>& tols,
                                int steps = 50, std::uint64_t seed = 0,
                                int n_x = 8, int n_u = 4, int horizon = 30) {
  PcgStudyReport report;
  for (double tol : tols) {
    std::mt19937_64 rng(seed);
    AffineQuadratic inst = random_convex_instance(n_x, n_u, horizon, rng);
    Trajectory zero(n_x, n_u, horizon);

    Vector warm_lambda = Vector::Zero(inst.make_ocp().dual_size());
    Vector warm_lambda_tilde = warm_lambda;
    PcgConfig cfg;
    cfg.epsilon = tol;

    for (int step = 0; step < steps; ++step) {
      OcpDefinition ocp = inst.make_ocp();
      ParameterVector theta = inst.make_theta();
      QpData qp = linearize(ocp, zero, theta);
      SchurSystem sys = assemble_schur(qp);
      Vector gamma = assemble_gamma(qp, sys, qp.flat_b(), qp.flat_d());
      Vector lambda0 = Vector::Zero(sys.dim());

      WarmColdRow fwd;
      fwd.tol = tol;
      fwd.step = step;
      fwd.pass = "forward";
      double t0 = detail::now_seconds();
      PcgOutcome cold = pcg_solve(sys, gamma, lambda0, cfg);
      double t1 = detail::now_seconds();
      PcgOutcome warm = pcg_solve(sys, gamma, warm_lambda, cfg);
      double t2 = detail::now_seconds();
      fwd.cold_iters = cold.iters;
      fwd.warm_iters = warm.iters;
      fwd.cold_seconds = t1 - t0;
      fwd.warm_seconds = t2 - t1;
      report.rows.push_back(fwd);
      warm_lambda = warm.lambda;

      // Backward pass with the RL reward cotangent at the step's solution.
      Trajectory z_sol = recover_primal(qp, sys, warm.lambda, qp.flat_b());
      Vector loss_grad = 2.0 * z_sol.flatten();
      Vector b = -loss_grad;
      Vector gamma_b =
          assemble_gamma(qp, sys, b, Vector::Zero(qp.dual_size()));
      WarmColdRow bwd;
      bwd.tol = tol;
      bwd.step = step;
      bwd.pass = "backward";
      t0 = detail::now_seconds();
      PcgOutcome cold_b = pcg_solve(sys, gamma_b, lambda0, cfg);
      t1 = detail::now_seconds();
      PcgOutcome warm_b = pcg_solve(sys, gamma_b, warm_lambda_tilde, cfg);
      t2 = detail::now_seconds();
      bwd.cold_iters = cold_b.iters;
      bwd.warm_iters = warm_b.iters;
      bwd.cold_seconds = t1 - t0;
      bwd.warm_seconds = t2 - t1;
      report.rows.push_back(bwd);
      warm_lambda_tilde = warm_b.lambda;

      detail::perturb_coefficients(inst, rng, 0.01);
    }

    for (const char* pass : {"forward", "backward"}) {
      WarmColdSummary s;
      s.tol = tol;
      s.pass = pass;
      long cold_total = 0, warm_total = 0, not_worse = 0, count = 0;
      double cold_time = 0.0, warm_time = 0.0;
      for (const auto& row : report.rows) {
        if (row.tol != tol || row.pass != pass) continue;
        if (row.step == 0) continue;  // no previous solution yet
        ++count;
        cold_total += row.cold_iters;
        warm_total += row.warm_iters;
        if (row.warm_iters <= row.cold_iters) ++not_worse;
        cold_time += row.cold_seconds;
        warm_time += row.warm_seconds;
      }
      if (count > 0) {
        s.frac_warm_not_worse = static_cast<double>(not_worse) / count;
        s.mean_iter_reduction =
            static_cast<double>(cold_total - warm_total) / count;
        s.speedup = cold_time > 0.0 ? (cold_time - warm_time) / cold_time : 0.0;
      }
      report.summaries.push_back(s);
    }
  }
  return report;
}

/// Wall-time statistics over repeated runs of a named task.
struct TimingRecord {
  std::string task;
  int repeats = 0;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  double two_sigma_seconds = 0.0;
  long total_sqp_iters = 0;
  long total_pcg_iters = 0;
  std::vector<long> pcg_iteration_histogram;  // per-solve PCG counts
};

struct TaskRun {
  long sqp_iters = 0;
  std::vector<long> pcg_per_solve;
};

/// Runs `task` `repeats` times and aggregates wall times and iteration
/// counts. The task reports its per-solve iteration counts through the
/// TaskRun it fills.
inline TimingRecord time_harness(const std::string& name,
                                 const std::function<void(TaskRun&)>& task,
                                 int repeats) {
  require(repeats >= 1, "time_harness: repeats must be >= 1");
  TimingRecord rec;
  rec.task = name;
  rec.repeats = repeats;
  std::vector<double> times(repeats);
  for (int r = 0; r < repeats; ++r) {
    TaskRun run;
    double t0 = detail::now_seconds();
    task(run);
    times[r] = detail::now_seconds() - t0;
    rec.total_sqp_iters += run.sqp_iters;
    for (long c : run.pcg_per_solve) {
      rec.total_pcg_iters += c;
      rec.pcg_iteration_histogram.push_back(c);
    }
  }
  double sum = 0.0;
  for (double t : times) sum += t;
  rec.mean_seconds = sum / repeats;
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  rec.median_seconds = sorted[sorted.size() / 2];
  double var = 0.0;
  for (double t : times) var += (t - rec.mean_seconds) * (t - rec.mean_seconds);
  rec.two_sigma_seconds = repeats > 1 ? 2.0 * std::sqrt(var / (repeats - 1)) : 0.0;
  return rec;
}

}  // namespace bench
}  // namespace docp
