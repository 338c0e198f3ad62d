#pragma once

#include "docp/bench/generators.hpp"

#include <chrono>
#include <optional>

namespace docp {
namespace bench {

struct EpochRecord {
  int epoch = 0;
  double objective = 0.0;
  /// |theta - theta*|_2 over the learnable segments, when theta* is known.
  std::optional<double> model_distance;
  double wall_seconds = 0.0;
  long sqp_iters = 0;
  long pcg_iters = 0;
};

struct TrainReport {
  std::vector<EpochRecord> records;
  bool failed = false;
  std::string failure;
  Vector final_learnable;
};

namespace detail {

inline double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

struct IlTrainOptions {
  int epochs = 200;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;  // draws the initial weights from U([0,1])
  int max_sqp_iters = 5;   // training solves are capped, per the benchmark
  unsigned workers = 0;
  /// When set, skips the random draw (used to start at known weights).
  std::optional<Vector> initial_weights;
};

/// Full-batch gradient descent on the mean-square control-matching loss
///   (1/B) sum_j |u_j(theta) - u_hat_j|^2,
/// learning the diagonal state-cost weights. Each policy solve is
/// warm-started from its expert demonstration. The report tracks the
/// loss and the model distance |theta - theta*|_2 per epoch.
inline TrainReport train_il(const CartpoleIlBundle& bundle,
                            const IlTrainOptions& opts) {
  const int n_demos = static_cast<int>(bundle.demonstrations.size());
  require(n_demos >= 1, "train_il: empty bundle");
  OcpDefinition ocp = make_cartpole_ocp(bundle.params);
  SqpConfig cfg;
  cfg.max_sqp_iters = opts.max_sqp_iters;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector weights(4);
  for (int i = 0; i < 4; ++i) weights[i] = unit(rng);
  if (opts.initial_weights) {
    require(opts.initial_weights->size() == 4,
            "train_il: initial weights must have 4 entries");
    weights = *opts.initial_weights;
  }

  WarmStartCache cache;
  cache.resize(static_cast<std::size_t>(n_demos));

  TrainReport report;
  double start = detail::now_seconds();
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<double> losses(n_demos, 0.0);
    std::vector<Vector> grads(n_demos);
    std::vector<long> sqp_iters(n_demos, 0), pcg_iters(n_demos, 0);
    std::vector<std::string> errors(n_demos);

    parallel_for(static_cast<std::size_t>(n_demos), opts.workers,
                 [&](std::size_t j) {
      try {
        ParameterVector theta = make_cartpole_theta(
            weights, bundle.expert_control_weight, bundle.initial_states[j]);
        SolveResult res = sqp_solve(ocp, theta, bundle.demonstrations[j],
                                    cache.warm_lambda(j, ocp), cfg);
        Matrix du = res.z.u - bundle.demonstrations[j].u;
        losses[j] = du.squaredNorm() / n_demos;

        Vector loss_grad = Vector::Zero(ocp.primal_size());
        for (int t = 0; t < ocp.horizon; ++t)
          loss_grad.segment(flat_offset(4, 1, t, false), 1) =
              2.0 / n_demos * du.col(t);
        BackwardResult back =
            backward_vjp(res, loss_grad, cache.warm_lambda_tilde(j, ocp), ocp,
                         theta, cfg.pcg);
        auto ws = theta.range(segment::state_cost);
        grads[j] = back.grad_theta.segment(ws.start, ws.size);
        sqp_iters[j] = res.sqp_iters;
        for (int it : res.pcg_iters) pcg_iters[j] += it;
        pcg_iters[j] += back.pcg_iters;
        cache.store(j, res.z, res.lambda);
        cache.store_backward(j, back.lambda_tilde);
      } catch (const Error& e) {
        errors[j] = e.what();
      }
    });

    for (int j = 0; j < n_demos; ++j) {
      if (!errors[j].empty()) {
        report.failed = true;
        report.failure = "epoch " + std::to_string(epoch) +
                         ", demonstration " + std::to_string(j) + ": " +
                         errors[j];
        report.final_learnable = weights;
        return report;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.objective = 0.0;
    Vector grad = Vector::Zero(4);
    for (int j = 0; j < n_demos; ++j) {  // fixed summation order
      rec.objective += losses[j];
      grad += grads[j];
      rec.sqp_iters += sqp_iters[j];
      rec.pcg_iters += pcg_iters[j];
    }
    rec.model_distance = (weights - bundle.expert_state_weights).norm();
    rec.wall_seconds = detail::now_seconds() - start;
    if (!std::isfinite(rec.objective) || !grad.allFinite()) {
      report.failed = true;
      report.failure = "epoch " + std::to_string(epoch) + ": diverged";
      report.final_learnable = weights;
      return report;
    }
    report.records.push_back(rec);
    weights -= opts.learning_rate * grad;
  }
  report.final_learnable = weights;
  return report;
}

/// One reinforcement-learning task: per-instance problems sharing a set
/// of learnable parameter segments, each with its own environment and
/// start state.
struct RlTask {
  std::vector<OcpDefinition> ocps;
  std::vector<ParameterVector> thetas;  // full layouts, per instance
  std::vector<DiffEnv> envs;
  std::vector<Vector> x_inits;
  std::vector<std::string> learnable_segments;
  int episode_length = 0;
  SqpConfig solve_cfg;

  int batch() const { return static_cast<int>(ocps.size()); }

  Vector learnable_values() const {
    std::vector<double> vals;
    for (const auto& name : learnable_segments) {
      Eigen::Ref<const Vector> seg = thetas.front().segment(name);
      vals.insert(vals.end(), seg.data(), seg.data() + seg.size());
    }
    return Eigen::Map<const Vector>(vals.data(),
                                    static_cast<Eigen::Index>(vals.size()));
  }

  void set_learnable_values(const Vector& values) {
    Eigen::Index k = 0;
    for (const auto& name : learnable_segments) {
      Eigen::Index n = thetas.front().range(name).size;
      for (auto& theta : thetas)
        theta.set_segment(name, values.segment(k, n));
      k += n;
    }
  }

  Vector extract_learnable(const ParameterVector& theta,
                           const Vector& full_grad) const {
    std::vector<double> vals;
    for (const auto& name : learnable_segments) {
      auto r = theta.range(name);
      vals.insert(vals.end(), full_grad.data() + r.start,
                  full_grad.data() + r.start + r.size);
    }
    return Eigen::Map<const Vector>(vals.data(),
                                    static_cast<Eigen::Index>(vals.size()));
  }
};

/// Environment whose step map is the instance's own affine dynamics.
inline DiffEnv make_affine_env(const AffineQuadratic& p) {
  Matrix a = p.A;
  Matrix b = p.B;
  Vector off = p.b_affine;
  return make_diff_env(
      [a, b, off](const Vector& x, const Vector& u) {
        ExplicitStep s;
        s.x_next = a * x + b * u + off;
        s.jac_x = a;
        s.jac_u = b;
        return s;
      },
      [](const Vector& x, const Vector& u) {
        return -(x.squaredNorm() + u.squaredNorm());
      },
      [](const Vector& x, const Vector& u) {
        return std::make_pair(Vector(-2.0 * x), Vector(-2.0 * u));
      });
}

/// RL task over a generated linear batch: reward -(|x|^2 + |u|^2),
/// learnable state-cost diagonals. `single_iteration` applies the
/// benchmark's real-time mode (one SQP iteration, full step).
inline RlTask make_linear_rl_task(const LinearBatch& batch,
                                  bool single_iteration = true) {
  RlTask task;
  task.episode_length = batch.spec.episode_length;
  task.learnable_segments = {segment::state_cost};
  for (const auto& inst : batch.instances) {
    task.ocps.push_back(inst.make_ocp());
    task.thetas.push_back(inst.make_theta());
    task.envs.push_back(make_affine_env(inst));
    task.x_inits.push_back(inst.x_s);
  }
  if (single_iteration) {
    task.solve_cfg.max_sqp_iters = 1;
    task.solve_cfg.step_candidates = {1.0};
  }
  task.solve_cfg.pcg.epsilon = 1e-12;
  return task;
}

/// RL task over the attitude bundle: reward -(0.1 |x|^2 + |u|^2),
/// learnable state- and control-cost diagonals.
inline RlTask make_attitude_rl_task(const AttitudeRlBundle& bundle,
                                    int episode_length = 10) {
  RlTask task;
  task.episode_length = episode_length;
  task.learnable_segments = {segment::state_cost, segment::control_cost};
  for (std::size_t i = 0; i < bundle.params.size(); ++i) {
    const AttitudeParams p = bundle.params[i];
    task.ocps.push_back(make_attitude_ocp(p));
    task.thetas.push_back(make_attitude_theta(bundle.nominal_state_weights,
                                              bundle.nominal_control_weights,
                                              bundle.initial_states[i]));
    task.envs.push_back(make_diff_env(
        [p](const Vector& x, const Vector& u) { return attitude_step(p, x, u); },
        [](const Vector& x, const Vector& u) {
          return -(0.1 * x.squaredNorm() + u.squaredNorm());
        },
        [](const Vector& x, const Vector& u) {
          return std::make_pair(Vector(-0.2 * x), Vector(-2.0 * u));
        }));
    task.x_inits.push_back(bundle.initial_states[i]);
  }
  task.solve_cfg.max_sqp_iters = 4;
  task.solve_cfg.pcg.epsilon = 1e-12;
  return task;
}

struct RlTrainOptions {
  int steps = 50;
  double learning_rate = 1e-2;
  unsigned workers = 0;
};

/// Gradient ascent on the batch-mean total rollout reward. Instances
/// that diverge mid-rollout are excluded from that step's statistics
/// and noted in the report; the run continues.
inline TrainReport train_rl(RlTask& task, const RlTrainOptions& opts) {
  const int batch = task.batch();
  require(batch >= 1, "train_rl: empty task");
  TrainReport report;
  Vector learnable = task.learnable_values();
  double start = detail::now_seconds();

  for (int step = 0; step < opts.steps; ++step) {
    task.set_learnable_values(learnable);
    std::vector<double> rewards(batch, 0.0);
    std::vector<Vector> grads(batch);
    std::vector<long> sqp_iters(batch, 0), pcg_iters(batch, 0);
    std::vector<char> excluded(batch, 0);

    parallel_for(static_cast<std::size_t>(batch), opts.workers,
                 [&](std::size_t i) {
      try {
        RolloutOutput roll =
            rollout(task.envs[i], task.ocps[i], task.thetas[i],
                    task.x_inits[i], task.episode_length, task.solve_cfg);
        Vector full_grad =
            rollout_backward(roll.record, task.envs[i], task.ocps[i],
                             task.thetas[i], task.solve_cfg.pcg);
        rewards[i] = roll.total_reward;
        grads[i] = task.extract_learnable(task.thetas[i], full_grad);
        for (const auto& solve : roll.record.solves) {
          sqp_iters[i] += solve.sqp_iters;
          for (int it : solve.pcg_iters) pcg_iters[i] += it;
        }
      } catch (const Error&) {
        excluded[i] = 1;
      }
    });

    EpochRecord rec;
    rec.epoch = step;
    int used = 0;
    Vector grad = Vector::Zero(learnable.size());
    for (int i = 0; i < batch; ++i) {  // fixed summation order
      if (excluded[i]) continue;
      rec.objective += rewards[i];
      grad += grads[i];
      rec.sqp_iters += sqp_iters[i];
      rec.pcg_iters += pcg_iters[i];
      ++used;
    }
    if (used == 0) {
      report.failed = true;
      report.failure = "step " + std::to_string(step) +
                       ": every rollout diverged";
      break;
    }
    rec.objective /= used;
    grad /= used;
    for (int i = 0; i < batch; ++i) {
      if (excluded[i]) {
        report.failure += "step " + std::to_string(step) + ": instance " +
                          std::to_string(i) + " excluded\n";
      }
    }
    rec.wall_seconds = detail::now_seconds() - start;
    report.records.push_back(rec);
    if (!grad.allFinite()) {
      report.failed = true;
      report.failure = "step " + std::to_string(step) + ": diverged";
      break;
    }
    learnable += opts.learning_rate * grad;
  }
  task.set_learnable_values(learnable);
  report.final_learnable = learnable;
  return report;
}

}  // namespace bench
}  // namespace docp
