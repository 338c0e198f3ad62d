#pragma once

#include "docp/backward.hpp"

namespace docp {

/// Per-instance warm-start storage: the previous solve's primal/dual
/// pair and the previous backward multiplier. Cleared slots read as
/// zeros of the instance's dimensions.
class WarmStartCache {
 public:
  struct Slot {
    Trajectory z;
    Vector lambda;
    Vector lambda_tilde;
    bool valid = false;
  };

  void resize(std::size_t n) { slots_.resize(n); }
  std::size_t size() const { return slots_.size(); }
  std::uint64_t generation() const { return generation_; }
  void bump_generation() { ++generation_; }

  void clear() {
    for (auto& s : slots_) s = Slot{};
  }

  Trajectory warm_z(std::size_t i, const OcpDefinition& ocp) const {
    const Slot& s = slots_.at(i);
    if (s.valid && s.z.n_x() == ocp.n_x && s.z.n_u() == ocp.n_u &&
        s.z.horizon() == ocp.horizon)
      return s.z;
    return Trajectory(ocp.n_x, ocp.n_u, ocp.horizon);
  }

  Vector warm_lambda(std::size_t i, const OcpDefinition& ocp) const {
    const Slot& s = slots_.at(i);
    if (s.valid && s.lambda.size() == ocp.dual_size()) return s.lambda;
    return Vector::Zero(ocp.dual_size());
  }

  Vector warm_lambda_tilde(std::size_t i, const OcpDefinition& ocp) const {
    const Slot& s = slots_.at(i);
    if (s.valid && s.lambda_tilde.size() == ocp.dual_size())
      return s.lambda_tilde;
    return Vector::Zero(ocp.dual_size());
  }

  void store(std::size_t i, const Trajectory& z, const Vector& lambda) {
    Slot& s = slots_.at(i);
    s.z = z;
    s.lambda = lambda;
    if (s.lambda_tilde.size() != lambda.size())
      s.lambda_tilde = Vector::Zero(lambda.size());
    s.valid = true;
  }

  void store_backward(std::size_t i, const Vector& lambda_tilde) {
    slots_.at(i).lambda_tilde = lambda_tilde;
  }

 private:
  std::vector<Slot> slots_;
  std::uint64_t generation_ = 0;
};

struct BatchProblem {
  const OcpDefinition* ocp = nullptr;
  const ParameterVector* theta = nullptr;
};

/// Either a solve result or the per-instance failure message.
struct BatchItem {
  bool ok = false;
  SolveResult result;
  std::string error;
};

/// Solves every instance as by sqp_solve, warm-started from its cache
/// slot. Instances run concurrently into independent slots, so results
/// are bit-identical for any worker count; per-instance failures are
/// reported without aborting the batch.
inline std::vector<BatchItem> batch_solve(
    const std::vector<BatchProblem>& instances, WarmStartCache& cache,
    const SqpConfig& cfg, unsigned workers = 0) {
  if (cache.size() != instances.size()) {
    cache.resize(instances.size());
  }
  std::vector<BatchItem> items(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    const OcpDefinition& ocp = *instances[i].ocp;
    try {
      SolveResult res =
          sqp_solve(ocp, *instances[i].theta, cache.warm_z(i, ocp),
                    cache.warm_lambda(i, ocp), cfg);
      items[i].ok = true;
      items[i].result = std::move(res);
    } catch (const Error& e) {
      items[i].ok = false;
      items[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].ok) cache.store(i, items[i].result.z, items[i].result.lambda);
  }
  cache.bump_generation();
  return items;
}

/// Differentiable simulation environment: a step map with cotangent
/// products and a per-step reward with gradients. The benchmark
/// environments reuse the problem's own dynamics.
struct DiffEnv {
  std::function<Vector(const Vector& x, const Vector& u)> step;
  /// Given (x, u, cot_next), returns (d/dx, d/du) of cot_next' step(x, u).
  std::function<std::pair<Vector, Vector>(const Vector&, const Vector&,
                                          const Vector&)>
      step_vjp;
  /// Reward R(x_next, u) evaluated on the post-step state.
  std::function<double(const Vector& x_next, const Vector& u)> reward;
  std::function<std::pair<Vector, Vector>(const Vector& x_next,
                                          const Vector& u)>
      reward_grad;
};

inline DiffEnv make_diff_env(
    std::function<ExplicitStep(const Vector&, const Vector&)> step,
    std::function<double(const Vector&, const Vector&)> reward,
    std::function<std::pair<Vector, Vector>(const Vector&, const Vector&)>
        reward_grad) {
  DiffEnv env;
  env.step = [step](const Vector& x, const Vector& u) {
    return step(x, u).x_next;
  };
  env.step_vjp = [step](const Vector& x, const Vector& u,
                        const Vector& cot_next) {
    ExplicitStep s = step(x, u);
    return std::make_pair(Vector(s.jac_x.transpose() * cot_next),
                          Vector(s.jac_u.transpose() * cot_next));
  };
  env.reward = std::move(reward);
  env.reward_grad = std::move(reward_grad);
  return env;
}

/// A rollout was abandoned because a solve failed mid-episode.
class RolloutTruncation : public Error {
 public:
  RolloutTruncation(const std::string& msg, int step)
      : Error(msg), step(step) {}
  int step;
};

/// Everything rollout_backward needs: the per-step solve results, the
/// applied first controls, and the chained environment states.
struct RolloutRecord {
  std::vector<SolveResult> solves;  // H entries
  std::vector<Vector> controls;     // H applied controls
  std::vector<Vector> states;       // H+1 environment states
  int episode_length = 0;
};

struct RolloutOutput {
  double total_reward = 0.0;
  RolloutRecord record;
};

/// Closed-loop rollout of the MPC policy: at each step the parameter
/// vector's initial-state segment is set to the current environment
/// state, the problem is solved (warm-started from the previous step),
/// the first control is applied, and R(x_{t+1}, u_t) is accumulated.
inline RolloutOutput rollout(const DiffEnv& env, const OcpDefinition& ocp,
                             const ParameterVector& theta,
                             const Vector& x_init, int episode_length,
                             const SqpConfig& cfg) {
  require(x_init.size() == ocp.n_x, "rollout: initial state length mismatch");
  require(episode_length >= 1, "rollout: episode length must be >= 1");

  RolloutOutput out;
  out.record.episode_length = episode_length;
  out.record.states.push_back(x_init);

  ParameterVector step_theta = theta;
  Trajectory warm_z(ocp.n_x, ocp.n_u, ocp.horizon);
  Vector warm_lambda = Vector::Zero(ocp.dual_size());
  for (int t = 0; t < episode_length; ++t) {
    step_theta.set_segment(segment::initial_state, out.record.states.back());
    SolveResult res;
    try {
      res = sqp_solve(ocp, step_theta, warm_z, warm_lambda, cfg);
    } catch (const Error& e) {
      throw RolloutTruncation(
          "rollout: solve failed at step " + std::to_string(t) + ": " +
              e.what(),
          t);
    }
    Vector u = policy_first_control(res);
    Vector x_next = env.step(out.record.states.back(), u);
    if (!x_next.allFinite())
      throw RolloutTruncation(
          "rollout: environment produced a non-finite state at step " +
              std::to_string(t),
          t);
    out.total_reward += env.reward(x_next, u);
    warm_z = res.z;
    warm_lambda = res.lambda;
    out.record.solves.push_back(std::move(res));
    out.record.controls.push_back(std::move(u));
    out.record.states.push_back(std::move(x_next));
  }
  return out;
}

/// Reverse-mode gradient of the total rollout reward with respect to
/// theta. Policy Jacobian actions come from backward_vjp (the
/// initial-state segment carries du_0/dx products for the state chain,
/// the remaining segments the direct du_0/dtheta products); environment
/// cotangents come from the env callbacks. The returned vector's
/// initial-state segment holds the gradient with respect to the rollout
/// start state, which is what chains episodes together.
inline Vector rollout_backward(const RolloutRecord& record, const DiffEnv& env,
                               const OcpDefinition& ocp,
                               const ParameterVector& theta,
                               const PcgConfig& cfg) {
  const int steps = record.episode_length;
  require(static_cast<int>(record.solves.size()) == steps &&
              static_cast<int>(record.controls.size()) == steps &&
              static_cast<int>(record.states.size()) == steps + 1,
          "rollout_backward: incomplete rollout record");
  auto init = theta.range(segment::initial_state);

  ParameterVector step_theta = theta;
  Vector grad_total = Vector::Zero(theta.size());
  Vector xbar = Vector::Zero(ocp.n_x);  // downstream part of dJ/dx_{t+1}
  Vector lambda_tilde = Vector::Zero(ocp.dual_size());
  for (int t = steps - 1; t >= 0; --t) {
    auto [r_x, r_u] = env.reward_grad(record.states[t + 1], record.controls[t]);
    Vector cot_next = xbar + r_x;
    auto [e_x, e_u] =
        env.step_vjp(record.states[t], record.controls[t], cot_next);
    Vector ubar = r_u + e_u;

    Vector loss_grad_z = Vector::Zero(ocp.primal_size());
    loss_grad_z.segment(flat_offset(ocp.n_x, ocp.n_u, 0, false), ocp.n_u) =
        ubar;
    step_theta.set_segment(segment::initial_state, record.states[t]);
    BackwardResult back = backward_vjp(record.solves[t], loss_grad_z,
                                       lambda_tilde, ocp, step_theta, cfg);
    lambda_tilde = back.lambda_tilde;

    Vector policy_x = back.grad_theta.segment(init.start, init.size);
    back.grad_theta.segment(init.start, init.size).setZero();
    grad_total += back.grad_theta;
    xbar = e_x + policy_x;
  }
  grad_total.segment(init.start, init.size) = xbar;
  return grad_total;
}

}  // namespace docp
