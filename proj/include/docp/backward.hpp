#pragma once

#include "docp/sqp.hpp"

namespace docp {

struct BackwardResult {
  Vector grad_theta;
  /// Adjoint multiplier; reusable as the next backward warm start.
  Vector lambda_tilde;
  int pcg_iters = 0;
};

/// Scalar loss of a trajectory together with its gradient in the
/// flattened (x_0, u_0, ..., x_T) layout.
struct TrajectoryLoss {
  std::function<double(const Trajectory&)> value;
  std::function<Vector(const Trajectory&)> grad;
};

/// Backward pass (implicit function theorem): reuses the KKT matrices
/// cached in the forward result, solves the same Schur system for the
/// adjoint pair with (-b, d) replaced by (dl/dz, 0), and contracts with
/// -dF/dtheta'. Performs exactly one Schur-system solve regardless of
/// the parameter dimension, and re-evaluates no cost or dynamics
/// callbacks (theta_vjp aside).
inline BackwardResult backward_vjp(const SolveResult& result,
                                   const Vector& loss_grad_z,
                                   const Vector& lambda_tilde0,
                                   const OcpDefinition& ocp,
                                   const ParameterVector& theta,
                                   const PcgConfig& cfg) {
  require(loss_grad_z.size() == result.qp.primal_size(),
          "backward_vjp: cotangent length mismatch");
  require(lambda_tilde0.size() == result.qp.dual_size(),
          "backward_vjp: warm start length mismatch");

  Vector b = -loss_grad_z;
  Vector d = Vector::Zero(result.qp.dual_size());
  Vector gamma = assemble_gamma(result.qp, result.schur, b, d);
  PcgOutcome pcg = pcg_solve(result.schur, gamma, lambda_tilde0, cfg);
  Trajectory z_tilde = recover_primal(result.qp, result.schur, pcg.lambda, b);

  BackwardResult out;
  out.lambda_tilde = pcg.lambda;
  out.pcg_iters = pcg.iters;
  out.grad_theta =
      ocp.theta_vjp(result.z, result.lambda, z_tilde, pcg.lambda, theta);
  return out;
}

/// Compares the backward-pass gradient of theta -> loss(solve(theta).z)
/// against central finite differences, component-wise. Returns the
/// largest relative error, with the denominator guarded at 1e-8.
/// Perturbed solves restart from the given (z0, lambda0).
inline double fd_check(const OcpDefinition& ocp, const ParameterVector& theta,
                       const SqpConfig& cfg, const TrajectoryLoss& loss,
                       double step, const Trajectory& z0,
                       const Vector& lambda0) {
  SolveResult base = sqp_solve(ocp, theta, z0, lambda0, cfg);
  Vector lt0 = Vector::Zero(ocp.dual_size());
  Vector grad =
      backward_vjp(base, loss.grad(base.z), lt0, ocp, theta, cfg.pcg)
          .grad_theta;

  double max_rel = 0.0;
  ParameterVector perturbed = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    perturbed.values() = theta.values();
    perturbed.values()[i] += step;
    double up = loss.value(sqp_solve(ocp, perturbed, z0, lambda0, cfg).z);
    perturbed.values()[i] = theta.values()[i] - step;
    double down = loss.value(sqp_solve(ocp, perturbed, z0, lambda0, cfg).z);
    if (!std::isfinite(up) || !std::isfinite(down))
      throw EvaluationError("fd_check: non-finite loss at perturbed theta");
    double fd = (up - down) / (2.0 * step);
    double rel = std::abs(grad[i] - fd) / std::max(1e-8, std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

inline double fd_check(const OcpDefinition& ocp, const ParameterVector& theta,
                       const SqpConfig& cfg, const TrajectoryLoss& loss,
                       double step = 1e-6) {
  return fd_check(ocp, theta, cfg, loss, step,
                  Trajectory(ocp.n_x, ocp.n_u, ocp.horizon),
                  Vector::Zero(ocp.dual_size()));
}

}  // namespace docp
