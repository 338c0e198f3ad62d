#pragma once

#include "docp/pcg.hpp"

namespace docp {

struct SqpConfig {
  int max_sqp_iters = 20;
  /// Candidate step sizes, strictly decreasing in (0, 1].
  std::vector<double> step_candidates = {1.0, 0.7, 0.3, 0.1, 0.01};
  /// Sufficient-decrease coefficient of the merit test.
  double eta_armijo = 0.4;
  /// Penalty-rule coefficient rho; the denominator is (1 - rho) * |c|_1.
  double rho_penalty = 0.5;
  PcgConfig pcg;
  /// Terminate when the accepted step satisfies |dz|_inf <= this.
  double convergence_tol = 1e-8;
  /// Keep the previous penalty when the constraint violation is below
  /// this floor (the penalty rule divides by the violation).
  double mu_floor_denominator = 1e-12;
  double eps_pd = kDefaultEpsPd;

  void validate() const {
    require(!step_candidates.empty(), "sqp: empty step candidate list");
    for (std::size_t i = 0; i < step_candidates.size(); ++i) {
      bool in_range = step_candidates[i] > 0.0 && step_candidates[i] <= 1.0;
      bool decreasing =
          i == 0 || step_candidates[i] < step_candidates[i - 1];
      require(in_range && decreasing,
              "sqp: step candidates must be strictly decreasing in (0,1]");
    }
    require(eta_armijo > 0.0 && eta_armijo < 1.0, "sqp: eta out of range");
  }
};

/// Primal/dual solution plus the matrices cached for the backward pass.
/// qp and schur are re-assembled at the returned trajectory after the
/// final accepted step, so sensitivities differentiate the returned
/// point.
struct SolveResult {
  Trajectory z;
  Vector lambda;
  QpData qp;
  SchurSystem schur;
  int sqp_iters = 0;
  double kkt_inf_norm = 0.0;
  bool converged = false;

  // Diagnostics.
  std::vector<int> pcg_iters;      // per SQP iteration
  std::vector<double> step_sizes;  // accepted alpha per iteration
};

/// Solves for the QP primal given the Schur multiplier (Eq. of the
/// stage-wise recovery):
///   x_t = -Q_t^{-1} (b_{x_t} + A_{t-1}^+' lam_t + A_t' lam_{t+1})
///   u_t = -R_t^{-1} (b_{u_t} + B_t' lam_{t+1})
/// with A_{-1}^+ = I and x_T = -Q_T^{-1} (b_{x_T} + A_{T-1}^+' lam_T).
/// All stages are independent. With rhs_b equal to the QP gradient this
/// is the QP primal solution; the backward pass reuses it with the loss
/// cotangent in place of b.
inline Trajectory recover_primal(const QpData& qp, const SchurSystem& sys,
                                 const Vector& lambda, const Vector& rhs_b) {
  const int T = qp.horizon;
  const int nx = qp.n_x;
  const int nu = qp.n_u;
  require(lambda.size() == qp.dual_size(),
          "recover_primal: dual length mismatch");
  require(rhs_b.size() == qp.primal_size(),
          "recover_primal: rhs length mismatch");

  Trajectory z(nx, nu, T);
  for (int t = 0; t <= T; ++t) {
    Vector rhs = rhs_b.segment(flat_offset(nx, nu, t, true), nx);
    if (t == 0)
      rhs += lambda.head(nx);
    else
      rhs.noalias() += qp.A_plus[t - 1].transpose() * lambda.segment(t * nx, nx);
    if (t < T)
      rhs.noalias() += qp.A[t].transpose() * lambda.segment((t + 1) * nx, nx);
    z.x.col(t) = -sys.chol_Q[t].solve(rhs);
  }
  for (int t = 0; t < T; ++t) {
    Vector rhs = rhs_b.segment(flat_offset(nx, nu, t, false), nu);
    rhs.noalias() += qp.B[t].transpose() * lambda.segment((t + 1) * nx, nx);
    z.u.col(t) = -sys.chol_R[t].solve(rhs);
  }
  return z;
}

namespace detail {

struct MeritParts {
  double cost = 0.0;
  double violation_l1 = 0.0;  // includes the initial-condition residual
};

inline MeritParts merit_parts(const OcpDefinition& ocp, const Trajectory& z,
                              const ParameterVector& theta) {
  ocp.check_dims(z);
  MeritParts parts;
  for (int t = 0; t <= ocp.horizon; ++t) {
    double v = ocp.state_cost(t, z.x.col(t), theta).value;
    if (!std::isfinite(v))
      throw EvaluationError("merit: non-finite state cost at stage " +
                            std::to_string(t));
    parts.cost += v;
  }
  for (int t = 0; t < ocp.horizon; ++t) {
    double v = ocp.control_cost(t, z.u.col(t), theta).value;
    if (!std::isfinite(v))
      throw EvaluationError("merit: non-finite control cost at stage " +
                            std::to_string(t));
    parts.cost += v;
    parts.violation_l1 +=
        ocp.dynamics_residual(t, z.x.col(t + 1), z.x.col(t), z.u.col(t), theta)
            .residual.cwiseAbs()
            .sum();
  }
  parts.violation_l1 +=
      (z.x.col(0) - ocp.initial_state(theta)).cwiseAbs().sum();
  return parts;
}

}  // namespace detail

/// Merit function: total stage cost plus mu times the 1-norm of all
/// equality residuals, the initial condition included.
inline double merit(const OcpDefinition& ocp, const Trajectory& z, double mu,
                    const ParameterVector& theta) {
  auto parts = detail::merit_parts(ocp, z, theta);
  return parts.cost + mu * parts.violation_l1;
}

struct LineSearchResult {
  Trajectory z;
  double alpha = 0.0;
  /// True when some candidate satisfied the decrease condition; the
  /// smallest candidate is returned otherwise.
  bool accepted = false;
  double mu = 1.0;  // penalty actually used (callers thread it through)
};

/// Merit-function line search over the fixed candidate list. Evaluates
/// the decrease test for every candidate (candidates are independent)
/// and returns the largest one with a negative decrease, falling back
/// to the smallest candidate. The penalty follows the classic SQP rule
///   mu >= (grad c' p + 1/2 p' G p) / ((1 - rho) |c|_1),
/// raised only when required, and is kept when the violation is below
/// the configured floor.
inline LineSearchResult line_search(const OcpDefinition& ocp, const QpData& qp,
                                    const Trajectory& z_old,
                                    const Trajectory& z_qp,
                                    const ParameterVector& theta,
                                    const SqpConfig& cfg, double mu_prev = 1.0) {
  cfg.validate();
  ocp.check_dims(z_old);
  ocp.check_dims(z_qp);

  const int T = ocp.horizon;
  double d_cost = 0.0;       // grad c(z_old)' (z_qp - z_old)
  double curvature = 0.0;    // (z_qp - z_old)' G (z_qp - z_old)
  for (int t = 0; t <= T; ++t) {
    Vector dx = z_qp.x.col(t) - z_old.x.col(t);
    d_cost += ocp.state_cost(t, z_old.x.col(t), theta).grad.dot(dx);
    curvature += dx.dot(qp.Q[t] * dx);
  }
  for (int t = 0; t < T; ++t) {
    Vector du = z_qp.u.col(t) - z_old.u.col(t);
    d_cost += ocp.control_cost(t, z_old.u.col(t), theta).grad.dot(du);
    curvature += du.dot(qp.R[t] * du);
  }

  auto old_parts = detail::merit_parts(ocp, z_old, theta);
  double mu = mu_prev;
  if (old_parts.violation_l1 >= cfg.mu_floor_denominator) {
    double required = (d_cost + 0.5 * curvature) /
                      ((1.0 - cfg.rho_penalty) * old_parts.violation_l1);
    if (std::isfinite(required) && required > mu) mu = required;
  }

  double phi_old = old_parts.cost + mu * old_parts.violation_l1;
  double descent = d_cost - mu * old_parts.violation_l1;

  const auto& alphas = cfg.step_candidates;
  std::vector<double> delta_phi(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    Trajectory trial = z_old.interpolate(z_qp, alphas[i]);
    delta_phi[i] =
        merit(ocp, trial, mu, theta) - phi_old -
        cfg.eta_armijo * alphas[i] * descent;
  }

  LineSearchResult out;
  out.mu = mu;
  out.alpha = alphas.back();
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (delta_phi[i] < 0.0) {
      out.alpha = alphas[i];
      out.accepted = true;
      break;
    }
  }
  out.z = z_old.interpolate(z_qp, out.alpha);
  return out;
}

/// Forward pass: iterates linearize -> Schur assembly -> PCG (warm
/// started with the running multiplier) -> primal recovery -> merit
/// line search, until the accepted step drops below the tolerance or
/// the iteration cap is reached. The returned matrices are refreshed at
/// the returned trajectory.
inline SolveResult sqp_solve(const OcpDefinition& ocp,
                             const ParameterVector& theta,
                             const Trajectory& z0, const Vector& lambda0,
                             const SqpConfig& cfg) {
  cfg.validate();
  ocp.check_dims(z0);
  require(lambda0.size() == ocp.dual_size(), "sqp: dual guess length mismatch");
  require(z0.all_finite() && lambda0.allFinite(),
          "sqp: initial guess must be finite");

  SolveResult res;
  res.z = z0;
  res.lambda = lambda0;
  double mu = 1.0;

  for (int iter = 0; iter < cfg.max_sqp_iters; ++iter) {
    QpData qp = linearize(ocp, res.z, theta, cfg.eps_pd);
    SchurSystem sys = assemble_schur(qp);
    Vector gamma = assemble_gamma(qp, sys, qp.flat_b(), qp.flat_d());
    PcgOutcome pcg = pcg_solve(sys, gamma, res.lambda, cfg.pcg);
    res.lambda = pcg.lambda;
    res.pcg_iters.push_back(pcg.iters);

    Trajectory z_qp = recover_primal(qp, sys, res.lambda, qp.flat_b());
    LineSearchResult ls =
        line_search(ocp, qp, res.z, z_qp, theta, cfg, mu);
    mu = ls.mu;
    if (!ls.z.all_finite()) {
      throw DivergenceError("sqp: non-finite iterate at iteration " +
                            std::to_string(iter + 1));
    }
    double step = res.z.step_inf_norm(ls.z);
    res.z = ls.z;
    res.step_sizes.push_back(ls.alpha);
    ++res.sqp_iters;
    if (step <= cfg.convergence_tol) {
      res.converged = true;
      break;
    }
  }

  // Refresh the linearization at the accepted trajectory so the cached
  // matrices match the returned point.
  res.qp = linearize(ocp, res.z, theta, cfg.eps_pd);
  res.schur = assemble_schur(res.qp);
  res.kkt_inf_norm =
      kkt_residual(ocp, res.z, res.lambda, theta).cwiseAbs().maxCoeff();
  return res;
}

/// First control of the solved trajectory (the MPC policy action).
inline Vector policy_first_control(const SolveResult& result) {
  return result.z.u.col(0);
}

}  // namespace docp
