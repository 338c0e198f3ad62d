#pragma once

#include "docp/common.hpp"
#include "docp/parameters.hpp"
#include "docp/trajectory.hpp"

#include <functional>

namespace docp {

/// Value, gradient and Hessian of a stage cost term.
struct CostEval {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

/// Dynamics residual f_t(x_next, x, u) and its three Jacobians.
struct DynamicsEval {
  Vector residual;   // n_x
  Matrix jac_x_next; // n_x x n_x
  Matrix jac_x;      // n_x x n_x
  Matrix jac_u;      // n_x x n_u
};

/// Parametric equality-constrained optimal control problem.
///
/// Costs are separable per stage, dynamics are implicit residuals
/// f_t(x_{t+1}, x_t, u_t) = 0, and the initial state is pinned to
/// x_0 = initial_state(theta). All callbacks must be pure; an
/// OcpDefinition is immutable after construction and shareable across
/// concurrent solves.
///
/// theta_vjp computes -dF/dtheta^T [cot_z; cot_lambda], where F stacks
/// the Lagrangian gradient and the constraints (see kkt_residual). It
/// receives the forward multiplier since dF/dtheta acts on the
/// Lagrangian term lambda^T g whenever constraints depend on theta.
struct OcpDefinition {
  int n_x = 0;
  int n_u = 0;
  int horizon = 0;  // T: number of control stages; states run 0..T

  std::function<CostEval(int t, const Vector& x, const ParameterVector&)>
      state_cost;
  std::function<CostEval(int t, const Vector& u, const ParameterVector&)>
      control_cost;
  std::function<DynamicsEval(int t, const Vector& x_next, const Vector& x,
                             const Vector& u, const ParameterVector&)>
      dynamics_residual;
  std::function<Vector(const ParameterVector&)> initial_state;
  std::function<Vector(const Trajectory& z, const Vector& lambda,
                       const Trajectory& cot_z, const Vector& cot_lambda,
                       const ParameterVector&)>
      theta_vjp;

  Eigen::Index dual_size() const {
    return static_cast<Eigen::Index>(n_x) * (horizon + 1);
  }
  Eigen::Index primal_size() const {
    return static_cast<Eigen::Index>(n_x) * (horizon + 1) +
           static_cast<Eigen::Index>(n_u) * horizon;
  }

  void check_dims(const Trajectory& z) const {
    require(z.n_x() == n_x && z.n_u() == n_u && z.horizon() == horizon,
            "trajectory dimensions do not match the problem");
  }
};

/// Explicit next-state map x_{t+1} = phi(t, x, u) with Jacobians.
struct ExplicitStep {
  Vector x_next;
  Matrix jac_x;  // d phi / d x
  Matrix jac_u;  // d phi / d u
};

/// Wraps an explicit dynamics map as the implicit residual
/// f = x_next - phi(x, u), so jac_x_next = I, jac_x = -dphi/dx,
/// jac_u = -dphi/du.
inline std::function<DynamicsEval(int, const Vector&, const Vector&,
                                  const Vector&, const ParameterVector&)>
make_explicit_dynamics(
    std::function<ExplicitStep(int t, const Vector& x, const Vector& u,
                               const ParameterVector&)>
        step) {
  return [step = std::move(step)](int t, const Vector& x_next, const Vector& x,
                                  const Vector& u,
                                  const ParameterVector& theta) {
    ExplicitStep s = step(t, x, u, theta);
    DynamicsEval out;
    out.residual = x_next - s.x_next;
    out.jac_x_next = Matrix::Identity(x.size(), x.size());
    out.jac_x = -s.jac_x;
    out.jac_u = -s.jac_u;
    return out;
  };
}

/// One SQP iteration's linear-quadratic data (the QP matrices).
/// Together with x_s these define the block-diagonal Hessian G, the
/// constraint matrix H, and the vectors b = (q_0, r_0, ..., q_T) and
/// d = (x_s, C_0, ..., C_{T-1}) without materializing G or H.
struct QpData {
  int n_x = 0;
  int n_u = 0;
  int horizon = 0;

  std::vector<Matrix> Q;       // T+1 blocks, n_x x n_x, SPD after projection
  std::vector<Vector> q;       // T+1 gradients
  std::vector<Matrix> R;       // T blocks, n_u x n_u, SPD after projection
  std::vector<Vector> r;       // T gradients
  std::vector<Matrix> A_plus;  // T blocks: d f_t / d x_{t+1}
  std::vector<Matrix> A;       // T blocks: d f_t / d x_t
  std::vector<Matrix> B;       // T blocks: d f_t / d u_t
  std::vector<Vector> C;       // T constraint offsets
  Vector x_s;

  // True when the positive-definite projection altered any block;
  // theta-gradients are inexact in that case.
  bool pd_projected = false;

  Eigen::Index primal_size() const {
    return static_cast<Eigen::Index>(n_x) * (horizon + 1) +
           static_cast<Eigen::Index>(n_u) * horizon;
  }
  Eigen::Index dual_size() const {
    return static_cast<Eigen::Index>(n_x) * (horizon + 1);
  }

  /// b = (q_0, r_0, q_1, r_1, ..., q_T) in the interleaved layout.
  Vector flat_b() const {
    Vector b(primal_size());
    Eigen::Index k = 0;
    for (int t = 0; t < horizon; ++t) {
      b.segment(k, n_x) = q[t];
      k += n_x;
      b.segment(k, n_u) = r[t];
      k += n_u;
    }
    b.segment(k, n_x) = q[horizon];
    return b;
  }

  /// d = (x_s, C_0, ..., C_{T-1}).
  Vector flat_d() const {
    Vector d(dual_size());
    d.head(n_x) = x_s;
    for (int t = 0; t < horizon; ++t) d.segment((t + 1) * n_x, n_x) = C[t];
    return d;
  }
};

/// Projects a symmetric matrix onto the eps_pd-definite cone by
/// clamping eigenvalues at eps_pd. Eigenvectors are preserved; a matrix
/// that is already eps_pd-definite is returned unchanged (after
/// symmetrization).
inline Matrix project_pd(const Matrix& m, double eps_pd,
                         bool* modified = nullptr) {
  Matrix sym = 0.5 * (m + m.transpose());
  if (modified) *modified = false;
  if (sym.size() == 1) {
    if (sym(0, 0) >= eps_pd) return sym;
    if (modified) *modified = true;
    return Matrix::Constant(1, 1, eps_pd);
  }
  // Cheap acceptance test: M - eps*I admits a Cholesky factorization
  // exactly when the smallest eigenvalue is >= eps.
  Matrix shifted = sym - eps_pd * Matrix::Identity(sym.rows(), sym.cols());
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) return sym;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("project_pd: eigendecomposition failed on a " +
                         std::to_string(sym.rows()) + "x" +
                         std::to_string(sym.cols()) + " block");
  }
  Vector vals = eig.eigenvalues().cwiseMax(eps_pd);
  if (modified) *modified = true;
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

inline constexpr double kDefaultEpsPd = 1e-6;

namespace detail {

inline void check_finite_stage(bool ok, const char* what, int t) {
  if (!ok) {
    throw EvaluationError(std::string(what) +
                          " returned non-finite values at stage " +
                          std::to_string(t));
  }
}

}  // namespace detail

/// Builds the QP data for the current iterate. Cost Hessians are
/// projected onto the positive-definite cone; the QP gradients are the
/// stage gradients of the local quadratic model expressed in absolute
/// coordinates, q_t = grad c(x_t) - Q_t x_t, so that the recovered QP
/// solution is a trajectory rather than a step. Stages are independent.
inline QpData linearize(const OcpDefinition& ocp, const Trajectory& z,
                        const ParameterVector& theta,
                        double eps_pd = kDefaultEpsPd) {
  ocp.check_dims(z);
  const int T = ocp.horizon;
  QpData qp;
  qp.n_x = ocp.n_x;
  qp.n_u = ocp.n_u;
  qp.horizon = T;
  qp.Q.resize(T + 1);
  qp.q.resize(T + 1);
  qp.R.resize(T);
  qp.r.resize(T);
  qp.A_plus.resize(T);
  qp.A.resize(T);
  qp.B.resize(T);
  qp.C.resize(T);

  std::vector<char> projected(static_cast<std::size_t>(2 * T + 1), 0);
  for (int t = 0; t <= T; ++t) {
    CostEval cx = ocp.state_cost(t, z.x.col(t), theta);
    detail::check_finite_stage(std::isfinite(cx.value) &&
                                   cx.grad.allFinite() && cx.hess.allFinite(),
                               "state_cost", t);
    bool mod = false;
    qp.Q[t] = project_pd(cx.hess, eps_pd, &mod);
    projected[static_cast<std::size_t>(t)] = mod;
    qp.q[t] = cx.grad - qp.Q[t] * z.x.col(t);
  }
  for (int t = 0; t < T; ++t) {
    CostEval cu = ocp.control_cost(t, z.u.col(t), theta);
    detail::check_finite_stage(std::isfinite(cu.value) &&
                                   cu.grad.allFinite() && cu.hess.allFinite(),
                               "control_cost", t);
    bool mod = false;
    qp.R[t] = project_pd(cu.hess, eps_pd, &mod);
    projected[static_cast<std::size_t>(T + 1 + t)] = mod;
    qp.r[t] = cu.grad - qp.R[t] * z.u.col(t);

    DynamicsEval dyn =
        ocp.dynamics_residual(t, z.x.col(t + 1), z.x.col(t), z.u.col(t), theta);
    detail::check_finite_stage(
        dyn.residual.allFinite() && dyn.jac_x_next.allFinite() &&
            dyn.jac_x.allFinite() && dyn.jac_u.allFinite(),
        "dynamics_residual", t);
    qp.A_plus[t] = dyn.jac_x_next;
    qp.A[t] = dyn.jac_x;
    qp.B[t] = dyn.jac_u;
    qp.C[t] = dyn.jac_x_next * z.x.col(t + 1) + dyn.jac_x * z.x.col(t) +
              dyn.jac_u * z.u.col(t) - dyn.residual;
  }
  qp.x_s = ocp.initial_state(theta);
  detail::check_finite_stage(qp.x_s.allFinite(), "initial_state", 0);
  for (char m : projected) qp.pd_projected |= (m != 0);
  return qp;
}

/// Stacked KKT residual F = (grad_z L, g) at (z, lambda), where
/// g = (x_0 - x_s, f_0, ..., f_{T-1}) and lambda stacks the
/// initial-condition multiplier followed by the dynamics multipliers.
/// Zero at an exact primal-dual solution.
inline Vector kkt_residual(const OcpDefinition& ocp, const Trajectory& z,
                           const Vector& lambda, const ParameterVector& theta) {
  ocp.check_dims(z);
  require(lambda.size() == ocp.dual_size(),
          "kkt_residual: dual vector has wrong length");
  const int T = ocp.horizon;
  const int nx = ocp.n_x;
  const int nu = ocp.n_u;

  Vector grad_l = Vector::Zero(ocp.primal_size());
  Vector g = Vector::Zero(ocp.dual_size());

  g.head(nx) = z.x.col(0) - ocp.initial_state(theta);
  for (int t = 0; t <= T; ++t) {
    CostEval cx = ocp.state_cost(t, z.x.col(t), theta);
    grad_l.segment(flat_offset(nx, nu, t, true), nx) = cx.grad;
  }
  for (int t = 0; t < T; ++t) {
    CostEval cu = ocp.control_cost(t, z.u.col(t), theta);
    grad_l.segment(flat_offset(nx, nu, t, false), nu) = cu.grad;

    DynamicsEval dyn =
        ocp.dynamics_residual(t, z.x.col(t + 1), z.x.col(t), z.u.col(t), theta);
    g.segment((t + 1) * nx, nx) = dyn.residual;
    grad_l.segment(flat_offset(nx, nu, t, true), nx) +=
        dyn.jac_x.transpose() * lambda.segment((t + 1) * nx, nx);
    grad_l.segment(flat_offset(nx, nu, t, false), nu) +=
        dyn.jac_u.transpose() * lambda.segment((t + 1) * nx, nx);
    grad_l.segment(flat_offset(nx, nu, t + 1, true), nx) +=
        dyn.jac_x_next.transpose() * lambda.segment((t + 1) * nx, nx);
  }
  // Initial-condition multiplier enters as A_{-1}^+ = I.
  grad_l.head(nx) += lambda.head(nx);

  Vector out(grad_l.size() + g.size());
  out << grad_l, g;
  return out;
}

}  // namespace docp
