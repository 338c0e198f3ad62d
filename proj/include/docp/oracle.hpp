#pragma once

#include "docp/problem.hpp"

namespace docp {
namespace oracle {

// Slow-but-sure reference implementations used by tests and acceptance
// runs. Everything here densifies or brute-forces on purpose and shares
// no code with the production solve path beyond the domain types.

/// Dense block-diagonal Hessian G = blkdiag(Q_0, R_0, ..., Q_T).
inline Matrix densify_g(const QpData& qp) {
  Matrix g = Matrix::Zero(qp.primal_size(), qp.primal_size());
  const int nx = qp.n_x, nu = qp.n_u;
  for (int t = 0; t <= qp.horizon; ++t) {
    Eigen::Index o = flat_offset(nx, nu, t, true);
    g.block(o, o, nx, nx) = qp.Q[t];
  }
  for (int t = 0; t < qp.horizon; ++t) {
    Eigen::Index o = flat_offset(nx, nu, t, false);
    g.block(o, o, nu, nu) = qp.R[t];
  }
  return g;
}

/// Dense constraint matrix H: first block row pins x_0, then one block
/// row A_t x_t + B_t u_t + A_t^+ x_{t+1} per stage.
inline Matrix densify_h(const QpData& qp) {
  const int nx = qp.n_x, nu = qp.n_u;
  Matrix h = Matrix::Zero(qp.dual_size(), qp.primal_size());
  h.block(0, 0, nx, nx).setIdentity();
  for (int t = 0; t < qp.horizon; ++t) {
    h.block((t + 1) * nx, flat_offset(nx, nu, t, true), nx, nx) = qp.A[t];
    h.block((t + 1) * nx, flat_offset(nx, nu, t, false), nx, nu) = qp.B[t];
    h.block((t + 1) * nx, flat_offset(nx, nu, t + 1, true), nx, nx) =
        qp.A_plus[t];
  }
  return h;
}

/// Dense Schur complement -H G^{-1} H' (the reference for the assembled
/// block-tridiagonal system).
inline Matrix dense_schur(const QpData& qp) {
  Matrix g = densify_g(qp);
  Matrix h = densify_h(qp);
  return -(h * g.ldlt().solve(h.transpose()));
}

/// Full KKT matrix [[G, H'], [H, 0]] with a direct factorization.
struct DenseKkt {
  Matrix kkt;
  Eigen::PartialPivLU<Matrix> lu;

  explicit DenseKkt(const QpData& qp) {
    Matrix g = densify_g(qp);
    Matrix h = densify_h(qp);
    Eigen::Index n = g.rows(), m = h.rows();
    kkt = Matrix::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = g;
    kkt.topRightCorner(n, m) = h.transpose();
    kkt.bottomLeftCorner(m, n) = h;
    lu.compute(kkt);
  }

  Vector solve(const Vector& rhs) const {
    Vector sol = lu.solve(rhs);
    double residual = (kkt * sol - rhs).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    if (!sol.allFinite() || residual > 1e-6 * scale)
      throw NumericalError("dense_kkt_solve: singular KKT matrix");
    return sol;
  }
};

struct DenseKktSolution {
  Vector z;       // flattened primal
  Vector lambda;  // multipliers
};

/// Direct solve of the full KKT system for rhs (rhs_top, rhs_bottom).
/// Forward reference: rhs = (-b, d); backward reference: (dl/dz, 0).
inline DenseKktSolution dense_kkt_solve(const QpData& qp,
                                        const Vector& rhs_top,
                                        const Vector& rhs_bottom) {
  require(rhs_top.size() == qp.primal_size(),
          "dense_kkt_solve: rhs_top length mismatch");
  require(rhs_bottom.size() == qp.dual_size(),
          "dense_kkt_solve: rhs_bottom length mismatch");
  DenseKkt dense(qp);
  Vector rhs(rhs_top.size() + rhs_bottom.size());
  rhs << rhs_top, rhs_bottom;
  Vector sol = dense.solve(rhs);
  return {sol.head(qp.primal_size()), sol.tail(qp.dual_size())};
}

/// Backward Riccati sweep plus forward rollout for explicit-dynamics
/// QP data (A_t^+ = I). The recursion runs on
///   x_{t+1} = F_t x_t + G_t u_t + c_t,  F = -A, G = -B, c = C.
inline Trajectory riccati_lqr(const QpData& qp) {
  const int T = qp.horizon;
  const int nx = qp.n_x, nu = qp.n_u;
  for (int t = 0; t < T; ++t) {
    if ((qp.A_plus[t] - Matrix::Identity(nx, nx)).cwiseAbs().maxCoeff() >
        1e-14)
      throw Error("riccati_lqr: requires explicit dynamics (A_plus = I)");
  }

  std::vector<Matrix> gain_k(T);
  std::vector<Vector> gain_d(T);
  Matrix value_p = qp.Q[T];
  Vector value_v = qp.q[T];
  for (int t = T - 1; t >= 0; --t) {
    Matrix f = -qp.A[t];
    Matrix g = -qp.B[t];
    const Vector& c = qp.C[t];
    Matrix qxx = qp.Q[t] + f.transpose() * value_p * f;
    Matrix quu = qp.R[t] + g.transpose() * value_p * g;
    Matrix qxu = f.transpose() * value_p * g;
    Vector qx = qp.q[t] + f.transpose() * (value_p * c + value_v);
    Vector qu = qp.r[t] + g.transpose() * (value_p * c + value_v);
    Eigen::LLT<Matrix> quu_llt(quu);
    if (quu_llt.info() != Eigen::Success)
      throw NumericalError("riccati_lqr: Quu not positive definite at stage " +
                           std::to_string(t));
    gain_k[t] = -quu_llt.solve(qxu.transpose());
    gain_d[t] = -quu_llt.solve(qu);
    value_p = qxx + qxu * gain_k[t];
    value_p = 0.5 * (value_p + value_p.transpose().eval());
    value_v = qx + qxu * gain_d[t];
  }

  Trajectory z(nx, nu, T);
  z.x.col(0) = qp.x_s;
  for (int t = 0; t < T; ++t) {
    z.u.col(t) = gain_k[t] * z.x.col(t) + gain_d[t];
    z.x.col(t + 1) = -qp.A[t] * z.x.col(t) - qp.B[t] * z.u.col(t) + qp.C[t];
  }
  return z;
}

/// Central finite differences of a scalar function, component-wise.
inline Vector fd_gradient(const std::function<double(const Vector&)>& fn,
                          const Vector& at, double step) {
  Vector grad(at.size());
  Vector point = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    point[i] = at[i] + step;
    double up = fn(point);
    point[i] = at[i] - step;
    double down = fn(point);
    point[i] = at[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw EvaluationError("fd_gradient: non-finite evaluation");
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Finite-difference fallback for OcpDefinition::theta_vjp: evaluates
/// -cot' dF/dtheta by differencing the KKT residual over theta with
/// (z, lambda) held fixed.
inline Vector fd_theta_vjp(const OcpDefinition& ocp, const Trajectory& z,
                           const Vector& lambda, const Trajectory& cot_z,
                           const Vector& cot_lambda,
                           const ParameterVector& theta, double step = 1e-6) {
  Vector cot(cot_z.flat_size() + cot_lambda.size());
  cot << cot_z.flatten(), cot_lambda;
  auto dotted = [&](const Vector& values) {
    ParameterVector p = theta;
    p.values() = values;
    return cot.dot(kkt_residual(ocp, z, lambda, p));
  };
  return -fd_gradient(dotted, theta.values(), step);
}

}  // namespace oracle
}  // namespace docp
