#pragma once

#include "docp/problem.hpp"

namespace docp {

/// Affine-quadratic problem family:
///   cost      cost_scale * (x' diag(w_x) x + u' diag(w_u) u) per stage
///   dynamics  x_{t+1} = A x_t + B u_t + b_affine
///   theta     [state_cost | control_cost | dynamics(vec A, vec B, b) |
///              initial_state]
/// cost_scale = 1 matches the benchmark convention x' Q x; 0.5 gives the
/// standard half-quadratic form. Matrices are vectorized column-major.
struct AffineQuadratic {
  int n_x = 0;
  int n_u = 0;
  int horizon = 0;
  double cost_scale = 1.0;

  Vector w_x;       // diagonal state-cost weights
  Vector w_u;       // diagonal control-cost weights
  Matrix A;         // n_x x n_x
  Matrix B;         // n_x x n_u
  Vector b_affine;  // n_x
  Vector x_s;       // n_x

  ParameterVector make_theta() const {
    ParameterVector theta;
    theta.add_segment(segment::state_cost, w_x);
    theta.add_segment(segment::control_cost, w_u);
    Vector dyn(A.size() + B.size() + b_affine.size());
    dyn << Eigen::Map<const Vector>(A.data(), A.size()),
        Eigen::Map<const Vector>(B.data(), B.size()), b_affine;
    theta.add_segment(segment::dynamics, dyn);
    theta.add_segment(segment::initial_state, x_s);
    return theta;
  }

  OcpDefinition make_ocp() const {
    OcpDefinition ocp;
    ocp.n_x = n_x;
    ocp.n_u = n_u;
    ocp.horizon = horizon;
    const double scale = cost_scale;
    const int nx = n_x, nu = n_u;

    ocp.state_cost = [scale](int, const Vector& x,
                             const ParameterVector& theta) {
      Vector w = theta.segment(segment::state_cost);
      CostEval c;
      c.value = scale * x.dot(w.asDiagonal() * x);
      c.grad = 2.0 * scale * w.asDiagonal() * x;
      c.hess = (2.0 * scale * w).asDiagonal();
      return c;
    };
    ocp.control_cost = [scale](int, const Vector& u,
                               const ParameterVector& theta) {
      Vector w = theta.segment(segment::control_cost);
      CostEval c;
      c.value = scale * u.dot(w.asDiagonal() * u);
      c.grad = 2.0 * scale * w.asDiagonal() * u;
      c.hess = (2.0 * scale * w).asDiagonal();
      return c;
    };
    ocp.dynamics_residual = [nx, nu](int, const Vector& x_next,
                                     const Vector& x, const Vector& u,
                                     const ParameterVector& theta) {
      Eigen::Ref<const Vector> dyn = theta.segment(segment::dynamics);
      Eigen::Map<const Matrix> a(dyn.data(), nx, nx);
      Eigen::Map<const Matrix> b(dyn.data() + nx * nx, nx, nu);
      Eigen::Map<const Vector> off(dyn.data() + nx * nx + nx * nu, nx);
      DynamicsEval d;
      d.residual = x_next - a * x - b * u - off;
      d.jac_x_next = Matrix::Identity(nx, nx);
      d.jac_x = -a;
      d.jac_u = -b;
      return d;
    };
    ocp.initial_state = [](const ParameterVector& theta) {
      return Vector(theta.segment(segment::initial_state));
    };
    ocp.theta_vjp = [scale, nx, nu](const Trajectory& z, const Vector& lambda,
                                    const Trajectory& cot_z,
                                    const Vector& cot_lambda,
                                    const ParameterVector& theta) {
      const int T = z.horizon();
      Vector grad = Vector::Zero(theta.size());
      auto wx = theta.range(segment::state_cost);
      auto wu = theta.range(segment::control_cost);
      auto dyn = theta.range(segment::dynamics);
      auto xs = theta.range(segment::initial_state);

      for (int t = 0; t <= T; ++t)
        grad.segment(wx.start, nx) -=
            2.0 * scale * z.x.col(t).cwiseProduct(cot_z.x.col(t));
      for (int t = 0; t < T; ++t)
        grad.segment(wu.start, nu) -=
            2.0 * scale * z.u.col(t).cwiseProduct(cot_z.u.col(t));

      // Dynamics entries: lambda couples through the Lagrangian term,
      // cot_lambda through the constraint rows.
      Eigen::Map<Matrix> grad_a(grad.data() + dyn.start, nx, nx);
      Eigen::Map<Matrix> grad_b(grad.data() + dyn.start + nx * nx, nx, nu);
      Eigen::Map<Vector> grad_off(grad.data() + dyn.start + nx * nx + nx * nu,
                                  nx);
      for (int t = 0; t < T; ++t) {
        const auto lam = lambda.segment((t + 1) * nx, nx);
        const auto lt = cot_lambda.segment((t + 1) * nx, nx);
        grad_a.noalias() += lam * cot_z.x.col(t).transpose();
        grad_a.noalias() += lt * z.x.col(t).transpose();
        grad_b.noalias() += lam * cot_z.u.col(t).transpose();
        grad_b.noalias() += lt * z.u.col(t).transpose();
        grad_off += lt;
      }
      grad.segment(xs.start, nx) += cot_lambda.head(nx);
      return grad;
    };
    return ocp;
  }
};

/// The one-stage scalar instance used across the unit tests: costs
/// x^2/2 and u^2/2, dynamics x_{t+1} = x_t + u_t, x_s = 1.
inline AffineQuadratic scalar_one_step_problem() {
  AffineQuadratic p;
  p.n_x = p.n_u = p.horizon = 1;
  p.cost_scale = 0.5;
  p.w_x = Vector::Ones(1);
  p.w_u = Vector::Ones(1);
  p.A = Matrix::Ones(1, 1);
  p.B = Matrix::Ones(1, 1);
  p.b_affine = Vector::Zero(1);
  p.x_s = Vector::Ones(1);
  return p;
}

}  // namespace docp
