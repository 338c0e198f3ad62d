#pragma once

#include "docp/problems/quadratic_cost.hpp"

namespace docp {

/// Rigid-body attitude-rate stabilization: state omega in R^3, control
/// torque tau in R^3, Euler dynamics J wdot = (J w) x w + tau with a
/// diagonal inertia, discretized by forward Euler.
struct AttitudeParams {
  Vector inertia = Vector::Ones(3);  // diagonal of J
  double dt = 0.1;
  int horizon = 25;
};

inline Matrix skew(const Vector& v) {
  Matrix m(3, 3);
  m << 0, -v[2], v[1], v[2], 0, -v[0], -v[1], v[0], 0;
  return m;
}

inline Vector attitude_wdot(const AttitudeParams& p, const Vector& w,
                            const Vector& tau) {
  Eigen::Vector3d jw = p.inertia.cwiseProduct(w);
  Eigen::Vector3d h = jw.cross(Eigen::Vector3d(w));
  return p.inertia.cwiseInverse().cwiseProduct(h + tau);
}

inline ExplicitStep attitude_step(const AttitudeParams& p, const Vector& w,
                                  const Vector& tau) {
  Eigen::Vector3d jw = p.inertia.cwiseProduct(w);
  Vector h = jw.cross(Eigen::Vector3d(w));
  Vector j_inv = p.inertia.cwiseInverse();

  ExplicitStep step;
  step.x_next = w + p.dt * j_inv.cwiseProduct(h + tau);
  // d/dw [(Jw) x w] = [Jw]_x - [w]_x J
  Matrix dh = skew(jw) - skew(w) * p.inertia.asDiagonal();
  step.jac_x = Matrix::Identity(3, 3) + p.dt * j_inv.asDiagonal() * dh;
  step.jac_u = p.dt * Matrix(j_inv.asDiagonal());
  return step;
}

/// theta layout: [state_cost (3) | control_cost (3) | initial_state (3)],
/// costs 1/2 v' diag(w) v with nominal weights Q = R = I.
inline ParameterVector make_attitude_theta(const Vector& w_x,
                                           const Vector& w_u,
                                           const Vector& omega0) {
  ParameterVector theta;
  theta.add_segment(segment::state_cost, w_x);
  theta.add_segment(segment::control_cost, w_u);
  theta.add_segment(segment::initial_state, omega0);
  return theta;
}

inline OcpDefinition make_attitude_ocp(const AttitudeParams& params) {
  OcpDefinition ocp;
  ocp.n_x = 3;
  ocp.n_u = 3;
  ocp.horizon = params.horizon;
  ocp.state_cost = make_diag_quadratic_cost(segment::state_cost, 0.5);
  ocp.control_cost = make_diag_quadratic_cost(segment::control_cost, 0.5);
  ocp.dynamics_residual = make_explicit_dynamics(
      [params](int, const Vector& x, const Vector& u, const ParameterVector&) {
        return attitude_step(params, x, u);
      });
  ocp.initial_state = [](const ParameterVector& theta) {
    return Vector(theta.segment(segment::initial_state));
  };
  ocp.theta_vjp = make_quadratic_cost_theta_vjp(0.5);
  return ocp;
}

}  // namespace docp
