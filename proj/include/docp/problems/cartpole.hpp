#pragma once

#include "docp/problems/quadratic_cost.hpp"

namespace docp {

/// Cart-pole with state (position, velocity, angle, angular rate) and a
/// scalar force input, discretized by forward Euler.
///
/// The continuous-time equations are implemented exactly as used by the
/// imitation-learning benchmark this reproduces, including two oddities
/// of that model: the cart acceleration has no direct control term (the
/// force enters only the angular acceleration), and the angular
/// acceleration's first term is linear in the angular rate rather than
/// quadratic. This differs from the textbook cart-pole; keep it as is,
/// the expert data and learned policies are self-consistent.
struct CartpoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double length = 0.5;
  double gravity = 9.81;
  double dt = 0.05;
  int horizon = 40;

  double total_mass() const { return cart_mass + pole_mass; }
};

inline Vector cartpole_xdot(const CartpoleParams& p, const Vector& x,
                            const Vector& u) {
  const double s = std::sin(x[2]);
  const double c = std::cos(x[2]);
  const double mp = p.pole_mass;
  const double len = p.length;
  const double big_m = p.total_mass();
  const double d = big_m + mp * (1.0 - c * c);
  Vector xdot(4);
  xdot[0] = x[1];
  xdot[1] = (-mp * len * s * x[3] * x[3] + mp * p.gravity * s * c) / (d * len);
  xdot[2] = x[3];
  xdot[3] = (-mp * len * s * x[3] + mp * p.gravity * s * c + u[0]) / d;
  return xdot;
}

inline ExplicitStep cartpole_step(const CartpoleParams& p, const Vector& x,
                                  const Vector& u) {
  const double s = std::sin(x[2]);
  const double c = std::cos(x[2]);
  const double mp = p.pole_mass;
  const double len = p.length;
  const double g = p.gravity;
  const double big_m = p.total_mass();
  const double d = big_m + mp * (1.0 - c * c);
  const double d_d3 = 2.0 * mp * s * c;  // d(d)/d(angle)

  const double n2 = -mp * len * s * x[3] * x[3] + mp * g * s * c;
  const double n2_d3 = -mp * len * c * x[3] * x[3] + mp * g * (c * c - s * s);
  const double n2_d4 = -2.0 * mp * len * s * x[3];

  const double n4 = -mp * len * s * x[3] + mp * g * s * c + u[0];
  const double n4_d3 = -mp * len * c * x[3] + mp * g * (c * c - s * s);
  const double n4_d4 = -mp * len * s;

  Matrix jac_x = Matrix::Zero(4, 4);
  Matrix jac_u = Matrix::Zero(4, 1);
  jac_x(0, 1) = 1.0;
  jac_x(1, 2) = (n2_d3 * d - n2 * d_d3) / (d * d * len);
  jac_x(1, 3) = n2_d4 / (d * len);
  jac_x(2, 3) = 1.0;
  jac_x(3, 2) = (n4_d3 * d - n4 * d_d3) / (d * d);
  jac_x(3, 3) = n4_d4 / d;
  jac_u(3, 0) = 1.0 / d;

  ExplicitStep step;
  step.x_next = x + p.dt * cartpole_xdot(p, x, u);
  step.jac_x = Matrix::Identity(4, 4) + p.dt * jac_x;
  step.jac_u = p.dt * jac_u;
  return step;
}

/// theta layout: [state_cost (4) | control_cost (1) | initial_state (4)],
/// costs 1/2 v' diag(w) v.
inline ParameterVector make_cartpole_theta(const Vector& w_x, double w_u,
                                           const Vector& x0) {
  ParameterVector theta;
  theta.add_segment(segment::state_cost, w_x);
  theta.add_segment(segment::control_cost, Vector::Constant(1, w_u));
  theta.add_segment(segment::initial_state, x0);
  return theta;
}

inline OcpDefinition make_cartpole_ocp(const CartpoleParams& params) {
  OcpDefinition ocp;
  ocp.n_x = 4;
  ocp.n_u = 1;
  ocp.horizon = params.horizon;
  ocp.state_cost = make_diag_quadratic_cost(segment::state_cost, 0.5);
  ocp.control_cost = make_diag_quadratic_cost(segment::control_cost, 0.5);
  ocp.dynamics_residual = make_explicit_dynamics(
      [params](int, const Vector& x, const Vector& u, const ParameterVector&) {
        return cartpole_step(params, x, u);
      });
  ocp.initial_state = [](const ParameterVector& theta) {
    return Vector(theta.segment(segment::initial_state));
  };
  ocp.theta_vjp = make_quadratic_cost_theta_vjp(0.5);
  return ocp;
}

}  // namespace docp
