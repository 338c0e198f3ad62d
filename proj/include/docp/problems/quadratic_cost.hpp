#pragma once

#include "docp/problem.hpp"

namespace docp {

/// Stage cost c(v) = scale * v' diag(w) v with w read from the named
/// theta segment.
inline std::function<CostEval(int, const Vector&, const ParameterVector&)>
make_diag_quadratic_cost(std::string segment_name, double scale) {
  return [segment_name = std::move(segment_name), scale](
             int, const Vector& v, const ParameterVector& theta) {
    Vector w = theta.segment(segment_name);
    CostEval c;
    c.value = scale * v.dot(w.asDiagonal() * v);
    c.grad = 2.0 * scale * w.asDiagonal() * v;
    c.hess = (2.0 * scale * w).asDiagonal();
    return c;
  };
}

/// theta_vjp for problems whose parameters are diagonal quadratic cost
/// weights plus the initial state, with theta-independent dynamics.
inline std::function<Vector(const Trajectory&, const Vector&,
                            const Trajectory&, const Vector&,
                            const ParameterVector&)>
make_quadratic_cost_theta_vjp(double scale) {
  return [scale](const Trajectory& z, const Vector& /*lambda*/,
                 const Trajectory& cot_z, const Vector& cot_lambda,
                 const ParameterVector& theta) {
    const int T = z.horizon();
    Vector grad = Vector::Zero(theta.size());
    auto wx = theta.range(segment::state_cost);
    for (int t = 0; t <= T; ++t)
      grad.segment(wx.start, wx.size) -=
          2.0 * scale * z.x.col(t).cwiseProduct(cot_z.x.col(t));
    auto wu = theta.range(segment::control_cost);
    for (int t = 0; t < T; ++t)
      grad.segment(wu.start, wu.size) -=
          2.0 * scale * z.u.col(t).cwiseProduct(cot_z.u.col(t));
    auto xs = theta.range(segment::initial_state);
    grad.segment(xs.start, xs.size) += cot_lambda.head(xs.size);
    return grad;
  };
}

}  // namespace docp
