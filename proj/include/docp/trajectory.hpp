#pragma once

#include "docp/common.hpp"

namespace docp {

/// State/control trajectory over a horizon of T control stages.
/// States x_0..x_T are the columns of `x`, controls u_0..u_{T-1} the
/// columns of `u`. The flattened layout interleaves stages:
/// (x_0, u_0, x_1, u_1, ..., x_{T-1}, u_{T-1}, x_T).
struct Trajectory {
  Matrix x;  // n_x x (T+1)
  Matrix u;  // n_u x T

  Trajectory() = default;
  Trajectory(int n_x, int n_u, int horizon)
      : x(Matrix::Zero(n_x, horizon + 1)), u(Matrix::Zero(n_u, horizon)) {}

  int n_x() const { return static_cast<int>(x.rows()); }
  int n_u() const { return static_cast<int>(u.rows()); }
  int horizon() const { return static_cast<int>(u.cols()); }

  Eigen::Index flat_size() const { return x.size() + u.size(); }

  bool all_finite() const { return x.allFinite() && u.allFinite(); }

  Vector flatten() const {
    const int T = horizon();
    Vector z(flat_size());
    Eigen::Index k = 0;
    for (int t = 0; t < T; ++t) {
      z.segment(k, x.rows()) = x.col(t);
      k += x.rows();
      z.segment(k, u.rows()) = u.col(t);
      k += u.rows();
    }
    z.segment(k, x.rows()) = x.col(T);
    return z;
  }

  static Trajectory unflatten(const Vector& z, int n_x, int n_u, int horizon) {
    require(z.size() == Eigen::Index(n_x) * (horizon + 1) + Eigen::Index(n_u) * horizon,
            "unflatten: vector length does not match (n_x, n_u, T)");
    Trajectory traj(n_x, n_u, horizon);
    Eigen::Index k = 0;
    for (int t = 0; t < horizon; ++t) {
      traj.x.col(t) = z.segment(k, n_x);
      k += n_x;
      traj.u.col(t) = z.segment(k, n_u);
      k += n_u;
    }
    traj.x.col(horizon) = z.segment(k, n_x);
    return traj;
  }

  /// this + alpha * (other - this), stage-wise.
  Trajectory interpolate(const Trajectory& other, double alpha) const {
    Trajectory out = *this;
    out.x += alpha * (other.x - x);
    out.u += alpha * (other.u - u);
    return out;
  }

  double step_inf_norm(const Trajectory& other) const {
    double dx = (other.x - x).cwiseAbs().maxCoeff();
    double du = u.size() > 0 ? (other.u - u).cwiseAbs().maxCoeff() : 0.0;
    return std::max(dx, du);
  }
};

/// Offset of x_t (state == true) or u_t within the flattened trajectory.
inline Eigen::Index flat_offset(int n_x, int n_u, int t, bool state) {
  return static_cast<Eigen::Index>(t) * (n_x + n_u) + (state ? 0 : n_x);
}

}  // namespace docp
