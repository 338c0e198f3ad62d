#include "test_support.hpp"

#include "docp/problems/cartpole.hpp"

using namespace docp;

namespace {

TrajectoryLoss quadratic_loss() {
  TrajectoryLoss loss;
  loss.value = [](const Trajectory& z) {
    return z.x.squaredNorm() + z.u.squaredNorm();
  };
  loss.grad = [](const Trajectory& z) { return Vector(2.0 * z.flatten()); };
  return loss;
}

}  // namespace

TEST_CASE("backward_vjp: zero cotangent gives a zero gradient instantly") {
  auto prob = scalar_one_step_problem();
  auto ocp = prob.make_ocp();
  auto theta = prob.make_theta();
  SolveResult res = sqp_solve(ocp, theta, test::zero_trajectory(ocp),
                              test::zero_dual(ocp), test::one_shot_config());
  PcgConfig cfg;
  BackwardResult back = backward_vjp(res, Vector::Zero(3), Vector::Zero(2),
                                     ocp, theta, cfg);
  CHECK(back.grad_theta.norm() == 0.0);
  CHECK(back.lambda_tilde.norm() == 0.0);
  CHECK(back.pcg_iters == 0);
}

TEST_CASE("backward_vjp: scalar sensitivities match the hand solution") {
  auto prob = scalar_one_step_problem();
  auto ocp = prob.make_ocp();
  auto theta = prob.make_theta();
  SolveResult res = sqp_solve(ocp, theta, test::zero_trajectory(ocp),
                              test::zero_dual(ocp), test::one_shot_config());

  Vector loss_grad(3);  // loss = x_1
  loss_grad << 0.0, 0.0, 1.0;
  PcgConfig cfg;
  BackwardResult back =
      backward_vjp(res, loss_grad, Vector::Zero(2), ocp, theta, cfg);

  CHECK(back.lambda_tilde[0] == Catch::Approx(0.5));
  CHECK(back.lambda_tilde[1] == Catch::Approx(0.5));
  auto wu = theta.range(segment::control_cost);
  auto xs = theta.range(segment::initial_state);
  CHECK(back.grad_theta[wu.start] == Catch::Approx(0.25));
  CHECK(back.grad_theta[xs.start] == Catch::Approx(0.5));
}

TEST_CASE("backward_vjp: no cost or dynamics callbacks are re-evaluated") {
  std::mt19937_64 rng(31);
  auto prob = bench::random_convex_instance(4, 2, 6, rng);
  auto counted = prob.make_ocp();
  auto theta = prob.make_theta();

  auto calls = std::make_shared<int>(0);
  auto base_state = counted.state_cost;
  counted.state_cost = [base_state, calls](int t, const Vector& x,
                                           const ParameterVector& p) {
    ++*calls;
    return base_state(t, x, p);
  };
  auto base_control = counted.control_cost;
  counted.control_cost = [base_control, calls](int t, const Vector& u,
                                               const ParameterVector& p) {
    ++*calls;
    return base_control(t, u, p);
  };
  auto base_dyn = counted.dynamics_residual;
  counted.dynamics_residual = [base_dyn, calls](int t, const Vector& xn,
                                                const Vector& x,
                                                const Vector& u,
                                                const ParameterVector& p) {
    ++*calls;
    return base_dyn(t, xn, x, u, p);
  };

  SolveResult res =
      sqp_solve(counted, theta, test::zero_trajectory(counted),
                test::zero_dual(counted), test::one_shot_config());
  int calls_after_forward = *calls;
  PcgConfig cfg;
  backward_vjp(res, quadratic_loss().grad(res.z),
               Vector::Zero(counted.dual_size()), counted, theta, cfg);
  CHECK(*calls == calls_after_forward);
}

TEST_CASE("backward_vjp: one Schur solve regardless of parameter count") {
  std::mt19937_64 rng(32);
  for (auto [nx, nu, horizon] : {std::tuple{2, 1, 4}, {5, 3, 8}}) {
    auto prob = bench::random_convex_instance(nx, nu, horizon, rng);
    auto ocp = prob.make_ocp();
    auto theta = prob.make_theta();
    SolveResult res = sqp_solve(ocp, theta, test::zero_trajectory(ocp),
                                test::zero_dual(ocp), test::one_shot_config());
    PcgConfig cfg;
    std::uint64_t before = stats::pcg_invocations().load();
    backward_vjp(res, quadratic_loss().grad(res.z),
                 Vector::Zero(ocp.dual_size()), ocp, theta, cfg);
    CHECK(stats::pcg_invocations().load() - before == 1);
  }
}

TEST_CASE("backward_vjp: KKT-inverse action is self-adjoint") {
  std::mt19937_64 rng(33);
  auto prob = bench::random_convex_instance(5, 2, 9, rng);
  auto ocp = prob.make_ocp();
  auto theta = prob.make_theta();
  SolveResult res = sqp_solve(ocp, theta, test::zero_trajectory(ocp),
                              test::zero_dual(ocp), test::one_shot_config());

  std::normal_distribution<double> normal;
  PcgConfig cfg;
  cfg.epsilon = 1e-13;
  for (int k = 0; k < 5; ++k) {
    Vector a(ocp.primal_size()), b(ocp.primal_size());
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = normal(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = normal(rng);

    // K^{-1}(v, 0) realized through the Schur pipeline.
    auto apply = [&](const Vector& v) {
      Vector neg_v = -v;
      Vector gamma = assemble_gamma(res.qp, res.schur, neg_v,
                                    Vector::Zero(res.qp.dual_size()));
      Vector lt = pcg_solve(res.schur, gamma,
                            Vector::Zero(res.qp.dual_size()), cfg)
                      .lambda;
      return recover_primal(res.qp, res.schur, lt, neg_v).flatten();
    };
    double left = a.dot(apply(b));
    double right = b.dot(apply(a));
    CHECK(std::abs(left - right) /
              std::max({1.0, std::abs(left), std::abs(right)}) < 1e-8);
  }
}

TEST_CASE("fd_check: convex instance gradients at 1e-5") {
  std::mt19937_64 rng(34);
  auto prob = bench::random_convex_instance(2, 1, 3, rng);
  auto ocp = prob.make_ocp();
  auto theta = prob.make_theta();
  SqpConfig cfg = test::one_shot_config();
  CHECK(fd_check(ocp, theta, cfg, quadratic_loss(), 1e-6) <= 1e-5);
}

TEST_CASE("fd_check: constant loss exercises the guarded denominator") {
  auto prob = scalar_one_step_problem();
  auto ocp = prob.make_ocp();
  auto theta = prob.make_theta();
  TrajectoryLoss constant;
  constant.value = [](const Trajectory&) { return 3.5; };
  constant.grad = [](const Trajectory& z) {
    return Vector(Vector::Zero(z.flat_size()));
  };
  SqpConfig cfg = test::one_shot_config();
  // Zero analytic gradient against ~0 finite differences under the
  // 1e-8 denominator guard: the ratio stays bounded by 1.
  CHECK(fd_check(ocp, theta, cfg, constant, 1e-6) <= 1.0);
}

namespace {

// Second derivative of lambda' f_t in the stage variables (x_t, u_t),
// by central finite differences. Used only to build the exact-Hessian
// reference below.
Matrix stage_curvature(const OcpDefinition& ocp, const ParameterVector& theta,
                       int t, const Vector& xn, const Vector& x,
                       const Vector& u, const Vector& lam, double h = 1e-5) {
  const Eigen::Index n = x.size() + u.size();
  auto eval = [&](const Vector& v) {
    return lam.dot(ocp.dynamics_residual(t, xn, v.head(x.size()),
                                         v.tail(u.size()), theta)
                       .residual);
  };
  Vector v0(n);
  v0 << x, u;
  Matrix hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector vpp = v0, vpm = v0, vmp = v0, vmm = v0;
      vpp[i] += h;
      vpp[j] += h;
      vpm[i] += h;
      vpm[j] -= h;
      vmp[i] -= h;
      vmp[j] += h;
      vmm[i] -= h;
      vmm[j] -= h;
      hess(i, j) = (eval(vpp) - eval(vpm) - eval(vmp) + eval(vmm)) / (4 * h * h);
    }
  }
  return hess;
}

}  // namespace

TEST_CASE("cart-pole gradients: exact-curvature oracle isolates the "
          "Gauss-Newton bias") {
  // The shipped backward pass reuses the Gauss-Newton KKT matrix of the
  // forward pass, which neglects the dynamics curvature term
  // lambda' d2f. On a converged swing-up solve that neglect costs a few
  // percent of gradient accuracy; augmenting the dense KKT matrix with
  // the finite-differenced curvature recovers finite-difference
  // agreement to ~1e-5, which pins the remaining pipeline as exact.
  CartpoleParams params;
  params.horizon = 10;
  auto ocp = make_cartpole_ocp(params);
  Vector x0(4);
  x0 << 0.2, 0.0, 0.8, -0.1;
  auto theta = make_cartpole_theta((Vector(4) << 1, 2, 1.5, 1).finished(),
                                   0.05, x0);
  SqpConfig cfg;
  cfg.max_sqp_iters = 100;
  cfg.convergence_tol = 1e-9;
  Trajectory z0(4, 1, params.horizon);
  z0.x.colwise() = x0;
  SolveResult res = sqp_solve(ocp, theta, z0, Vector::Zero(ocp.dual_size()),
                              cfg);
  REQUIRE(res.converged);
  REQUIRE(res.kkt_inf_norm < 1e-7);

  Vector lg = quadratic_loss().grad(res.z);
  Vector gn_grad =
      backward_vjp(res, lg, Vector::Zero(ocp.dual_size()), ocp, theta,
                   cfg.pcg)
          .grad_theta;

  // Dense KKT solve with the full Lagrangian Hessian.
  Matrix g = oracle::densify_g(res.qp);
  const int nx = 4, nu = 1;
  for (int t = 0; t < params.horizon; ++t) {
    Vector lam = res.lambda.segment((t + 1) * nx, nx);
    Matrix curv = stage_curvature(ocp, theta, t, res.z.x.col(t + 1),
                                  res.z.x.col(t), res.z.u.col(t), lam);
    Eigen::Index o = flat_offset(nx, nu, t, true);
    g.block(o, o, nx + nu, nx + nu) += curv;
  }
  Matrix h = oracle::densify_h(res.qp);
  Eigen::Index n = g.rows(), m = h.rows();
  Matrix kkt = Matrix::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = g;
  kkt.topRightCorner(n, m) = h.transpose();
  kkt.bottomLeftCorner(m, n) = h;
  Vector rhs(n + m);
  rhs << lg, Vector::Zero(m);
  Vector sol = kkt.partialPivLu().solve(rhs);
  Vector exact_grad = ocp.theta_vjp(
      res.z, res.lambda, Trajectory::unflatten(sol.head(n), nx, nu,
                                               params.horizon),
      Vector(sol.tail(m)), theta);

  Vector fd = oracle::fd_gradient(
      [&](const Vector& values) {
        ParameterVector p = theta;
        p.values() = values;
        return quadratic_loss().value(
            sqp_solve(ocp, p, z0, Vector::Zero(ocp.dual_size()), cfg).z);
      },
      theta.values(), 1e-5);

  auto max_rel = [&](const Vector& a) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      worst = std::max(worst,
                       std::abs(a[i] - fd[i]) / std::max(1e-8, std::abs(fd[i])));
    return worst;
  };
  CHECK(max_rel(exact_grad) <= 1e-4);
  // Gauss-Newton bias envelope at swing-up amplitude (see the decisions
  // ledger): several percent, and it must not regress past that.
  CHECK(max_rel(gn_grad) <= 0.15);
}
