#pragma once

#include "docp/batch.hpp"
#include "docp/problems/affine_quadratic.hpp"
#include "docp/problems/attitude.hpp"
#include "docp/problems/cartpole.hpp"

#include <random>

namespace docp {
namespace bench {

/// Sizes of one randomized linear benchmark: state/control dimensions,
/// MPC horizon, episode length and batch size.
struct LinearProblemSpec {
  int n_x = 8;
  int n_u = 4;
  int horizon = 40;
  int episode_length = 50;
  int batch = 64;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_x >= 1 && n_u >= 1 && horizon >= 1 && episode_length >= 1 &&
                batch >= 1,
            "linear spec: all sizes must be positive");
  }
};

/// Named presets problem1..problem6 (n_x, n_u, T, H, B).
inline LinearProblemSpec linear_preset(const std::string& name) {
  if (name == "problem1") return {8, 4, 40, 50, 64, 0};
  if (name == "problem2") return {8, 4, 30, 50, 16, 0};
  if (name == "problem3") return {8, 4, 30, 50, 64, 0};
  if (name == "problem4") return {8, 4, 30, 50, 256, 0};
  if (name == "problem5") return {16, 8, 30, 50, 16, 0};
  if (name == "problem6") return {16, 8, 30, 50, 64, 0};
  throw Error("unknown linear preset: " + name);
}

inline double spectral_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> eig(a, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success)
    throw NumericalError("spectral_radius: eigenvalue computation failed");
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

/// One randomized affine-quadratic instance:
///   A = I + 0.1 dA with dA ~ N(0, I), rescaled so the spectral radius
///   stays within 0.99; vec(B) ~ N(0, I); b ~ N(0, 1e-4 I);
///   x_0 ~ N(0, 25 I); costs x' diag(w) x and |u|^2 with w = 1.
inline AffineQuadratic random_linear_instance(int n_x, int n_u, int horizon,
                                              std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  AffineQuadratic p;
  p.n_x = n_x;
  p.n_u = n_u;
  p.horizon = horizon;
  p.cost_scale = 1.0;
  p.w_x = Vector::Ones(n_x);
  p.w_u = Vector::Ones(n_u);

  Matrix delta(n_x, n_x);
  for (Eigen::Index j = 0; j < delta.cols(); ++j)
    for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, j) = normal(rng);
  p.A = Matrix::Identity(n_x, n_x) + 0.1 * delta;
  double rho = spectral_radius(p.A);
  if (rho > 0.99) p.A *= 0.99 / rho;

  p.B = Matrix(n_x, n_u);
  for (Eigen::Index j = 0; j < p.B.cols(); ++j)
    for (Eigen::Index i = 0; i < p.B.rows(); ++i) p.B(i, j) = normal(rng);

  p.b_affine = Vector(n_x);
  for (int i = 0; i < n_x; ++i) p.b_affine[i] = 1e-2 * normal(rng);
  p.x_s = Vector(n_x);
  for (int i = 0; i < n_x; ++i) p.x_s[i] = 5.0 * normal(rng);
  return p;
}

struct LinearBatch {
  LinearProblemSpec spec;
  std::vector<AffineQuadratic> instances;
};

/// Deterministic batch of randomized linear instances; the learnable
/// parameters are the state-cost diagonals, initialized at ones.
inline LinearBatch gen_linear(const LinearProblemSpec& spec) {
  spec.validate();
  LinearBatch batch;
  batch.spec = spec;
  std::mt19937_64 rng(spec.seed);
  batch.instances.reserve(spec.batch);
  for (int i = 0; i < spec.batch; ++i)
    batch.instances.push_back(
        random_linear_instance(spec.n_x, spec.n_u, spec.horizon, rng));
  return batch;
}

/// Randomized convex test instance with generic (non-unit) weights and
/// moderate scaling; used by oracle-equivalence and gradient checks.
inline AffineQuadratic random_convex_instance(int n_x, int n_u, int horizon,
                                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  AffineQuadratic p = random_linear_instance(n_x, n_u, horizon, rng);
  for (int i = 0; i < n_x; ++i) p.w_x[i] = weight(rng);
  for (int i = 0; i < n_u; ++i) p.w_u[i] = weight(rng);
  for (int i = 0; i < n_x; ++i) p.x_s[i] = normal(rng);
  return p;
}

/// Imitation-learning benchmark bundle: expert cost weights, sampled
/// initial conditions, and one expert demonstration per condition.
struct CartpoleIlBundle {
  CartpoleParams params;
  Vector expert_state_weights;    // (1, 2, 1.5, 1)
  double expert_control_weight;   // 0.05
  std::vector<Vector> initial_states;
  std::vector<Trajectory> demonstrations;
};

inline SqpConfig cartpole_expert_config() {
  SqpConfig cfg;
  cfg.max_sqp_iters = 100;
  cfg.convergence_tol = 1e-9;
  return cfg;
}

/// Generates the 32-demonstration cart-pole bundle. Initial conditions
/// are sampled from U([-0.5,0.5] x [-0.5,0.5] x [-pi,pi] x [-1,1]);
/// experts solve the swing-up problem at the true weights to tight
/// tolerance so each demonstration is a solver fixed point.
inline CartpoleIlBundle gen_cartpole(std::uint64_t seed = 0,
                                     CartpoleParams params = {},
                                     int n_demos = 32) {
  CartpoleIlBundle bundle;
  bundle.params = params;
  bundle.expert_state_weights = (Vector(4) << 1.0, 2.0, 1.5, 1.0).finished();
  bundle.expert_control_weight = 0.05;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u_half(-0.5, 0.5);
  std::uniform_real_distribution<double> u_pi(-M_PI, M_PI);
  std::uniform_real_distribution<double> u_one(-1.0, 1.0);

  OcpDefinition ocp = make_cartpole_ocp(params);
  SqpConfig cfg = cartpole_expert_config();
  for (int i = 0; i < n_demos; ++i) {
    Vector x0(4);
    x0 << u_half(rng), u_half(rng), u_pi(rng), u_one(rng);
    bundle.initial_states.push_back(x0);

    ParameterVector theta = make_cartpole_theta(
        bundle.expert_state_weights, bundle.expert_control_weight, x0);
    Trajectory z0(4, 1, params.horizon);
    z0.x.colwise() = x0;
    try {
      SolveResult res =
          sqp_solve(ocp, theta, z0, Vector::Zero(ocp.dual_size()), cfg);
      bundle.demonstrations.push_back(res.z);
    } catch (const Error& e) {
      throw Error("gen_cartpole: expert solve failed for demonstration " +
                  std::to_string(i) + ": " + e.what());
    }
  }
  return bundle;
}

/// Attitude-stabilization RL bundle: randomized diagonal inertias and
/// initial rates, nominal unit cost weights.
struct AttitudeRlBundle {
  std::vector<AttitudeParams> params;   // per instance
  std::vector<Vector> initial_states;   // per instance
  Vector nominal_state_weights;         // ones(3)
  Vector nominal_control_weights;       // ones(3)
};

inline AttitudeRlBundle gen_attitude(std::uint64_t seed = 0,
                                     int batch_size = 16, double dt = 0.1,
                                     int horizon = 25) {
  AttitudeRlBundle bundle;
  bundle.nominal_state_weights = Vector::Ones(3);
  bundle.nominal_control_weights = Vector::Ones(3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u_inertia(0.1, 10.0);
  std::uniform_real_distribution<double> u_rate(-1.0, 1.0);
  for (int i = 0; i < batch_size; ++i) {
    AttitudeParams p;
    p.dt = dt;
    p.horizon = horizon;
    p.inertia = Vector(3);
    for (int k = 0; k < 3; ++k) p.inertia[k] = u_inertia(rng);
    bundle.params.push_back(p);
    Vector w0(3);
    for (int k = 0; k < 3; ++k) w0[k] = u_rate(rng);
    bundle.initial_states.push_back(w0);
  }
  return bundle;
}

}  // namespace bench
}  // namespace docp
