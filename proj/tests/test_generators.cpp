#include "test_support.hpp"

#include "docp/problems/affine_quadratic_io.hpp"

using namespace docp;

TEST_CASE("gen_linear: deterministic in the seed") {
  bench::LinearProblemSpec spec{4, 2, 6, 10, 3, 99};
  auto a = bench::gen_linear(spec);
  auto b = bench::gen_linear(spec);
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    // Byte-identical problem files.
    CHECK(affine_quadratic_to_json(a.instances[i]).dump() ==
          affine_quadratic_to_json(b.instances[i]).dump());
  }
  auto c = bench::gen_linear({4, 2, 6, 10, 3, 100});
  CHECK(affine_quadratic_to_json(a.instances[0]).dump() !=
        affine_quadratic_to_json(c.instances[0]).dump());
}

TEST_CASE("gen_linear: spectral radius stays within the unit-circle clip") {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    auto batch = bench::gen_linear({8, 4, 10, 10, 8, seed});
    for (const auto& inst : batch.instances) {
      CHECK(bench::spectral_radius(inst.A) <= 0.99 + 1e-12);
      CHECK((inst.w_x - Vector::Ones(8)).norm() == 0.0);
    }
  }
}

TEST_CASE("gen_linear: named presets carry the published sizes") {
  auto p1 = bench::linear_preset("problem1");
  CHECK(p1.n_x == 8);
  CHECK(p1.n_u == 4);
  CHECK(p1.horizon == 40);
  CHECK(p1.episode_length == 50);
  CHECK(p1.batch == 64);
  auto p5 = bench::linear_preset("problem5");
  CHECK(p5.n_x == 16);
  CHECK(p5.n_u == 8);
  CHECK(p5.batch == 16);
  CHECK_THROWS_AS(bench::linear_preset("problem7"), Error);
}

TEST_CASE("gen_cartpole: equilibrium, feasible demos, expert weights") {
  CartpoleParams params;
  CHECK(cartpole_xdot(params, Vector::Zero(4), Vector::Zero(1)).norm() == 0.0);

  auto bundle = bench::gen_cartpole(/*seed=*/0, params, /*n_demos=*/6);
  CHECK((bundle.expert_state_weights -
         (Vector(4) << 1.0, 2.0, 1.5, 1.0).finished())
            .norm() == 0.0);
  CHECK(bundle.expert_control_weight == 0.05);

  auto ocp = make_cartpole_ocp(params);
  for (std::size_t j = 0; j < bundle.demonstrations.size(); ++j) {
    const Trajectory& z = bundle.demonstrations[j];
    auto theta = make_cartpole_theta(bundle.expert_state_weights,
                                     bundle.expert_control_weight,
                                     bundle.initial_states[j]);
    CHECK((z.x.col(0) - bundle.initial_states[j]).cwiseAbs().maxCoeff() <
          1e-6);
    for (int t = 0; t < params.horizon; ++t) {
      Vector residual = ocp.dynamics_residual(t, z.x.col(t + 1), z.x.col(t),
                                              z.u.col(t), theta)
                            .residual;
      CHECK(residual.cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("gen_attitude: dynamics identities and duplicate evaluation") {
  AttitudeParams p;
  p.inertia << 1.0, 2.0, 3.0;

  SECTION("zero rate gives J^{-1} tau") {
    Vector tau(3);
    tau << 0.3, -0.6, 0.9;
    Vector wdot = attitude_wdot(p, Vector::Zero(3), tau);
    CHECK((wdot - tau.cwiseQuotient(p.inertia)).cwiseAbs().maxCoeff() <
          1e-15);
  }

  SECTION("unit inertia cancels the gyroscopic term") {
    AttitudeParams unit;
    std::mt19937_64 rng(71);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 10; ++k) {
      Vector w(3), tau(3);
      for (int i = 0; i < 3; ++i) w[i] = normal(rng);
      for (int i = 0; i < 3; ++i) tau[i] = normal(rng);
      CHECK((attitude_wdot(unit, w, tau) - tau).cwiseAbs().maxCoeff() <
            1e-14);
    }
  }

  SECTION("Euler step matches an independent one-line evaluation") {
    Vector w(3), tau = Vector::Zero(3);
    w << 1.0, 0.0, 0.0;
    Vector got = attitude_step(p, w, tau).x_next;
    // one-line reference: w + dt * J^{-1} ((J w) x w + tau)
    Eigen::Vector3d jw = p.inertia.cwiseProduct(w);
    Vector expected =
        w + 0.1 * (jw.cross(Eigen::Vector3d(w)) + tau).cwiseQuotient(
                      p.inertia);
    CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("bundle randomization ranges and determinism") {
    auto a = bench::gen_attitude(5, 16);
    auto b = bench::gen_attitude(5, 16);
    REQUIRE(a.params.size() == 16);
    for (std::size_t i = 0; i < a.params.size(); ++i) {
      CHECK((a.params[i].inertia - b.params[i].inertia).norm() == 0.0);
      CHECK((a.initial_states[i] - b.initial_states[i]).norm() == 0.0);
      CHECK(a.params[i].inertia.minCoeff() >= 0.1);
      CHECK(a.params[i].inertia.maxCoeff() <= 10.0);
      CHECK(a.initial_states[i].cwiseAbs().maxCoeff() <= 1.0);
    }
  }
}
