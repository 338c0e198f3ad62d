#include "test_support.hpp"

using namespace docp;

namespace {

QpData scalar_qp() {
  auto prob = scalar_one_step_problem();
  return linearize(prob.make_ocp(), Trajectory(1, 1, 1), prob.make_theta());
}

QpData random_qp(int n_x, int n_u, int horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto prob = bench::random_convex_instance(n_x, n_u, horizon, rng);
  return linearize(prob.make_ocp(), Trajectory(n_x, n_u, horizon),
                   prob.make_theta());
}

}  // namespace

TEST_CASE("assemble_schur: scalar one-step hand values") {
  QpData qp = scalar_qp();
  SchurSystem sys = assemble_schur(qp);

  // chi_0 = A Q^{-1} A' + B R^{-1} B' + A+ Q1^{-1} A+' = 1 + 1 + 1
  CHECK(sys.neg_s.diag[0](0, 0) == Catch::Approx(1.0));
  CHECK(sys.neg_s.diag[1](0, 0) == Catch::Approx(3.0));
  CHECK(sys.neg_s.sub[0](0, 0) == Catch::Approx(-1.0));
  CHECK(sys.neg_s.super[0](0, 0) == Catch::Approx(-1.0));

  CHECK(sys.precond.diag[0](0, 0) == Catch::Approx(1.0));
  CHECK(sys.precond.diag[1](0, 0) == Catch::Approx(1.0 / 3.0));
  CHECK(sys.precond.super[0](0, 0) == Catch::Approx(1.0 / 3.0));
  CHECK(sys.precond.sub[0](0, 0) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("assemble_schur: decoupled stages give a block identity") {
  AffineQuadratic p;
  p.n_x = 2;
  p.n_u = 2;
  p.horizon = 4;
  p.cost_scale = 0.5;  // Hessians equal diag(w)
  p.w_x = Vector::Ones(2);
  p.w_u = Vector::Ones(2);
  p.A = Matrix::Zero(2, 2);
  p.B = Matrix::Zero(2, 2);
  p.b_affine = Vector::Zero(2);
  p.x_s = Vector::Zero(2);
  QpData qp = linearize(p.make_ocp(), Trajectory(2, 2, 4), p.make_theta());
  SchurSystem sys = assemble_schur(qp);
  for (int i = 0; i <= 4; ++i)
    CHECK((sys.neg_s.diag[i] - Matrix::Identity(2, 2)).norm() < 1e-14);
  for (int i = 0; i < 4; ++i) CHECK(sys.neg_s.sub[i].norm() == 0.0);
}

TEST_CASE("assemble_schur: dense Schur oracle agreement") {
  QpData qp = random_qp(8, 4, 40, 101);
  SchurSystem sys = assemble_schur(qp);
  Matrix dense = -oracle::dense_schur(qp);  // the stored system is -S
  Matrix assembled = sys.neg_s.densify();
  CHECK((assembled - dense).norm() / dense.norm() < 1e-10);
}

TEST_CASE("assemble_schur: stored system is symmetric positive definite") {
  QpData qp = random_qp(6, 3, 12, 55);
  SchurSystem sys = assemble_schur(qp);
  CHECK(sys.neg_s.symmetry_error() <= 1e-12);

  std::mt19937_64 rng(56);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 25; ++k) {
    Vector v(sys.dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    CHECK(v.dot(btd_matvec(sys.neg_s, v)) > 0.0);
  }
}

TEST_CASE("assemble_schur: schedule does not change the values") {
  QpData qp = random_qp(5, 2, 9, 77);
  SchurSystem a = assemble_schur(qp, 1);
  SchurSystem b = assemble_schur(qp, 2);
  SchurSystem c = assemble_schur(qp, 5);
  for (int i = 0; i < a.neg_s.n_blocks(); ++i) {
    CHECK((a.neg_s.diag[i] - b.neg_s.diag[i]).norm() == 0.0);
    CHECK((a.neg_s.diag[i] - c.neg_s.diag[i]).norm() == 0.0);
    CHECK((a.precond.diag[i] - b.precond.diag[i]).norm() == 0.0);
  }
  for (int i = 0; i + 1 < a.neg_s.n_blocks(); ++i) {
    CHECK((a.neg_s.sub[i] - b.neg_s.sub[i]).norm() == 0.0);
    CHECK((a.precond.super[i] - c.precond.super[i]).norm() == 0.0);
  }
}

TEST_CASE("assemble_schur: factorization failure names the stage") {
  QpData qp = scalar_qp();
  qp.R[0](0, 0) = -1.0;  // bypass the projection on purpose
  CHECK_THROWS_MATCHES(assemble_schur(qp), NumericalError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("R") &&
                           Catch::Matchers::ContainsSubstring("stage 0")));
}

TEST_CASE("assemble_gamma: zero gradient reduces to the constraint side") {
  QpData qp = scalar_qp();
  SchurSystem sys = assemble_schur(qp);
  Vector b = Vector::Zero(qp.primal_size());
  Vector d = qp.flat_d();
  Vector gamma = assemble_gamma(qp, sys, b, d);
  CHECK(gamma[0] == Catch::Approx(-1.0));  // stored negated
  CHECK(gamma[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("assemble_gamma: dense oracle agreement") {
  QpData qp = random_qp(8, 4, 30, 202);
  SchurSystem sys = assemble_schur(qp);
  Vector b = qp.flat_b();
  Vector d = qp.flat_d();
  Vector gamma = assemble_gamma(qp, sys, b, d);

  Matrix g = oracle::densify_g(qp);
  Matrix h = oracle::densify_h(qp);
  Vector dense = d + h * g.ldlt().solve(b);
  CHECK((gamma + dense).norm() / std::max(1.0, dense.norm()) < 1e-10);
}

TEST_CASE("btd_matvec: identity, diagonal, and dense agreement") {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> normal;

  BlockTridiag eye = BlockTridiag::identity(4, 3);
  Vector v(12);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  CHECK((btd_matvec(eye, v) - v).norm() == 0.0);

  BlockTridiag diag = BlockTridiag::identity(4, 3);
  for (auto& m : diag.diag) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  }
  Vector got = btd_matvec(diag, v);
  for (int i = 0; i < 4; ++i)
    CHECK((got.segment(3 * i, 3) - diag.diag[i] * v.segment(3 * i, 3))
              .norm() == 0.0);

  BlockTridiag full = BlockTridiag::identity(5, 3);
  for (auto* blocks : {&full.diag, &full.sub, &full.super}) {
    for (auto& m : *blocks)
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  }
  Vector w(15);
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
  CHECK((btd_matvec(full, w) - full.densify() * w).cwiseAbs().maxCoeff() <
        1e-13);
  CHECK_THROWS_AS(btd_matvec(full, v), DimensionError);
}

TEST_CASE("precond_apply: hand value and dense agreement") {
  QpData qp = scalar_qp();
  SchurSystem sys = assemble_schur(qp);
  Vector r(2);
  r << 1.0, 0.0;
  Vector rt = precond_apply(sys.precond, r);
  CHECK(rt[0] == Catch::Approx(1.0));
  CHECK(rt[1] == Catch::Approx(1.0 / 3.0));

  QpData qp2 = random_qp(4, 2, 7, 404);
  SchurSystem sys2 = assemble_schur(qp2);
  std::mt19937_64 rng(405);
  std::normal_distribution<double> normal;
  Vector r2(sys2.dim());
  for (Eigen::Index i = 0; i < r2.size(); ++i) r2[i] = normal(rng);
  CHECK((precond_apply(sys2.precond, r2) - sys2.precond.densify() * r2)
            .cwiseAbs()
            .maxCoeff() < 1e-13);
}

TEST_CASE("preconditioner approximates the inverse stair structure") {
  // Phi^{-1} is symmetric and positive definite on these instances, and
  // conditions the stored system noticeably better than identity.
  QpData qp = random_qp(6, 3, 10, 606);
  SchurSystem sys = assemble_schur(qp);
  Matrix phi_inv = sys.precond.densify();
  CHECK((phi_inv - phi_inv.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(phi_inv);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);

  Matrix sys_dense = sys.neg_s.densify();
  auto cond = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> e(m);
    return e.eigenvalues().maxCoeff() / e.eigenvalues().minCoeff();
  };
  Matrix preconditioned = phi_inv * sys_dense;
  // Symmetrize the similarity-equivalent form L' A L for conditioning.
  Eigen::LLT<Matrix> llt(phi_inv);
  Matrix l = llt.matrixL();
  CHECK(cond(l.transpose() * sys_dense * l) < cond(sys_dense));
}
