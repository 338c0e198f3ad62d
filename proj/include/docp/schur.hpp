#pragma once

#include "docp/problem.hpp"

namespace docp {

/// Square block-tridiagonal matrix over `n_blocks` blocks of size n_x.
/// For the symmetric Schur complement the superdiagonal equals the
/// transposed subdiagonal; both halves are stored explicitly so the
/// preconditioner (applied, not factored) shares the same layout.
struct BlockTridiag {
  std::vector<Matrix> diag;   // n_blocks
  std::vector<Matrix> sub;    // n_blocks - 1, block (i+1, i)
  std::vector<Matrix> super;  // n_blocks - 1, block (i, i+1)

  int n_blocks() const { return static_cast<int>(diag.size()); }
  int block_dim() const {
    return diag.empty() ? 0 : static_cast<int>(diag.front().rows());
  }
  Eigen::Index dim() const {
    return static_cast<Eigen::Index>(n_blocks()) * block_dim();
  }

  static BlockTridiag identity(int n_blocks, int block_dim) {
    BlockTridiag m;
    m.diag.assign(n_blocks, Matrix::Identity(block_dim, block_dim));
    m.sub.assign(n_blocks - 1, Matrix::Zero(block_dim, block_dim));
    m.super.assign(n_blocks - 1, Matrix::Zero(block_dim, block_dim));
    return m;
  }

  Matrix densify() const {
    const int nb = n_blocks();
    const int bd = block_dim();
    Matrix full = Matrix::Zero(dim(), dim());
    for (int i = 0; i < nb; ++i) {
      full.block(i * bd, i * bd, bd, bd) = diag[i];
      if (i + 1 < nb) {
        full.block((i + 1) * bd, i * bd, bd, bd) = sub[i];
        full.block(i * bd, (i + 1) * bd, bd, bd) = super[i];
      }
    }
    return full;
  }

  /// Largest deviation from symmetry of the densified matrix.
  double symmetry_error() const {
    double err = 0.0;
    for (const auto& m : diag)
      err = std::max(err, (m - m.transpose()).cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < sub.size(); ++i)
      err = std::max(err,
                     (super[i] - sub[i].transpose()).cwiseAbs().maxCoeff());
    return err;
  }
};

/// Exact block-tridiagonal product y = M v. Block rows are independent:
/// y_i depends only on v_{i-1..i+1}.
inline Vector btd_matvec(const BlockTridiag& m, const Vector& v) {
  const int nb = m.n_blocks();
  const int bd = m.block_dim();
  require(v.size() == m.dim(), "btd_matvec: vector length mismatch");
  Vector y(v.size());
  for (int i = 0; i < nb; ++i) {
    Vector yi = m.diag[i] * v.segment(i * bd, bd);
    if (i > 0) yi.noalias() += m.sub[i - 1] * v.segment((i - 1) * bd, bd);
    if (i + 1 < nb) yi.noalias() += m.super[i] * v.segment((i + 1) * bd, bd);
    y.segment(i * bd, bd) = yi;
  }
  return y;
}

/// Preconditioner application r~ = Phi^{-1} r; same kernel as
/// btd_matvec applied to the preconditioner block layout.
inline Vector precond_apply(const BlockTridiag& p, const Vector& r) {
  return btd_matvec(p, r);
}

/// Negated Schur complement of the QP KKT system together with its
/// stair preconditioner and the factorizations reused for assembly and
/// primal recovery. The sign convention stores -S (positive definite)
/// and solves (-S) lambda = (-gamma), which leaves lambda unchanged.
struct SchurSystem {
  int n_x = 0;
  int n_u = 0;
  int horizon = 0;

  BlockTridiag neg_s;    // diag: (Q_0^{-1}, chi_0, ..., chi_{T-1})
  BlockTridiag precond;  // stair approximation of (-S)^{-1}
  std::vector<Eigen::LLT<Matrix>> chol_Q;  // T+1
  std::vector<Eigen::LLT<Matrix>> chol_R;  // T

  Eigen::Index dim() const { return neg_s.dim(); }
};

namespace detail {

inline Eigen::LLT<Matrix> llt_or_throw(const Matrix& m, const char* name,
                                       int stage) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string("assemble_schur: Cholesky of ") + name +
                         " failed at stage " + std::to_string(stage));
  }
  return llt;
}

}  // namespace detail

/// Assembles -S, the stair preconditioner and the cached factorizations
/// from one iteration's QP data. Per-stage blocks are independent;
/// `workers` only changes the computation schedule, never the values.
inline SchurSystem assemble_schur(const QpData& qp, unsigned workers = 1) {
  const int T = qp.horizon;
  const int nx = qp.n_x;
  SchurSystem sys;
  sys.n_x = nx;
  sys.n_u = qp.n_u;
  sys.horizon = T;
  sys.chol_Q.resize(T + 1);
  sys.chol_R.resize(T);
  sys.neg_s.diag.resize(T + 1);
  sys.neg_s.sub.resize(T);
  sys.neg_s.super.resize(T);
  sys.precond.diag.resize(T + 1);
  sys.precond.sub.resize(T);
  sys.precond.super.resize(T);

  // Factorizations first; chi assembly reads neighbouring stages.
  parallel_for(static_cast<std::size_t>(T + 1), workers, [&](std::size_t t) {
    sys.chol_Q[t] = detail::llt_or_throw(qp.Q[t], "Q", static_cast<int>(t));
  });
  parallel_for(static_cast<std::size_t>(T), workers, [&](std::size_t t) {
    sys.chol_R[t] = detail::llt_or_throw(qp.R[t], "R", static_cast<int>(t));
  });

  const Matrix eye = Matrix::Identity(nx, nx);
  std::vector<Eigen::LLT<Matrix>> chol_chi(T);

  // diag[0] = Q_0^{-1}; diag[t+1] = chi_t; sub[t] = phi_t with
  // chi_t = A_t Q_t^{-1} A_t' + B_t R_t^{-1} B_t' + A_t^+ Q_{t+1}^{-1} A_t^+'
  // phi_t = A_t Q_t^{-1} A_{t-1}^+' and A_{-1}^+ = I.
  sys.neg_s.diag[0] = sys.chol_Q[0].solve(eye);
  sys.neg_s.diag[0] = 0.5 * (sys.neg_s.diag[0] +
                             sys.neg_s.diag[0].transpose().eval());
  parallel_for(static_cast<std::size_t>(T), workers, [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    Matrix chi = qp.A[t] * sys.chol_Q[t].solve(qp.A[t].transpose());
    chi.noalias() += qp.B[t] * sys.chol_R[t].solve(qp.B[t].transpose());
    chi.noalias() +=
        qp.A_plus[t] * sys.chol_Q[t + 1].solve(qp.A_plus[t].transpose());
    sys.neg_s.diag[t + 1] = 0.5 * (chi + chi.transpose().eval());

    Matrix prev_ap_t = (t == 0) ? eye : Matrix(qp.A_plus[t - 1].transpose());
    sys.neg_s.sub[t] = qp.A[t] * sys.chol_Q[t].solve(prev_ap_t);
    sys.neg_s.super[t] = sys.neg_s.sub[t].transpose();

    chol_chi[t] =
        detail::llt_or_throw(sys.neg_s.diag[t + 1], "chi", t);
    sys.precond.diag[t + 1] = chol_chi[t].solve(eye);
    sys.precond.diag[t + 1] =
        0.5 * (sys.precond.diag[t + 1] +
               sys.precond.diag[t + 1].transpose().eval());
  });

  // Stair preconditioner: diagonal (Q_0, chi_0^{-1}, ..., chi_{T-1}^{-1}),
  // off-diagonal (t, t+1) = -D_t phi_t' D_{t+1} and its transpose, where
  // D is the preconditioner diagonal. Off-diagonal blocks are formed
  // explicitly because they are applied every PCG iteration.
  sys.precond.diag[0] = qp.Q[0];
  parallel_for(static_cast<std::size_t>(T), workers, [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    sys.precond.super[t] = -sys.precond.diag[t] *
                           sys.neg_s.sub[t].transpose() *
                           sys.precond.diag[t + 1];
    sys.precond.sub[t] = sys.precond.super[t].transpose();
  });
  return sys;
}

/// gamma = d + H G^{-1} b for the stage-structured (G, H), returned
/// negated to match the stored -S:
///   gamma_0     = d_0 + Q_0^{-1} b_{x_0}
///   gamma_{t+1} = d_{t+1} + A_t Q_t^{-1} b_{x_t} + B_t R_t^{-1} b_{u_t}
///                 + A_t^+ Q_{t+1}^{-1} b_{x_{t+1}}
inline Vector assemble_gamma(const QpData& qp, const SchurSystem& sys,
                             const Vector& b, const Vector& d) {
  const int T = qp.horizon;
  const int nx = qp.n_x;
  const int nu = qp.n_u;
  require(b.size() == qp.primal_size(), "assemble_gamma: b length mismatch");
  require(d.size() == qp.dual_size(), "assemble_gamma: d length mismatch");

  Vector gamma(d.size());
  gamma.head(nx) =
      d.head(nx) + sys.chol_Q[0].solve(b.segment(flat_offset(nx, nu, 0, true), nx));
  for (int t = 0; t < T; ++t) {
    Vector zeta =
        qp.A[t] *
        sys.chol_Q[t].solve(b.segment(flat_offset(nx, nu, t, true), nx));
    zeta.noalias() +=
        qp.B[t] *
        sys.chol_R[t].solve(b.segment(flat_offset(nx, nu, t, false), nu));
    zeta.noalias() +=
        qp.A_plus[t] *
        sys.chol_Q[t + 1].solve(b.segment(flat_offset(nx, nu, t + 1, true), nx));
    gamma.segment((t + 1) * nx, nx) = d.segment((t + 1) * nx, nx) + zeta;
  }
  return -gamma;
}

}  // namespace docp
