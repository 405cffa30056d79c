#include "fotd/lq.hpp"

#include <algorithm>
#include <cmath>

#include <lapacke.h>

namespace fotd {

void LqProblem::validate() const {
  const int T = layout.horizon, nx = layout.nx, nu = layout.nu;
  if (T < 1 || nx < 1 || nu < 1) throw_invalid("lq problem: bad dimensions");
  if (static_cast<int>(hessian.size()) != T + 1 ||
      static_cast<int>(linear.size()) != T + 1 ||
      static_cast<int>(jacobian.size()) != T ||
      static_cast<int>(offset.size()) != T || initial.size() != nx)
    throw_invalid("lq problem: inconsistent stage counts");
  for (int t = 0; t <= T; ++t) {
    const int n = layout.stage_size(t);
    if (hessian[t].rows() != n || hessian[t].cols() != n || linear[t].size() != n)
      throw_invalid("lq problem: stage " + std::to_string(t) + " has wrong block size");
  }
  for (int t = 0; t < T; ++t)
    if (jacobian[t].rows() != nx || jacobian[t].cols() != nx + nu ||
        offset[t].size() != nx)
      throw_invalid("lq problem: constraint " + std::to_string(t) + " has wrong size");
}

double default_definiteness_constant(const std::vector<Matrix> &hessian) {
  double m = 0.0;
  for (const auto &h : hessian) m = std::max(m, h.norm());
  return 10.0 * m + 1.0;
}

bool reduced_hessian_positive(const Layout &l, const std::vector<Matrix> &hessian,
                              const std::vector<Matrix> &jacobian, double c,
                              double pivot_tol) {
  if (!(c > 0.0)) throw_invalid("definiteness constant must be positive");
  const int T = l.horizon, nx = l.nx;
  // Diagonal block t: H_t + c (S^T S + J_t^T J_t), S selecting p_t.
  // Coupling (t, t+1): -c J_t^T S.
  Matrix carry; // Schur update for the next diagonal block
  for (int t = 0; t <= T; ++t) {
    Matrix d = hessian[t];
    d.topLeftCorner(nx, nx).diagonal().array() += c;
    if (t < T) d.noalias() += c * jacobian[t].transpose() * jacobian[t];
    if (t > 0) d -= carry;
    Eigen::LLT<Matrix> llt(d);
    if (llt.info() != Eigen::Success) return false;
    const Matrix &lower = llt.matrixLLT();
    for (int i = 0; i < d.rows(); ++i) {
      const double pivot = lower(i, i) * lower(i, i);
      if (!(pivot >= pivot_tol)) return false;
    }
    if (t < T) {
      // W = L_t^{-1} C_t, C_t = -c J_t^T [I 0]
      Matrix coupling = Matrix::Zero(d.rows(), l.stage_size(t + 1));
      coupling.leftCols(nx) = -c * jacobian[t].transpose();
      llt.matrixL().solveInPlace(coupling);
      carry = coupling.transpose() * coupling;
    }
  }
  return true;
}

namespace {

struct Interleaving {
  int nx, nu, block;
  explicit Interleaving(const Layout &l)
      : nx(l.nx), nu(l.nu), block(2 * l.nx + l.nu) {}
  int dual(int t) const { return t * block; }
  int primal(int t) const { return t * block + nx; }
};

class BandMatrix {
public:
  BandMatrix(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1),
        data_(static_cast<std::size_t>(ld_) * n, 0.0) {}

  void add(int i, int j, double v) {
    data_[static_cast<std::size_t>(j) * ld_ + (kl_ + ku_ + i - j)] += v;
  }
  template <typename Derived>
  void add_block(int i0, int j0, const Eigen::MatrixBase<Derived> &m) {
    for (int j = 0; j < m.cols(); ++j)
      for (int i = 0; i < m.rows(); ++i)
        if (m(i, j) != 0.0) add(i0 + i, j0 + j, m(i, j));
  }

  int n() const { return n_; }
  int kl() const { return kl_; }
  int ku() const { return ku_; }
  int ld() const { return ld_; }
  double *data() { return data_.data(); }

private:
  int n_, kl_, ku_, ld_;
  std::vector<double> data_;
};

} // namespace

LqSolution solve_lq(const LqProblem &qp) {
  qp.validate();
  const auto &l = qp.layout;
  const int T = l.horizon, nx = l.nx, nu = l.nu;
  const Interleaving ix(l);
  const int n = (T + 1) * (2 * nx) + T * nu;
  const int band = ix.block - 1;
  BandMatrix kkt(n, band, band);
  Vector rhs(n);
  const Matrix eye = Matrix::Identity(nx, nx);

  for (int t = 0; t <= T; ++t) {
    const int ns = l.stage_size(t);
    // constraint row t
    kkt.add_block(ix.dual(t), ix.primal(t), eye);
    if (t == 0) {
      rhs.segment(ix.dual(0), nx) = qp.initial;
    } else {
      kkt.add_block(ix.dual(t), ix.primal(t - 1), -qp.jacobian[t - 1]);
      rhs.segment(ix.dual(t), nx) = qp.offset[t - 1];
    }
    // stationarity rows for w_t
    kkt.add_block(ix.primal(t), ix.primal(t), qp.hessian[t]);
    kkt.add_block(ix.primal(t), ix.dual(t), eye);
    if (t < T)
      kkt.add_block(ix.primal(t), ix.dual(t + 1), -qp.jacobian[t].transpose());
    rhs.segment(ix.primal(t), ns) = -qp.linear[t];
  }

  std::vector<lapack_int> ipiv(n);
  const lapack_int info =
      LAPACKE_dgbsv(LAPACK_COL_MAJOR, n, kkt.kl(), kkt.ku(), 1, kkt.data(),
                    kkt.ld(), ipiv.data(), rhs.data(), n);
  if (info != 0)
    throw Error(ErrorCode::linear_solver,
                info > 0 ? "singular KKT matrix (zero pivot at row " +
                               std::to_string(info) + ")"
                         : "invalid argument to banded solver");
  if (!rhs.allFinite())
    throw Error(ErrorCode::linear_solver, "non-finite KKT solution");

  LqSolution s{Vector(l.primal_size()), Vector(l.dual_size())};
  for (int t = 0; t <= T; ++t) {
    s.dual.segment(t * nx, nx) = rhs.segment(ix.dual(t), nx);
    s.primal.segment(l.stage_offset(t), l.stage_size(t)) =
        rhs.segment(ix.primal(t), l.stage_size(t));
  }
  return s;
}

LqResidual lq_kkt_residual(const LqProblem &qp, const LqSolution &s) {
  const auto &l = qp.layout;
  Vector stat = apply_block_diagonal(l, qp.hessian, s.primal) +
                apply_jacobian_transpose(l, qp.jacobian, s.dual);
  Vector gw = apply_jacobian(l, qp.jacobian, s.primal);
  double res = 0.0, rhs = 0.0;
  for (int t = 0; t <= l.horizon; ++t) {
    const int off = l.stage_offset(t), ns = l.stage_size(t);
    res = std::max(res, (stat.segment(off, ns) + qp.linear[t]).lpNorm<Eigen::Infinity>());
    rhs = std::max(rhs, qp.linear[t].lpNorm<Eigen::Infinity>());
    const Vector &target = t == 0 ? qp.initial : qp.offset[t - 1];
    res = std::max(res, (gw.segment(t * l.nx, l.nx) - target).lpNorm<Eigen::Infinity>());
    rhs = std::max(rhs, target.lpNorm<Eigen::Infinity>());
  }
  return {res, rhs};
}

} // namespace fotd
