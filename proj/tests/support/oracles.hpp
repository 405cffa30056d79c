#pragma once

// Reference computations used by the tests. Everything here works on dense
// matrices assembled directly from stage blocks, so it shares no code path
// with the structured solvers under test.

#include <functional>
#include <random>

#include <Eigen/Dense>

#include "fotd/lq.hpp"
#include "fotd/newton_kkt.hpp"

namespace oracle {

using fotd::Matrix;
using fotd::Vector;

struct DenseKkt {
  Vector primal;
  Vector dual;
};

inline int stage_start(int t, int nx, int nu) { return t * (nx + nu); }

/// Dense staircase Jacobian: row block 0 is [I 0 ...], row block t+1 is
/// [... -A_t -B_t I ...].
inline Matrix dense_constraint_jacobian(int T, int nx, int nu,
                                        const std::vector<Matrix> &jac) {
  const int n = (T + 1) * nx + T * nu, m = (T + 1) * nx;
  Matrix G = Matrix::Zero(m, n);
  G.block(0, 0, nx, nx).setIdentity();
  for (int t = 0; t < T; ++t) {
    G.block((t + 1) * nx, stage_start(t, nx, nu), nx, nx + nu) = -jac[t];
    G.block((t + 1) * nx, stage_start(t + 1, nx, nu), nx, nx).setIdentity();
  }
  return G;
}

inline Matrix dense_block_diagonal(int T, int nx, int nu, const std::vector<Matrix> &blocks) {
  const int n = (T + 1) * nx + T * nu;
  Matrix H = Matrix::Zero(n, n);
  for (int t = 0; t <= T; ++t) {
    const int s = t < T ? nx + nu : nx;
    H.block(stage_start(t, nx, nu), stage_start(t, nx, nu), s, s) = blocks[t];
  }
  return H;
}

inline DenseKkt dense_solve(const Matrix &H, const Matrix &G, const Vector &g,
                            const Vector &c) {
  const int n = H.rows(), m = G.rows();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, m) = G.transpose();
  K.bottomLeftCorner(m, n) = G;
  Vector rhs(n + m);
  rhs << g, c;
  const Vector sol = K.fullPivLu().solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

/// KKT solution of an LQ program: H w + G^T zeta = -linear, G w = (initial, offset).
inline DenseKkt dense_lq(const fotd::LqProblem &qp) {
  const int T = qp.layout.horizon, nx = qp.layout.nx, nu = qp.layout.nu;
  const Matrix H = dense_block_diagonal(T, nx, nu, qp.hessian);
  const Matrix G = dense_constraint_jacobian(T, nx, nu, qp.jacobian);
  Vector g(H.rows()), c(G.rows());
  for (int t = 0; t <= T; ++t)
    g.segment(stage_start(t, nx, nu), qp.linear[t].size()) = -qp.linear[t];
  c.head(nx) = qp.initial;
  for (int t = 0; t < T; ++t) c.segment((t + 1) * nx, nx) = qp.offset[t];
  return dense_solve(H, G, g, c);
}

/// Newton step [H G^T; G 0] (dz, dlambda) = -(grad_z L, grad_lambda L).
inline DenseKkt dense_newton(const fotd::NewtonData &nd) {
  const int T = nd.layout.horizon, nx = nd.layout.nx, nu = nd.layout.nu;
  return dense_solve(dense_block_diagonal(T, nx, nu, nd.hessian),
                     dense_constraint_jacobian(T, nx, nu, nd.jacobian), -nd.grad_z,
                     -nd.grad_lambda);
}

/// Smallest eigenvalue of Z^T H Z for an orthonormal null-space basis Z of G.
inline double reduced_hessian_min_eig(int T, int nx, int nu,
                                      const std::vector<Matrix> &hessian,
                                      const std::vector<Matrix> &jac) {
  const Matrix H = dense_block_diagonal(T, nx, nu, hessian);
  const Matrix G = dense_constraint_jacobian(T, nx, nu, jac);
  const Matrix K = G.fullPivLu().kernel();
  const Matrix Z = K.householderQr().householderQ() * Matrix::Identity(K.rows(), K.cols());
  return Eigen::SelfAdjointEigenSolver<Matrix>(Z.transpose() * H * Z).eigenvalues().minCoeff();
}

inline Matrix random_matrix(std::mt19937_64 &rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64 &rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// Random symmetric block, not necessarily positive definite.
inline Matrix random_symmetric(std::mt19937_64 &rng, int n, double shift) {
  const Matrix r = random_matrix(rng, n, n);
  return 0.5 * (r + r.transpose()) + shift * Matrix::Identity(n, n);
}

/// Newton data with random blocks whose reduced Hessian is certified
/// positive definite.
inline fotd::NewtonData random_newton_data(std::mt19937_64 &rng, int T, int nx, int nu) {
  std::uniform_real_distribution<double> shift(0.5, 3.0);
  for (;;) {
    fotd::NewtonData nd;
    nd.layout = {T, nx, nu};
    for (int t = 0; t < T; ++t) {
      nd.hessian.push_back(random_symmetric(rng, nx + nu, shift(rng) * (nx + nu)));
      Matrix j(nx, nx + nu);
      j << random_matrix(rng, nx, nx, 0.5), random_matrix(rng, nx, nu);
      nd.jacobian.push_back(j);
    }
    nd.hessian.push_back(random_symmetric(rng, nx, shift(rng) * nx));
    nd.grad_z = random_vector(rng, nd.layout.primal_size());
    nd.grad_lambda = random_vector(rng, nd.layout.dual_size());
    if (fotd::check_reduced_hessian(nd, fotd::default_definiteness_constant(nd)))
      return nd;
  }
}

inline double relative_error(const Vector &a, const Vector &b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// Central-difference gradient.
inline Vector fd_gradient(const std::function<double(const Vector &)> &f, const Vector &x,
                          double h = 1e-6) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    const double fp = f(xp);
    xp[i] = x[i] - step;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Central-difference Jacobian of a vector map.
inline Matrix fd_jacobian(const std::function<Vector(const Vector &)> &f, const Vector &x,
                          double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    const Vector fp = f(xp);
    xp[i] = x[i] - step;
    const Vector fm = f(xp);
    xp[i] = x[i];
    J.col(i) = (fp - fm) / (2.0 * step);
  }
  return J;
}

} // namespace oracle
