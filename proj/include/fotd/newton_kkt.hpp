#pragma once

#include <vector>

#include "fotd/lq.hpp"
#include "fotd/nldp.hpp"

namespace fotd {

/// Linearization of the program at an iterate: Lagrangian Hessian blocks
/// (possibly shifted), dynamics Jacobians and the KKT residual stages.
struct NewtonData {
  Layout layout;
  std::vector<Matrix> hessian;  ///< H_0..H_N, after any modification
  std::vector<Matrix> jacobian; ///< [A_k B_k], k < N
  Vector grad_z;
  Vector grad_lambda;
  double gamma_applied = 0.0;

  auto A(int k) const { return jacobian[k].leftCols(layout.nx); }
  auto B(int k) const { return jacobian[k].rightCols(layout.nu); }
  double residual_norm() const {
    return std::sqrt(grad_z.squaredNorm() + grad_lambda.squaredNorm());
  }
};

using NewtonDirection = PrimalDual;

NewtonData assemble_newton_data(const ProblemDef &p, const Trajectory &z,
                                const DualTrajectory &lambda);

double default_definiteness_constant(const NewtonData &nd);

/// Certifies Z^T H Z > 0 through a complete Cholesky of H + c G^T G.
bool check_reduced_hessian(const NewtonData &nd, double c);

/// Levenberg shift H + gamma I on every stage block. Returns `nd` untouched
/// if it already passes; otherwise searches gamma_0 * gamma_step^j with
/// gamma_0 = 1e-4 (1 + max_k |H_k|).
NewtonData modify_hessian(NewtonData nd, double c, double gamma_step = 2.0);

/// The full-horizon Newton system as an LQ program in (dz, dlambda).
LqProblem full_newton_lq(const NewtonData &nd);

/// Exact solution of the full Newton/KKT system.
NewtonDirection solve_full_newton(const NewtonData &nd);

/// Lower bound on the eigenvalues of G G^T implied by controllability.
double theory_gamma_G(double gamma_c, double t, double upsilon_upper);

/// Penalty threshold above which every LQ subproblem is uniquely solvable.
double theory_mu_bar(double gamma_c, double t, double upsilon_upper);

} // namespace fotd
