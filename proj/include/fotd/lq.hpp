#pragma once

#include <vector>

#include "fotd/nldp.hpp"

namespace fotd {

/// Equality-constrained linear-quadratic dynamic program over stages 0..T:
///
///   min  sum_t 1/2 w_t^T H_t w_t + linear_t^T w_t
///   s.t. p_0 = initial,  p_{t+1} = A_t p_t + B_t q_t + offset_t,
///
/// with w_t = (p_t, q_t) for t < T and w_T = p_T. The multiplier zeta_t pairs
/// with the t-th constraint so that stationarity reads
/// H w + G^T zeta = -linear.
struct LqProblem {
  Layout layout;                 ///< horizon T and dimensions
  std::vector<Matrix> hessian;   ///< T+1 blocks
  std::vector<Matrix> jacobian;  ///< T blocks [A_t B_t]
  std::vector<Vector> linear;    ///< T+1 stage linear terms
  Vector initial;
  std::vector<Vector> offset;    ///< T constraint offsets

  void validate() const;
};

struct LqSolution {
  Vector primal; ///< stage-major, layout.primal_size()
  Vector dual;   ///< layout.dual_size()
};

constexpr double kPivotTolerance = 1e-10;

/// 10 * max_t |H_t|_F + 1.
double default_definiteness_constant(const std::vector<Matrix> &hessian);

/// Block-tridiagonal Cholesky of H + c G^T G. True iff the factorization
/// completes with every pivot >= pivot_tol.
bool reduced_hessian_positive(const Layout &layout,
                              const std::vector<Matrix> &hessian,
                              const std::vector<Matrix> &jacobian, double c,
                              double pivot_tol = kPivotTolerance);

/// Solves the KKT system through a banded LU factorization (partial pivoting)
/// of the stage-interleaved matrix with ordering (zeta_t, p_t, q_t) per stage.
LqSolution solve_lq(const LqProblem &qp);

/// Infinity norm of the KKT residual of `s`, and of the right-hand side.
struct LqResidual {
  double residual;
  double rhs;
};
LqResidual lq_kkt_residual(const LqProblem &qp, const LqSolution &s);

} // namespace fotd
