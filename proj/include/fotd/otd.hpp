#pragma once

#include <optional>
#include <vector>

#include "fotd/lq.hpp"
#include "fotd/newton_kkt.hpp"

namespace fotd {

/// Overlapping decomposition of the horizon [0, N].
///
/// Knots 0 = n_0 < ... < n_M = N define the exclusive intervals
/// [n_i, n_{i+1}); interval i is extended by `overlap` stages on both sides
/// and clipped to [0, N].
struct DecompositionPlan {
  struct Interval {
    int m1;
    int m2;
  };

  int horizon = 0;
  int overlap = 0;
  std::vector<int> knots;
  std::vector<Interval> intervals;

  int size() const { return static_cast<int>(intervals.size()); }
  bool is_last(int i) const { return i + 1 == size(); }
  /// True when interval i extends to stage N; such a subproblem keeps g_N
  /// and gets no boundary penalty.
  bool reaches_end(int i) const { return intervals[i].m2 == horizon; }
  Layout local_layout(int i, int nx, int nu) const {
    return {intervals[i].m2 - intervals[i].m1, nx, nu};
  }
};

/// Evenly spaced knots n_i = i N / M; M must divide N.
DecompositionPlan make_plan(int horizon, int subproblems, int overlap);

/// Explicit knots (strictly increasing, first 0, last N).
DecompositionPlan make_plan_with_knots(std::vector<int> knots, int overlap);

/// D_i(z, lambda) = (x_{m1:m2}, u_{m1:m2-1}, lambda_{m1:m2}) for each i.
std::vector<PrimalDual> decompose(const Trajectory &z,
                                  const DualTrajectory &lambda,
                                  const DecompositionPlan &plan);

/// Keeps stage k from the subproblem whose exclusive range holds k; stage N
/// comes from the last subproblem. Overlap stages are discarded.
PrimalDual compose(const std::vector<PrimalDual> &parts,
                   const DecompositionPlan &plan);

/// Boundary data of an LQ subproblem. The last subproblem only uses
/// `initial_state`.
struct BoundaryVars {
  Vector initial_state;    ///< pbar_{m1}
  Vector terminal_state;   ///< pbar_{m2}
  Vector terminal_control; ///< qbar_{m2}
  Vector terminal_dual;    ///< zetabar_{m2+1}
  bool last = false;

  static BoundaryVars zero(int nx, int nu, bool last);
  /// Boundary values read off a full-horizon direction (or iterate).
  static BoundaryVars from(const PrimalDual &full, const DecompositionPlan &plan,
                           int i);
};

/// The LQ subproblem on interval i: stage blocks H_{m1..m2-1}, terminal block
/// Q_{m2} + mu I with linear term grad_{x_{m2}} L - A_{m2}^T zetabar +
/// S_{m2}^T qbar - mu pbar_{m2}, and p_{m1} = pbar_{m1}. The last subproblem
/// (and any interval ending at N) keeps the original terminal block and no
/// penalty.
LqProblem assemble_subproblem(const NewtonData &nd, const DecompositionPlan &plan,
                              int i, double mu, const BoundaryVars &d);

using SubproblemSolution = PrimalDual;

/// Checks the subproblem reduced Hessian (same H + c G^T G test as the full
/// problem) and solves it; throws mu_too_small naming `index` on failure.
SubproblemSolution solve_subproblem(const LqProblem &sub, int index,
                                    std::optional<double> c = std::nullopt);

/// Solves every subproblem with zero boundary data on up to `workers`
/// threads and composes the result. Output does not depend on `workers`.
NewtonDirection approximate_direction(const NewtonData &nd,
                                      const DecompositionPlan &plan, double mu,
                                      int workers = 1,
                                      std::optional<double> c = std::nullopt);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Exceptions are
/// collected and the one with the lowest index is rethrown.
void parallel_for(int count, int workers, const std::function<void(int)> &fn);

} // namespace fotd
