#pragma once

#include <memory>

#include "fotd/otd.hpp"
#include "fotd/sqp.hpp"

namespace fotd {

/// Nonlinear subproblem on [m1, m2] with boundary data taken from a full
/// iterate. The terminal stage of a non-last subproblem carries
///
///   g_{m2}(x, ubar) - lambdabar^T f_{m2}(x, ubar) + mu/2 |x - xbar|^2
///
/// and x_0 of the local horizon is pinned to xbar_{m1}.
struct NonlinearSubproblem {
  int index = 0;
  int m1 = 0;
  int m2 = 0;
  double mu = 0.0;
  BoundaryVars boundary;
  std::shared_ptr<const ProblemDef> problem;
};

NonlinearSubproblem make_nonlinear_subproblem(const ProblemDef &parent,
                                              const DecompositionPlan &plan, int i,
                                              double mu, const BoundaryVars &d);

struct InnerSolveOptions {
  double tol = 1e-8;
  int max_iters = 50;
};

/// Solves the subproblem to optimality with centralized SQP from `warm`.
/// Throws subproblem_failure carrying the subproblem index when the inner
/// solve errors out or runs out of iterations.
PrimalDual solve_nonlinear_subproblem(const NonlinearSubproblem &sub,
                                      const PrimalDual &warm,
                                      InnerSolveOptions opts = {});

/// Overlapping Schwarz iteration: boundary data from the current iterate,
/// every subproblem solved to optimality (warm-started at its restriction),
/// composition of the exclusive stages.
SolveReport schwarz_solve(const ProblemDef &p, const SolverConfig &cfg,
                          const PrimalDual &init, InnerSolveOptions inner = {});

/// One exact (unmodified) Newton step on every subproblem from its
/// restriction of (z, lambda), composed into a full iterate.
PrimalDual one_newton_schwarz_step(const ProblemDef &p, const PrimalDual &state,
                                   const DecompositionPlan &plan, double mu,
                                   int workers = 1);

/// (z, lambda) + approximate Newton direction with unmodified Hessian, zero
/// boundary data and unit step.
PrimalDual fotd_unit_update(const ProblemDef &p, const PrimalDual &state,
                            const DecompositionPlan &plan, double mu, int workers = 1);

/// Infinity-norm distance between the two updates above.
double newton_equivalence_gap(const ProblemDef &p, const PrimalDual &state,
                              const DecompositionPlan &plan, double mu, int workers = 1);

} // namespace fotd
