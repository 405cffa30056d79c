#include "fotd/schwarz.hpp"

#include <chrono>

namespace fotd {

namespace {

ProblemCallbacks truncated_callbacks(std::shared_ptr<const ProblemCallbacks> parent, int m1,
                                     int T, bool last, double mu, const BoundaryVars &d) {
  struct Terminal {
    Vector xbar, ubar, lbar;
    double mu;
  };
  auto term = std::make_shared<const Terminal>(
      Terminal{d.terminal_state, d.terminal_control, d.terminal_dual, mu});
  const int m2 = m1 + T;
  // Non-last terminal stage: evaluate the parent stage m2 with u fixed.
  auto shifted = [m1](int t) { return m1 + t; };
  auto adjusted = [T, last](int t) { return t == T && !last; };

  ProblemCallbacks cb;
  cb.cost = [=](int t, const Vector &x, const Vector &u) {
    if (!adjusted(t)) return parent->cost(shifted(t), x, u);
    const Vector e = x - term->xbar;
    return parent->cost(m2, x, term->ubar) -
           term->lbar.dot(parent->dynamics(m2, x, term->ubar)) +
           0.5 * term->mu * e.squaredNorm();
  };
  cb.cost_gradient = [=](int t, const Vector &x, const Vector &u) -> Vector {
    if (!adjusted(t)) return parent->cost_gradient(shifted(t), x, u);
    const Eigen::Index nx = x.size();
    const Vector g = parent->cost_gradient(m2, x, term->ubar).head(nx);
    const Matrix A = parent->dynamics_jacobian(m2, x, term->ubar).leftCols(nx);
    return g - A.transpose() * term->lbar + term->mu * (x - term->xbar);
  };
  cb.cost_hessian = [=](int t, const Vector &x, const Vector &u) -> Matrix {
    if (!adjusted(t)) return parent->cost_hessian(shifted(t), x, u);
    const Eigen::Index nx = x.size();
    Matrix h = parent->cost_hessian(m2, x, term->ubar).topLeftCorner(nx, nx);
    h += parent->dynamics_hessian_contraction(m2, x, term->ubar, term->lbar)
             .topLeftCorner(nx, nx);
    h.diagonal().array() += term->mu;
    return h;
  };
  cb.dynamics = [=](int t, const Vector &x, const Vector &u) {
    return parent->dynamics(shifted(t), x, u);
  };
  cb.dynamics_jacobian = [=](int t, const Vector &x, const Vector &u) {
    return parent->dynamics_jacobian(shifted(t), x, u);
  };
  cb.dynamics_hessian_contraction = [=](int t, const Vector &x, const Vector &u,
                                        const Vector &l) {
    return parent->dynamics_hessian_contraction(shifted(t), x, u, l);
  };
  return cb;
}

PrimalDual restrict_to(const PrimalDual &full, const DecompositionPlan &plan, int i) {
  return decompose(full.z, full.lambda, plan)[i];
}

double inf_distance(const PrimalDual &a, const PrimalDual &b) {
  return std::max((a.z.data - b.z.data).lpNorm<Eigen::Infinity>(),
                  (a.lambda.data - b.lambda.data).lpNorm<Eigen::Infinity>());
}

} // namespace

NonlinearSubproblem make_nonlinear_subproblem(const ProblemDef &parent,
                                              const DecompositionPlan &plan, int i,
                                              double mu, const BoundaryVars &d) {
  if (i < 0 || i >= plan.size()) throw_invalid("subproblem index out of range");
  if (plan.horizon != parent.horizon()) throw_invalid("plan horizon does not match problem");
  if (!(mu >= 0.0)) throw_invalid("mu must be nonnegative");
  NonlinearSubproblem sub;
  sub.index = i;
  sub.m1 = plan.intervals[i].m1;
  sub.m2 = plan.intervals[i].m2;
  sub.mu = mu;
  sub.boundary = d;
  sub.boundary.last = plan.reaches_end(i);
  auto cbs = std::make_shared<const ProblemCallbacks>(parent.callbacks());
  const int T = sub.m2 - sub.m1;
  sub.problem = std::make_shared<const ProblemDef>(
      T, parent.nx(), parent.nu(), d.initial_state,
      truncated_callbacks(cbs, sub.m1, T, sub.boundary.last, mu, sub.boundary));
  return sub;
}

PrimalDual solve_nonlinear_subproblem(const NonlinearSubproblem &sub, const PrimalDual &warm,
                                      InnerSolveOptions opts) {
  SolverConfig cfg;
  cfg.kkt_tol = opts.tol;
  cfg.step_tol = 1e-12;
  cfg.max_iters = opts.max_iters;
  cfg.assert_level = AssertLevel::off;
  const auto report = solve(*sub.problem, cfg, warm, SolveMode::centralized);
  if (report.status == SolveStatus::error)
    throw Error(ErrorCode::subproblem_failure,
                "subproblem " + std::to_string(sub.index) + ": " + report.message, sub.index);
  if (!report.converged())
    throw Error(ErrorCode::subproblem_failure,
                "subproblem " + std::to_string(sub.index) + " did not converge within " +
                    std::to_string(opts.max_iters) + " inner iterations (residual " +
                    std::to_string(report.final_residual()) + ")",
                sub.index);
  return report.solution;
}

SolveReport schwarz_solve(const ProblemDef &p, const SolverConfig &cfg, const PrimalDual &init,
                          InnerSolveOptions inner) {
  cfg.validate();
  p.check(init.z);
  p.check(init.lambda);
  const auto start = std::chrono::steady_clock::now();
  const auto since = [](std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t)
        .count();
  };
  const DecompositionPlan plan = plan_for(cfg, p.horizon());

  SolveReport report;
  report.final_config = cfg;
  PrimalDual state = init;
  state.z.x(0) = p.initial_state();

  for (int iter = 0;; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord r;
    r.iter = iter;
    r.kkt_residual = eval_lagrangian_gradient(p, state.z, state.lambda).norm();
    r.merit = eval_merit(p, state.z, state.lambda, cfg.eta);
    if (r.kkt_residual <= cfg.kkt_tol) {
      report.records.push_back(r);
      report.status = SolveStatus::converged_kkt;
      break;
    }
    if (iter >= cfg.max_iters) {
      report.records.push_back(r);
      report.status = SolveStatus::max_iters;
      break;
    }
    std::vector<PrimalDual> parts(plan.size());
    try {
      const auto warm = decompose(state.z, state.lambda, plan);
      parallel_for(plan.size(), cfg.workers, [&](int i) {
        const auto sub = make_nonlinear_subproblem(p, plan, i, cfg.mu,
                                                   BoundaryVars::from(state, plan, i));
        parts[i] = solve_nonlinear_subproblem(sub, warm[i], inner);
      });
    } catch (const Error &e) {
      report.records.push_back(r);
      report.status = SolveStatus::error;
      report.error = e.code();
      report.message = e.what();
      break;
    }
    PrimalDual next = compose(parts, plan);
    next.z.x(0) = p.initial_state();
    const double step = std::sqrt((next.z.data - state.z.data).squaredNorm() +
                                  (next.lambda.data - state.lambda.data).squaredNorm());
    state = std::move(next);
    r.wall_ms = since(t0);
    report.records.push_back(r);
    if (step <= cfg.step_tol) {
      IterationRecord last;
      last.iter = iter + 1;
      last.kkt_residual = eval_lagrangian_gradient(p, state.z, state.lambda).norm();
      last.merit = eval_merit(p, state.z, state.lambda, cfg.eta);
      report.records.push_back(last);
      report.status = last.kkt_residual <= cfg.kkt_tol ? SolveStatus::converged_kkt
                                                       : SolveStatus::converged_step;
      break;
    }
  }
  report.solution = std::move(state);
  report.total_ms = since(start);
  return report;
}

PrimalDual one_newton_schwarz_step(const ProblemDef &p, const PrimalDual &state,
                                   const DecompositionPlan &plan, double mu, int workers) {
  p.check(state.z);
  p.check(state.lambda);
  if (plan.horizon != p.horizon()) throw_invalid("plan horizon does not match problem");
  std::vector<PrimalDual> parts(plan.size());
  parallel_for(plan.size(), workers, [&](int i) {
    const auto sub = make_nonlinear_subproblem(p, plan, i, mu, BoundaryVars::from(state, plan, i));
    const PrimalDual local = restrict_to(state, plan, i);
    const auto nd = assemble_newton_data(*sub.problem, local.z, local.lambda);
    const auto dir = solve_full_newton(nd);
    parts[i] = {Trajectory(local.z.layout, local.z.data + dir.z.data),
                DualTrajectory(local.lambda.layout, local.lambda.data + dir.lambda.data)};
  });
  return compose(parts, plan);
}

PrimalDual fotd_unit_update(const ProblemDef &p, const PrimalDual &state,
                            const DecompositionPlan &plan, double mu, int workers) {
  p.check(state.z);
  p.check(state.lambda);
  const auto nd = assemble_newton_data(p, state.z, state.lambda);
  const auto dir = approximate_direction(nd, plan, mu, workers);
  return {Trajectory(state.z.layout, state.z.data + dir.z.data),
          DualTrajectory(state.lambda.layout, state.lambda.data + dir.lambda.data)};
}

double newton_equivalence_gap(const ProblemDef &p, const PrimalDual &state,
                              const DecompositionPlan &plan, double mu, int workers) {
  return inf_distance(one_newton_schwarz_step(p, state, plan, mu, workers),
                      fotd_unit_update(p, state, plan, mu, workers));
}

} // namespace fotd
