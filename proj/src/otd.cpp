#include "fotd/otd.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace fotd {

DecompositionPlan make_plan(int horizon, int subproblems, int overlap) {
  if (subproblems < 1 || subproblems > horizon)
    throw_invalid("number of subproblems M=" + std::to_string(subproblems) +
                  " must lie in [1, N=" + std::to_string(horizon) + "]");
  if (horizon % subproblems != 0)
    throw_invalid("M=" + std::to_string(subproblems) + " does not divide N=" +
                  std::to_string(horizon) + "; use explicit knots");
  std::vector<int> knots(subproblems + 1);
  for (int i = 0; i <= subproblems; ++i) knots[i] = i * (horizon / subproblems);
  return make_plan_with_knots(std::move(knots), overlap);
}

DecompositionPlan make_plan_with_knots(std::vector<int> knots, int overlap) {
  if (knots.size() < 2 || knots.front() != 0)
    throw_invalid("knots must start at 0 and contain at least two entries");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (knots[i] <= knots[i - 1]) throw_invalid("knots must be strictly increasing");
  const int horizon = knots.back();
  if (overlap < 1 || overlap >= horizon)
    throw_invalid("overlap b=" + std::to_string(overlap) + " must lie in [1, N)");
  DecompositionPlan plan;
  plan.horizon = horizon;
  plan.overlap = overlap;
  plan.knots = std::move(knots);
  for (std::size_t i = 0; i + 1 < plan.knots.size(); ++i)
    plan.intervals.push_back({std::max(plan.knots[i] - overlap, 0),
                              std::min(plan.knots[i + 1] + overlap, horizon)});
  return plan;
}

std::vector<PrimalDual> decompose(const Trajectory &z, const DualTrajectory &lambda,
                                  const DecompositionPlan &plan) {
  const auto &l = z.layout;
  if (l.horizon != plan.horizon) throw_invalid("plan horizon does not match trajectory");
  std::vector<PrimalDual> parts;
  parts.reserve(plan.size());
  for (int i = 0; i < plan.size(); ++i) {
    const auto [m1, m2] = plan.intervals[i];
    const Layout local = plan.local_layout(i, l.nx, l.nu);
    Trajectory zi(local, z.data.segment(l.stage_offset(m1), local.primal_size()));
    DualTrajectory li(local, lambda.data.segment(m1 * l.nx, local.dual_size()));
    parts.push_back({std::move(zi), std::move(li)});
  }
  return parts;
}

PrimalDual compose(const std::vector<PrimalDual> &parts, const DecompositionPlan &plan) {
  if (static_cast<int>(parts.size()) != plan.size())
    throw_invalid("compose needs one part per subproblem (got " +
                  std::to_string(parts.size()) + ", plan has " +
                  std::to_string(plan.size()) + ")");
  const int nx = parts.front().z.layout.nx, nu = parts.front().z.layout.nu;
  const Layout full{plan.horizon, nx, nu};
  PrimalDual out{Trajectory(full), DualTrajectory(full)};
  for (int i = 0; i < plan.size(); ++i) {
    const int m1 = plan.intervals[i].m1;
    const auto &part = parts[i];
    if (!(part.z.layout == plan.local_layout(i, nx, nu)) ||
        !(part.lambda.layout == part.z.layout))
      throw_invalid("part " + std::to_string(i) + " does not match the plan");
    const int end = plan.is_last(i) ? plan.knots[i + 1] + 1 : plan.knots[i + 1];
    for (int k = plan.knots[i]; k < end; ++k) {
      out.z.stage(k) = part.z.stage(k - m1);
      out.lambda.at(k) = part.lambda.at(k - m1);
    }
  }
  return out;
}

BoundaryVars BoundaryVars::zero(int nx, int nu, bool last) {
  return {Vector::Zero(nx), Vector::Zero(nx), Vector::Zero(nu), Vector::Zero(nx), last};
}

BoundaryVars BoundaryVars::from(const PrimalDual &full, const DecompositionPlan &plan,
                                int i) {
  const auto &l = full.z.layout;
  const auto [m1, m2] = plan.intervals[i];
  BoundaryVars d = zero(l.nx, l.nu, plan.reaches_end(i));
  d.initial_state = full.z.x(m1);
  if (!d.last) {
    d.terminal_state = full.z.x(m2);
    d.terminal_control = full.z.u(m2);
    d.terminal_dual = full.lambda.at(m2 + 1);
  }
  return d;
}

LqProblem assemble_subproblem(const NewtonData &nd, const DecompositionPlan &plan,
                              int i, double mu, const BoundaryVars &d) {
  if (!(mu >= 0.0)) throw_invalid("mu must be nonnegative");
  if (i < 0 || i >= plan.size()) throw_invalid("subproblem index out of range");
  const auto &l = nd.layout;
  const int nx = l.nx;
  const auto [m1, m2] = plan.intervals[i];
  const bool last = plan.reaches_end(i);

  LqProblem qp;
  qp.layout = plan.local_layout(i, l.nx, l.nu);
  const int T = qp.layout.horizon;
  qp.hessian.resize(T + 1);
  qp.linear.resize(T + 1);
  qp.jacobian.resize(T);
  qp.offset.resize(T);
  for (int t = 0; t < T; ++t) {
    const int k = m1 + t;
    qp.hessian[t] = nd.hessian[k];
    qp.linear[t] = nd.grad_z.segment(l.stage_offset(k), l.nx + l.nu);
    qp.jacobian[t] = nd.jacobian[k];
    qp.offset[t] = -nd.grad_lambda.segment((k + 1) * nx, nx);
  }
  qp.initial = d.initial_state;

  const Vector grad_x = nd.grad_z.segment(l.stage_offset(m2), nx);
  if (last) {
    qp.hessian[T] = nd.hessian[m2];
    qp.linear[T] = grad_x;
  } else {
    const Matrix &h = nd.hessian[m2];
    const auto S = h.bottomLeftCorner(l.nu, nx);
    qp.hessian[T] = h.topLeftCorner(nx, nx);
    qp.hessian[T].diagonal().array() += mu;
    qp.linear[T] = grad_x - nd.A(m2).transpose() * d.terminal_dual +
                   S.transpose() * d.terminal_control - mu * d.terminal_state;
  }
  return qp;
}

SubproblemSolution solve_subproblem(const LqProblem &sub, int index,
                                    std::optional<double> c) {
  sub.validate();
  const double cc = c.value_or(default_definiteness_constant(sub.hessian));
  if (!reduced_hessian_positive(sub.layout, sub.hessian, sub.jacobian, cc))
    throw Error(ErrorCode::mu_too_small,
                "subproblem " + std::to_string(index) +
                    ": reduced Hessian is not positive definite (increase mu)",
                index);
  auto s = solve_lq(sub);
  return {Trajectory(sub.layout, std::move(s.primal)),
          DualTrajectory(sub.layout, std::move(s.dual))};
}

void parallel_for(int count, int workers, const std::function<void(int)> &fn) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int threads = std::clamp(workers, 1, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) run(i);
      });
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

NewtonDirection approximate_direction(const NewtonData &nd,
                                      const DecompositionPlan &plan, double mu,
                                      int workers, std::optional<double> c) {
  if (plan.horizon != nd.layout.horizon)
    throw_invalid("plan horizon does not match the Newton data");
  std::vector<SubproblemSolution> parts(plan.size());
  parallel_for(plan.size(), workers, [&](int i) {
    const auto d = BoundaryVars::zero(nd.layout.nx, nd.layout.nu, plan.reaches_end(i));
    parts[i] = solve_subproblem(assemble_subproblem(nd, plan, i, mu, d), i, c);
  });
  return compose(parts, plan);
}

} // namespace fotd
