#include "fotd/sqp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace fotd {

const char *to_string(SolveMode m) noexcept {
  return m == SolveMode::fotd ? "fotd" : "centralized";
}

const char *to_string(SolveStatus s) noexcept {
  switch (s) {
  case SolveStatus::converged_kkt: return "converged_kkt";
  case SolveStatus::converged_step: return "converged_step";
  case SolveStatus::max_iters: return "max_iters";
  case SolveStatus::error: return "error";
  }
  return "error";
}

void SolverConfig::validate() const {
  if (!(mu > 0.0)) throw_invalid("mu must be positive");
  eta.validate();
  if (!(beta > 0.0 && beta < 0.5)) throw_invalid("beta must lie in (0, 1/2)");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw_invalid("backtrack factor must lie in (0, 1)");
  if (subproblems < 1) throw_invalid("M must be at least 1");
  if (overlap < 1) throw_invalid("b must be at least 1");
  if (!(kkt_tol >= 0.0) || !(step_tol >= 0.0)) throw_invalid("tolerances must be nonnegative");
  if (max_iters < 0) throw_invalid("max_iters must be nonnegative");
  if (definiteness_c && !(*definiteness_c > 0.0))
    throw_invalid("definiteness constant c must be positive");
  if (!(gamma_step > 1.0)) throw_invalid("gamma_step must exceed 1");
  if (!(nu > 1.0)) throw_invalid("nu must exceed 1");
  if (!(rho_hat > 0.0 && rho_hat < 1.0)) throw_invalid("rho_hat must lie in (0, 1)");
  if (workers < 1) throw_invalid("workers must be at least 1");
}

LineSearchResult armijo_backtrack(const std::function<double(double)> &phi,
                                  double phi0, double slope, double beta,
                                  double factor) {
  if (!(slope < 0.0))
    throw Error(ErrorCode::non_descent,
                "directional derivative " + std::to_string(slope) + " is not negative");
  // Differences below the rounding level of phi0 are not resolvable.
  const double noise = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(phi0);
  double alpha = 1.0;
  for (int j = 0;; ++j) {
    const double value = phi(alpha);
    if (value - phi0 <= beta * alpha * slope + noise) return {alpha, value, j};
    alpha *= factor;
    if (alpha < 1e-12)
      throw Error(ErrorCode::line_search_failure,
                  "stepsize fell below 1e-12 without satisfying the Armijo condition");
  }
}

namespace {

double merit_from(const ProblemDef &p, const PrimalDual &s, const PenaltyParams &eta) {
  return eval_merit(p, s.z, s.lambda, eta);
}

PrimalDual advance(const PrimalDual &s, const PrimalDual &dir, double alpha,
                   const Vector &initial_state) {
  PrimalDual out{Trajectory(s.z.layout, s.z.data + alpha * dir.z.data),
                 DualTrajectory(s.lambda.layout, s.lambda.data + alpha * dir.lambda.data)};
  out.z.x(0) = initial_state;
  return out;
}

double dot(const MeritGradient &g, const PrimalDual &d) {
  return g.z.dot(d.z.data) + g.lambda.dot(d.lambda.data);
}

double norm(const PrimalDual &d) {
  return std::sqrt(d.z.data.squaredNorm() + d.lambda.data.squaredNorm());
}

MeritGradient merit_gradient(const NewtonData &exact, const PenaltyParams &eta) {
  const auto &l = exact.layout;
  MeritGradient g;
  g.z = exact.grad_z + eta.eta2 * apply_block_diagonal(l, exact.hessian, exact.grad_z) +
        eta.eta1 * apply_jacobian_transpose(l, exact.jacobian, exact.grad_lambda);
  g.lambda = eta.eta2 * apply_jacobian(l, exact.jacobian, exact.grad_z) + exact.grad_lambda;
  return g;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

double ratio_or_nan(const PrimalDual &approx, const PrimalDual &exact) {
  const double denom = norm(exact);
  if (denom == 0.0) return kNotAvailable;
  const double num = std::sqrt((approx.z.data - exact.z.data).squaredNorm() +
                               (approx.lambda.data - exact.lambda.data).squaredNorm());
  return num / denom;
}

} // namespace

LineSearchResult line_search(const ProblemDef &p, const Trajectory &z,
                             const DualTrajectory &lambda, const PrimalDual &dir,
                             const PenaltyParams &eta, double beta, double factor) {
  const PrimalDual s{z, lambda};
  const double phi0 = merit_from(p, s, eta);
  const double slope = dot(eval_merit_gradient(p, z, lambda, eta), dir);
  return armijo_backtrack(
      [&](double alpha) {
        PrimalDual trial{Trajectory(z.layout, z.data + alpha * dir.z.data),
                         DualTrajectory(lambda.layout, lambda.data + alpha * dir.lambda.data)};
        return merit_from(p, trial, eta);
      },
      phi0, slope, beta, factor);
}

SolverConfig adapt_penalties(SolverConfig cfg, double nu) {
  if (!(nu > 1.0)) throw_invalid("nu must exceed 1");
  if (!(cfg.rho_hat > 0.0 && cfg.rho_hat < 1.0)) throw_invalid("rho_hat must lie in (0, 1)");
  cfg.eta.eta2 /= nu;
  cfg.eta.eta1 *= nu * nu;
  cfg.overlap += static_cast<int>(std::ceil(4.0 * std::log(nu) / std::log(1.0 / cfg.rho_hat)));
  return cfg;
}

DecompositionPlan plan_for(const SolverConfig &cfg, int horizon) {
  return make_plan(horizon, cfg.subproblems, std::min(cfg.overlap, horizon - 1));
}

StepResult sqp_step(const ProblemDef &p, const PrimalDual &state,
                    const SolverConfig &cfg, SolveMode mode) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const NewtonData exact = assemble_newton_data(p, state.z, state.lambda);
  const double c = cfg.definiteness_c.value_or(default_definiteness_constant(exact));
  const NewtonData nd = modify_hessian(exact, c, cfg.gamma_step);
  const double residual = nd.residual_norm();

  StepResult out;
  out.config = cfg;
  PrimalDual dir;
  MeritGradient mg;
  double slope = 0.0, bound = 0.0;
  for (;;) {
    const SolverConfig &cur = out.config;
    dir = mode == SolveMode::fotd
              ? approximate_direction(nd, plan_for(cur, p.horizon()), cur.mu, cur.workers,
                                      cur.definiteness_c)
              : solve_full_newton(nd);
    mg = merit_gradient(exact, cur.eta);
    slope = dot(mg, dir);
    bound = -0.5 * cur.eta.eta2 * residual * residual;
    if (slope <= bound) break;
    if (cur.adaptivity) {
      if (out.adaptations >= 30)
        throw Error(ErrorCode::adaptivity_failure,
                    "descent inequality still violated after 30 penalty adaptations");
      out.config = adapt_penalties(cur, cur.nu);
      ++out.adaptations;
      continue;
    }
    out.descent_violated = true;
    if (cur.assert_level == AssertLevel::on)
      throw Error(ErrorCode::descent_assertion,
                  "merit slope " + std::to_string(slope) + " exceeds -eta2/2 |grad L|^2 = " +
                      std::to_string(bound));
    break;
  }

  const SolverConfig &cur = out.config;
  const double phi0 = merit_from(p, state, cur.eta);
  const auto ls = armijo_backtrack(
      [&](double alpha) { return merit_from(p, advance(state, dir, alpha, p.initial_state()), cur.eta); },
      phi0, slope, cur.beta, cur.backtrack);

  out.next = advance(state, dir, ls.alpha, p.initial_state());
  out.step_norm = ls.alpha * norm(dir);

  auto &r = out.record;
  r.kkt_residual = residual;
  r.merit = phi0;
  r.stepsize = ls.alpha;
  r.gamma = nd.gamma_applied;
  r.slope = slope;
  r.descent_bound = bound;
  if (cfg.diagnostics)
    r.dir_err_ratio = mode == SolveMode::fotd ? ratio_or_nan(dir, solve_full_newton(nd)) : 0.0;
  r.wall_ms = elapsed_ms(start);
  return out;
}

SolveReport solve(const ProblemDef &p, const SolverConfig &cfg, const PrimalDual &init,
                  SolveMode mode) {
  cfg.validate();
  p.check(init.z);
  p.check(init.lambda);
  const auto start = std::chrono::steady_clock::now();

  SolveReport report;
  SolverConfig cur = cfg;
  PrimalDual state = init;
  state.z.x(0) = p.initial_state();

  auto plain_record = [&](int iter) {
    IterationRecord r;
    r.iter = iter;
    r.kkt_residual = eval_lagrangian_gradient(p, state.z, state.lambda).norm();
    r.merit = merit_from(p, state, cur.eta);
    return r;
  };

  for (int iter = 0;; ++iter) {
    IterationRecord head = plain_record(iter);
    if (head.kkt_residual <= cfg.kkt_tol) {
      report.records.push_back(head);
      report.status = SolveStatus::converged_kkt;
      break;
    }
    if (iter >= cfg.max_iters) {
      report.records.push_back(head);
      report.status = SolveStatus::max_iters;
      break;
    }
    StepResult step;
    try {
      step = sqp_step(p, state, cur, mode);
    } catch (const Error &e) {
      report.records.push_back(head);
      report.status = SolveStatus::error;
      report.error = e.code();
      report.message = e.what();
      break;
    }
    step.record.iter = iter;
    report.records.push_back(step.record);
    report.adaptations += step.adaptations;
    report.descent_violations += step.descent_violated ? 1 : 0;
    cur = step.config;
    state = std::move(step.next);
    if (step.step_norm <= cfg.step_tol) {
      report.records.push_back(plain_record(iter + 1));
      report.status = report.records.back().kkt_residual <= cfg.kkt_tol
                          ? SolveStatus::converged_kkt
                          : SolveStatus::converged_step;
      break;
    }
  }
  report.solution = std::move(state);
  report.final_config = cur;
  report.total_ms = elapsed_ms(start);
  return report;
}

double direction_error_diagnostic(const ProblemDef &p, const Trajectory &z,
                                  const DualTrajectory &lambda, const SolverConfig &cfg) {
  cfg.validate();
  const NewtonData exact = assemble_newton_data(p, z, lambda);
  const double c = cfg.definiteness_c.value_or(default_definiteness_constant(exact));
  const NewtonData nd = modify_hessian(exact, c, cfg.gamma_step);
  const auto full = solve_full_newton(nd);
  if (norm(full) == 0.0)
    throw Error(ErrorCode::undefined_ratio, "exact Newton direction is zero");
  const auto approx = approximate_direction(nd, plan_for(cfg, p.horizon()), cfg.mu,
                                            cfg.workers, cfg.definiteness_c);
  return ratio_or_nan(approx, full);
}

namespace {

void append_cell(std::string &s, double v) {
  s += ',';
  if (std::isnan(v)) return;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

} // namespace

std::string iteration_csv(const SolveReport &report, bool timing) {
  std::string s = "iter,kkt_residual,merit,stepsize,gamma,dir_err_ratio,wall_ms\n";
  for (const auto &r : report.records) {
    s += std::to_string(r.iter);
    append_cell(s, r.kkt_residual);
    append_cell(s, r.merit);
    append_cell(s, r.stepsize);
    append_cell(s, r.gamma);
    append_cell(s, r.dir_err_ratio);
    append_cell(s, timing ? r.wall_ms : kNotAvailable);
    s += '\n';
  }
  return s;
}

void write_iteration_csv(const std::string &path, const SolveReport &report, bool timing) {
  write_file_atomic(path, iteration_csv(report, timing));
}

} // namespace fotd
