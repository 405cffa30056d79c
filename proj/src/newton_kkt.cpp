#include "fotd/newton_kkt.hpp"

#include <algorithm>
#include <cmath>

namespace fotd {

NewtonData assemble_newton_data(const ProblemDef &p, const Trajectory &z,
                                const DualTrajectory &lambda) {
  NewtonData nd;
  nd.layout = p.layout();
  nd.jacobian = dynamics_jacobians(p, z);
  nd.hessian = lagrangian_hessian(p, z, lambda);
  for (auto &h : nd.hessian) h = 0.5 * (h + h.transpose()).eval();
  auto grad = eval_lagrangian_gradient(p, z, lambda);
  nd.grad_z = std::move(grad.z);
  nd.grad_lambda = std::move(grad.lambda);
  return nd;
}

double default_definiteness_constant(const NewtonData &nd) {
  return default_definiteness_constant(nd.hessian);
}

bool check_reduced_hessian(const NewtonData &nd, double c) {
  return reduced_hessian_positive(nd.layout, nd.hessian, nd.jacobian, c);
}

NewtonData modify_hessian(NewtonData nd, double c, double gamma_step) {
  if (!(gamma_step > 1.0)) throw_invalid("gamma_step must exceed 1");
  if (check_reduced_hessian(nd, c)) return nd;

  double scale = 0.0;
  for (const auto &h : nd.hessian) scale = std::max(scale, h.norm());
  const double gamma_max = 1e8 * (1.0 + scale);
  for (double gamma = 1e-4 * (1.0 + scale); gamma <= gamma_max;
       gamma *= gamma_step) {
    NewtonData shifted = nd;
    for (auto &h : shifted.hessian) h.diagonal().array() += gamma;
    if (check_reduced_hessian(shifted, c)) {
      shifted.gamma_applied = nd.gamma_applied + gamma;
      return shifted;
    }
  }
  throw Error(ErrorCode::modification_failure,
              "no Levenberg shift up to " + std::to_string(gamma_max) +
                  " made the reduced Hessian positive definite");
}

LqProblem full_newton_lq(const NewtonData &nd) {
  const auto &l = nd.layout;
  LqProblem qp;
  qp.layout = l;
  qp.hessian = nd.hessian;
  qp.jacobian = nd.jacobian;
  qp.linear.resize(l.horizon + 1);
  for (int k = 0; k <= l.horizon; ++k)
    qp.linear[k] = nd.grad_z.segment(l.stage_offset(k), l.stage_size(k));
  qp.initial = -nd.grad_lambda.segment(0, l.nx);
  qp.offset.resize(l.horizon);
  for (int k = 0; k < l.horizon; ++k)
    qp.offset[k] = -nd.grad_lambda.segment((k + 1) * l.nx, l.nx);
  return qp;
}

NewtonDirection solve_full_newton(const NewtonData &nd) {
  auto s = solve_lq(full_newton_lq(nd));
  return {Trajectory(nd.layout, std::move(s.primal)),
          DualTrajectory(nd.layout, std::move(s.dual))};
}

double theory_gamma_G(double gamma_c, double t, double upsilon) {
  if (!(gamma_c > 0.0)) throw_invalid("gamma_C must be positive");
  if (!(t >= 1.0)) throw_invalid("t must be at least 1");
  if (!(upsilon > 1.0)) throw_invalid("Upsilon_upper must exceed 1");
  const double reach = std::pow(upsilon, t + 1.0) / (upsilon - 1.0);
  const double ratio = gamma_c / (gamma_c + reach);
  return ratio * ratio * std::min(1.0, gamma_c) / std::pow(1.0 + upsilon, 2.0 * t);
}

double theory_mu_bar(double gamma_c, double t, double upsilon) {
  if (!(gamma_c > 0.0)) throw_invalid("gamma_C must be positive");
  if (!(t >= 1.0)) throw_invalid("t must be at least 1");
  if (!(upsilon > 1.0)) throw_invalid("Upsilon_upper must exceed 1");
  return 32.0 * std::pow(upsilon, 4.0 * t + 1.0) / gamma_c;
}

} // namespace fotd
