#include "fotd/nldp.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fotd {

const char *to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::invalid_argument: return "invalid argument";
  case ErrorCode::numeric: return "numeric error";
  case ErrorCode::linear_solver: return "linear solver failure";
  case ErrorCode::modification_failure: return "hessian modification failure";
  case ErrorCode::mu_too_small: return "mu too small";
  case ErrorCode::non_descent: return "non-descent direction";
  case ErrorCode::line_search_failure: return "line search failure";
  case ErrorCode::adaptivity_failure: return "adaptivity failure";
  case ErrorCode::subproblem_failure: return "subproblem failure";
  case ErrorCode::descent_assertion: return "descent assertion failed";
  case ErrorCode::undefined_ratio: return "undefined ratio";
  case ErrorCode::io: return "i/o error";
  }
  return "unknown error";
}

Trajectory::Trajectory(const Layout &l, Vector v) : layout(l), data(std::move(v)) {
  if (data.size() != l.primal_size())
    throw_invalid("trajectory size " + std::to_string(data.size()) +
                  " does not match layout size " +
                  std::to_string(l.primal_size()));
}

DualTrajectory::DualTrajectory(const Layout &l, Vector v)
    : layout(l), data(std::move(v)) {
  if (data.size() != l.dual_size())
    throw_invalid("dual trajectory size " + std::to_string(data.size()) +
                  " does not match layout size " +
                  std::to_string(l.dual_size()));
}

void PenaltyParams::validate() const {
  if (!(eta1 > 0.0) || !(eta2 > 0.0))
    throw_invalid("penalty parameters must be positive (eta1=" +
                  std::to_string(eta1) + ", eta2=" + std::to_string(eta2) + ")");
}

ProblemDef::ProblemDef(int horizon, int nx, int nu, Vector initial_state,
                       ProblemCallbacks callbacks)
    : layout_{horizon, nx, nu}, initial_state_(std::move(initial_state)),
      callbacks_(std::move(callbacks)) {
  if (horizon < 1 || nx < 1 || nu < 1)
    throw_invalid("horizon and dimensions must be positive");
  if (initial_state_.size() != nx)
    throw_invalid("initial state has wrong dimension");
  const auto &c = callbacks_;
  if (!c.cost || !c.cost_gradient || !c.cost_hessian || !c.dynamics ||
      !c.dynamics_jacobian || !c.dynamics_hessian_contraction)
    throw_invalid("all problem callbacks must be provided");
}

void ProblemDef::check(const Trajectory &z) const {
  if (!(z.layout == layout_) || z.data.size() != layout_.primal_size())
    throw_invalid("trajectory dimensions do not match the problem");
}

void ProblemDef::check(const DualTrajectory &lambda) const {
  if (!(lambda.layout == layout_) || lambda.data.size() != layout_.dual_size())
    throw_invalid("dual trajectory dimensions do not match the problem");
}

double LagrangianGradient::norm() const {
  return std::sqrt(z.squaredNorm() + lambda.squaredNorm());
}

namespace {

const Vector &empty_control() {
  static const Vector e(0);
  return e;
}

} // namespace

double eval_objective(const ProblemDef &p, const Trajectory &z) {
  p.check(z);
  const auto &cb = p.callbacks();
  const int N = p.horizon();
  double total = 0.0;
  for (int k = 0; k < N; ++k)
    total += cb.cost(k, z.x(k), z.u(k));
  total += cb.cost(N, z.x(N), empty_control());
  return total;
}

Vector eval_constraints(const ProblemDef &p, const Trajectory &z) {
  p.check(z);
  const auto &l = p.layout();
  Vector out(l.dual_size());
  out.segment(0, l.nx) = z.x(0) - p.initial_state();
  for (int k = 0; k < l.horizon; ++k) {
    Vector fk = p.callbacks().dynamics(k, z.x(k), z.u(k));
    if (fk.size() != l.nx)
      throw_invalid("dynamics callback returned wrong dimension at stage " +
                    std::to_string(k));
    out.segment((k + 1) * l.nx, l.nx) = z.x(k + 1) - fk;
  }
  return out;
}

std::vector<Matrix> dynamics_jacobians(const ProblemDef &p, const Trajectory &z) {
  p.check(z);
  const auto &l = p.layout();
  std::vector<Matrix> jac(l.horizon);
  for (int k = 0; k < l.horizon; ++k) {
    jac[k] = p.callbacks().dynamics_jacobian(k, z.x(k), z.u(k));
    if (jac[k].rows() != l.nx || jac[k].cols() != l.nx + l.nu)
      throw_invalid("dynamics jacobian has wrong shape at stage " +
                    std::to_string(k));
    if (!jac[k].allFinite())
      throw Error(ErrorCode::numeric,
                  "non-finite dynamics jacobian at stage " + std::to_string(k), k);
  }
  return jac;
}

std::vector<Matrix> lagrangian_hessian(const ProblemDef &p, const Trajectory &z,
                                       const DualTrajectory &lambda) {
  p.check(z);
  p.check(lambda);
  const auto &cb = p.callbacks();
  const int N = p.horizon();
  std::vector<Matrix> blocks(N + 1);
  for (int k = 0; k <= N; ++k) {
    const Vector &u = k < N ? Vector(z.u(k)) : empty_control();
    Matrix h = cb.cost_hessian(k, z.x(k), u);
    if (k < N)
      h += cb.dynamics_hessian_contraction(k, z.x(k), u, lambda.at(k + 1));
    if (h.rows() != z.layout.stage_size(k) || h.cols() != h.rows())
      throw_invalid("hessian block has wrong shape at stage " + std::to_string(k));
    if (!h.allFinite())
      throw Error(ErrorCode::numeric,
                  "non-finite hessian block at stage " + std::to_string(k), k);
    blocks[k] = std::move(h);
  }
  return blocks;
}

namespace {

LagrangianGradient lagrangian_gradient_with(const ProblemDef &p,
                                            const Trajectory &z,
                                            const DualTrajectory &lambda,
                                            const std::vector<Matrix> &jac) {
  const auto &l = p.layout();
  const auto &cb = p.callbacks();
  const int N = l.horizon;
  LagrangianGradient out;
  out.z.resize(l.primal_size());
  for (int k = 0; k < N; ++k) {
    Vector gk = cb.cost_gradient(k, z.x(k), z.u(k));
    if (gk.size() != l.nx + l.nu)
      throw_invalid("cost gradient has wrong dimension at stage " +
                    std::to_string(k));
    gk.head(l.nx) += lambda.at(k);
    gk.noalias() -= jac[k].transpose() * lambda.at(k + 1);
    out.z.segment(l.stage_offset(k), l.nx + l.nu) = gk;
  }
  Vector gN = cb.cost_gradient(N, z.x(N), empty_control());
  if (gN.size() != l.nx)
    throw_invalid("terminal cost gradient has wrong dimension");
  out.z.segment(l.stage_offset(N), l.nx) = gN + lambda.at(N);
  out.lambda = eval_constraints(p, z);
  if (!out.z.allFinite() || !out.lambda.allFinite())
    throw Error(ErrorCode::numeric, "non-finite lagrangian gradient");
  return out;
}

} // namespace

LagrangianGradient eval_lagrangian_gradient(const ProblemDef &p,
                                            const Trajectory &z,
                                            const DualTrajectory &lambda) {
  p.check(lambda);
  return lagrangian_gradient_with(p, z, lambda, dynamics_jacobians(p, z));
}

double eval_lagrangian(const ProblemDef &p, const Trajectory &z,
                       const DualTrajectory &lambda) {
  p.check(lambda);
  return eval_objective(p, z) + lambda.data.dot(eval_constraints(p, z));
}

double eval_merit(const ProblemDef &p, const Trajectory &z,
                  const DualTrajectory &lambda, const PenaltyParams &eta) {
  eta.validate();
  const auto grad = eval_lagrangian_gradient(p, z, lambda);
  return eval_objective(p, z) + lambda.data.dot(grad.lambda) +
         0.5 * eta.eta1 * grad.lambda.squaredNorm() +
         0.5 * eta.eta2 * grad.z.squaredNorm();
}

MeritGradient eval_merit_gradient(const ProblemDef &p, const Trajectory &z,
                                  const DualTrajectory &lambda,
                                  const PenaltyParams &eta) {
  eta.validate();
  const auto &l = p.layout();
  const auto jac = dynamics_jacobians(p, z);
  const auto grad = lagrangian_gradient_with(p, z, lambda, jac);
  const auto hess = lagrangian_hessian(p, z, lambda);
  MeritGradient out;
  out.z = grad.z + eta.eta2 * apply_block_diagonal(l, hess, grad.z) +
          eta.eta1 * apply_jacobian_transpose(l, jac, grad.lambda);
  out.lambda = eta.eta2 * apply_jacobian(l, jac, grad.z) + grad.lambda;
  return out;
}

Vector apply_block_diagonal(const Layout &l, const std::vector<Matrix> &blocks,
                            const Vector &v) {
  Vector out(l.primal_size());
  for (int k = 0; k <= l.horizon; ++k) {
    const int off = l.stage_offset(k), n = l.stage_size(k);
    out.segment(off, n).noalias() = blocks[k] * v.segment(off, n);
  }
  return out;
}

Vector apply_jacobian(const Layout &l, const std::vector<Matrix> &jac,
                      const Vector &v) {
  Vector out(l.dual_size());
  out.segment(0, l.nx) = v.segment(0, l.nx);
  for (int k = 0; k < l.horizon; ++k) {
    out.segment((k + 1) * l.nx, l.nx) =
        v.segment(l.stage_offset(k + 1), l.nx) -
        jac[k] * v.segment(l.stage_offset(k), l.nx + l.nu);
  }
  return out;
}

Vector apply_jacobian_transpose(const Layout &l, const std::vector<Matrix> &jac,
                                const Vector &w) {
  Vector out = Vector::Zero(l.primal_size());
  for (int k = 0; k <= l.horizon; ++k)
    out.segment(l.stage_offset(k), l.nx) += w.segment(k * l.nx, l.nx);
  for (int k = 0; k < l.horizon; ++k)
    out.segment(l.stage_offset(k), l.nx + l.nu).noalias() -=
        jac[k].transpose() * w.segment((k + 1) * l.nx, l.nx);
  return out;
}

void write_file_atomic(const std::string &path, const std::string &contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out)
      throw Error(ErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec)
    throw Error(ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

void append_double(std::string &s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

} // namespace

void write_trajectory_csv(const std::string &path, const Trajectory &z,
                          const DualTrajectory &lambda) {
  const auto &l = z.layout;
  if (!(lambda.layout == l))
    throw_invalid("primal and dual layouts differ");
  std::string s = "stage";
  for (int j = 0; j < l.nx; ++j) s += ",x_" + std::to_string(j);
  for (int j = 0; j < l.nu; ++j) s += ",u_" + std::to_string(j);
  for (int j = 0; j < l.nx; ++j) s += ",lambda_" + std::to_string(j);
  s += '\n';
  for (int k = 0; k <= l.horizon; ++k) {
    s += std::to_string(k);
    for (int j = 0; j < l.nx; ++j) { s += ','; append_double(s, z.x(k)[j]); }
    for (int j = 0; j < l.nu; ++j) {
      s += ',';
      if (k < l.horizon) append_double(s, z.u(k)[j]);
    }
    for (int j = 0; j < l.nx; ++j) { s += ','; append_double(s, lambda.at(k)[j]); }
    s += '\n';
  }
  write_file_atomic(path, s);
}

PrimalDual read_trajectory_csv(const std::string &path, const Layout &l) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  PrimalDual out{Trajectory(l), DualTrajectory(l)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::io, path + ": empty file");
  const std::size_t columns = 1 + 2 * l.nx + l.nu;
  for (int k = 0; k <= l.horizon; ++k) {
    if (!std::getline(in, line))
      throw Error(ErrorCode::io, path + ": expected " +
                                     std::to_string(l.horizon + 1) + " rows");
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != columns || std::stoi(cells[0]) != k)
      throw Error(ErrorCode::io, path + ": malformed row for stage " + std::to_string(k));
    std::size_t c = 1;
    for (int j = 0; j < l.nx; ++j) out.z.x(k)[j] = std::stod(cells[c++]);
    for (int j = 0; j < l.nu; ++j, ++c)
      if (k < l.horizon) out.z.u(k)[j] = std::stod(cells[c]);
    for (int j = 0; j < l.nx; ++j) out.lambda.at(k)[j] = std::stod(cells[c++]);
  }
  return out;
}

} // namespace fotd
