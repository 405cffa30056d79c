#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fotd/errors.hpp"

namespace fotd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Stage-major storage layout of a horizon with stages 0..N.
///
/// Primal vectors are laid out as (x_0, u_0, x_1, u_1, ..., x_{N-1}, u_{N-1},
/// x_N); dual vectors as (lambda_0, ..., lambda_N).
struct Layout {
  int horizon = 0;
  int nx = 0;
  int nu = 0;

  int stage_offset(int k) const { return k * (nx + nu); }
  int stage_size(int k) const { return k < horizon ? nx + nu : nx; }
  int primal_size() const { return (horizon + 1) * nx + horizon * nu; }
  int dual_size() const { return (horizon + 1) * nx; }

  bool operator==(const Layout &) const = default;
};

/// Primal trajectory z = (x, u).
struct Trajectory {
  Layout layout;
  Vector data;

  Trajectory() = default;
  explicit Trajectory(const Layout &l)
      : layout(l), data(Vector::Zero(l.primal_size())) {}
  Trajectory(const Layout &l, Vector v);

  auto x(int k) { return data.segment(layout.stage_offset(k), layout.nx); }
  auto x(int k) const { return data.segment(layout.stage_offset(k), layout.nx); }
  auto u(int k) {
    return data.segment(layout.stage_offset(k) + layout.nx, layout.nu);
  }
  auto u(int k) const {
    return data.segment(layout.stage_offset(k) + layout.nx, layout.nu);
  }
  auto stage(int k) {
    return data.segment(layout.stage_offset(k), layout.stage_size(k));
  }
  auto stage(int k) const {
    return data.segment(layout.stage_offset(k), layout.stage_size(k));
  }
};

/// Multipliers lambda_0..lambda_N; lambda_0 pairs with the initial-state
/// constraint and lambda_{k+1} with the k-th dynamic constraint.
struct DualTrajectory {
  Layout layout;
  Vector data;

  DualTrajectory() = default;
  explicit DualTrajectory(const Layout &l)
      : layout(l), data(Vector::Zero(l.dual_size())) {}
  DualTrajectory(const Layout &l, Vector v);

  auto at(int k) { return data.segment(k * layout.nx, layout.nx); }
  auto at(int k) const { return data.segment(k * layout.nx, layout.nx); }
};

struct PrimalDual {
  Trajectory z;
  DualTrajectory lambda;
};

struct PenaltyParams {
  double eta1 = 10.0;
  double eta2 = 0.1;

  void validate() const;
};

/// Stage-wise callbacks of an equality-constrained dynamic program
///
///   min  sum_{k<N} g_k(x_k, u_k) + g_N(x_N)
///   s.t. x_{k+1} = f_k(x_k, u_k),  x_0 = x0bar.
///
/// At the terminal stage the control argument is an empty vector. Hessians are
/// over the stage vector (x_k, u_k), or x_N alone at the terminal stage.
struct ProblemCallbacks {
  std::function<double(int, const Vector &, const Vector &)> cost;
  std::function<Vector(int, const Vector &, const Vector &)> cost_gradient;
  std::function<Matrix(int, const Vector &, const Vector &)> cost_hessian;
  std::function<Vector(int, const Vector &, const Vector &)> dynamics;
  /// Returns [A_k B_k], an nx x (nx+nu) matrix.
  std::function<Matrix(int, const Vector &, const Vector &)> dynamics_jacobian;
  /// Returns -sum_j lambda_{k+1,j} * Hess f_{k,j}, (nx+nu) x (nx+nu).
  std::function<Matrix(int, const Vector &, const Vector &, const Vector &)>
      dynamics_hessian_contraction;
};

class ProblemDef {
public:
  ProblemDef(int horizon, int nx, int nu, Vector initial_state,
             ProblemCallbacks callbacks);

  int horizon() const { return layout_.horizon; }
  int nx() const { return layout_.nx; }
  int nu() const { return layout_.nu; }
  const Layout &layout() const { return layout_; }
  const Vector &initial_state() const { return initial_state_; }
  const ProblemCallbacks &callbacks() const { return callbacks_; }

  /// Non-fatal notes from problem generators (e.g. a violated convexity
  /// margin or an unstable explicit time step).
  const std::vector<std::string> &warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  void check(const Trajectory &z) const;
  void check(const DualTrajectory &lambda) const;

private:
  Layout layout_;
  Vector initial_state_;
  ProblemCallbacks callbacks_;
  std::vector<std::string> warnings_;
};

struct LagrangianGradient {
  Vector z;      ///< gradient with respect to the primal stages
  Vector lambda; ///< equals the constraint residual f(z)

  double norm() const;
};

/// Sum of stage costs.
double eval_objective(const ProblemDef &p, const Trajectory &z);

/// (x_0 - x0bar; x_1 - f_0(z_0); ...; x_N - f_{N-1}(z_{N-1})).
Vector eval_constraints(const ProblemDef &p, const Trajectory &z);

/// [A_k B_k] for k = 0..N-1.
std::vector<Matrix> dynamics_jacobians(const ProblemDef &p, const Trajectory &z);

/// Exact Lagrangian Hessian blocks H_0..H_N.
std::vector<Matrix> lagrangian_hessian(const ProblemDef &p, const Trajectory &z,
                                       const DualTrajectory &lambda);

LagrangianGradient eval_lagrangian_gradient(const ProblemDef &p,
                                            const Trajectory &z,
                                            const DualTrajectory &lambda);

/// L(z, lambda) = g(z) + lambda^T f(z).
double eval_lagrangian(const ProblemDef &p, const Trajectory &z,
                       const DualTrajectory &lambda);

/// Exact augmented Lagrangian
/// L + eta1/2 |grad_lambda L|^2 + eta2/2 |grad_z L|^2.
double eval_merit(const ProblemDef &p, const Trajectory &z,
                  const DualTrajectory &lambda, const PenaltyParams &eta);

struct MeritGradient {
  Vector z;
  Vector lambda;
};

MeritGradient eval_merit_gradient(const ProblemDef &p, const Trajectory &z,
                                  const DualTrajectory &lambda,
                                  const PenaltyParams &eta);

// Structured products with the block-diagonal Hessian and the staircase
// constraint Jacobian G = d f / d z.
Vector apply_block_diagonal(const Layout &l, const std::vector<Matrix> &blocks,
                            const Vector &v);
Vector apply_jacobian(const Layout &l, const std::vector<Matrix> &jac,
                      const Vector &v);
Vector apply_jacobian_transpose(const Layout &l, const std::vector<Matrix> &jac,
                                const Vector &w);

/// Writes `stage,x_0..,u_0..,lambda_0..` rows; control cells are empty at
/// stage N. The file is written to a temporary and renamed into place.
void write_trajectory_csv(const std::string &path, const Trajectory &z,
                          const DualTrajectory &lambda);
PrimalDual read_trajectory_csv(const std::string &path, const Layout &layout);

/// Atomic text write: temp file in the same directory, then rename.
void write_file_atomic(const std::string &path, const std::string &contents);

} // namespace fotd
