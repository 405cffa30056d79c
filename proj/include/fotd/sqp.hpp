#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fotd/newton_kkt.hpp"
#include "fotd/otd.hpp"

namespace fotd {

enum class SolveMode { fotd, centralized };
enum class SolveStatus { converged_kkt, converged_step, max_iters, error };
enum class AssertLevel { off, on };

const char *to_string(SolveMode m) noexcept;
const char *to_string(SolveStatus s) noexcept;

struct SolverConfig {
  double mu = 1.0;
  PenaltyParams eta{10.0, 0.1};
  double beta = 0.1;
  double backtrack = 0.9;
  int subproblems = 1; ///< M
  int overlap = 1;     ///< b
  double kkt_tol = 1e-6;
  double step_tol = 1e-6;
  int max_iters = 40;
  std::optional<double> definiteness_c;
  double gamma_step = 2.0;
  bool adaptivity = false;
  double nu = 2.0;
  double rho_hat = 0.5;
  int workers = 1;
  bool diagnostics = false;
  AssertLevel assert_level = AssertLevel::on;

  void validate() const;
};

inline constexpr double kNotAvailable = std::numeric_limits<double>::quiet_NaN();

struct IterationRecord {
  int iter = 0;
  double kkt_residual = kNotAvailable;
  double merit = kNotAvailable;
  double stepsize = kNotAvailable;
  double gamma = kNotAvailable;
  double dir_err_ratio = kNotAvailable;
  double wall_ms = 0.0;
  /// Directional derivative of the merit along the step and the descent
  /// bound -eta2/2 |grad L|^2 it is compared against.
  double slope = kNotAvailable;
  double descent_bound = kNotAvailable;
};

struct SolveReport {
  std::vector<IterationRecord> records;
  PrimalDual solution;
  SolveStatus status = SolveStatus::error;
  std::optional<ErrorCode> error;
  std::string message;
  int descent_violations = 0;
  int adaptations = 0;
  double total_ms = 0.0;
  SolverConfig final_config;

  bool converged() const {
    return status == SolveStatus::converged_kkt || status == SolveStatus::converged_step;
  }
  double final_residual() const {
    return records.empty() ? kNotAvailable : records.back().kkt_residual;
  }
};

struct LineSearchResult {
  double alpha;
  double merit;
  int backtracks;
};

/// Largest alpha in {1, factor, factor^2, ...} with
/// phi(alpha) - phi0 <= beta * alpha * slope + 10 eps |phi0|. Requires
/// slope < 0.
LineSearchResult armijo_backtrack(const std::function<double(double)> &phi,
                                  double phi0, double slope, double beta,
                                  double factor);

/// Armijo backtracking on the exact augmented Lagrangian along `dir`.
LineSearchResult line_search(const ProblemDef &p, const Trajectory &z,
                             const DualTrajectory &lambda, const PrimalDual &dir,
                             const PenaltyParams &eta, double beta, double factor);

/// eta2 /= nu, eta1 *= nu^2, b += ceil(4 log nu / log(1 / rho_hat)).
SolverConfig adapt_penalties(SolverConfig cfg, double nu);

/// Plan for the configured (M, b); b is clipped to N - 1.
DecompositionPlan plan_for(const SolverConfig &cfg, int horizon);

struct StepResult {
  PrimalDual next;
  IterationRecord record;
  double step_norm;
  SolverConfig config; ///< possibly adapted
  int adaptations = 0;
  bool descent_violated = false;
};

/// One SQP iteration from `state` using the decomposed (fotd) or exact
/// (centralized) Newton direction. `record` carries the stepsize, shift,
/// optional direction error and the descent test at the current iterate.
StepResult sqp_step(const ProblemDef &p, const PrimalDual &state,
                    const SolverConfig &cfg, SolveMode mode);

inline StepResult fotd_step(const ProblemDef &p, const PrimalDual &state,
                            const SolverConfig &cfg) {
  return sqp_step(p, state, cfg, SolveMode::fotd);
}

/// Runs SQP from `init` (x_0 is reset to the initial state) until the KKT
/// residual or the step length falls below tolerance, or max_iters.
SolveReport solve(const ProblemDef &p, const SolverConfig &cfg,
                  const PrimalDual &init, SolveMode mode);

/// |approximate - exact| / |exact| for the Newton direction at (z, lambda).
double direction_error_diagnostic(const ProblemDef &p, const Trajectory &z,
                                  const DualTrajectory &lambda,
                                  const SolverConfig &cfg);

/// Writes `iter,kkt_residual,merit,stepsize,gamma,dir_err_ratio,wall_ms`;
/// unavailable values are left empty, as is wall_ms when `timing` is false
/// (which makes the file reproducible byte for byte).
void write_iteration_csv(const std::string &path, const SolveReport &report,
                         bool timing = true);
std::string iteration_csv(const SolveReport &report, bool timing = true);

} // namespace fotd
