#include "fotd/fotd.h"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include "fotd/benchmarks.hpp"
#include "fotd/schwarz.hpp"
#include "fotd/sqp.hpp"

struct fotd_problem {
  std::shared_ptr<fotd::ProblemDef> def;
};

struct fotd_report {
  fotd::SolveReport report;
};

namespace {

thread_local std::string g_last_error;

fotd_status fail(fotd_status code, const std::string &msg) {
  g_last_error = msg;
  return code;
}

// Runs `fn` and maps exceptions onto status codes.
template <class Fn> fotd_status guarded(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return FOTD_OK;
  } catch (const fotd::Error &e) {
    return fail(static_cast<fotd_status>(e.code()), e.what());
  } catch (const std::bad_alloc &) {
    return fail(FOTD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(FOTD_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char *what) {
  if (!ok) fotd::throw_invalid(what);
}

std::function<double(int)> toy_reference(int kind, double a) {
  switch (kind) {
  case FOTD_REF_CONSTANT: return [a](int) { return a; };
  case FOTD_REF_SIN: return [a](int k) { return a * std::sin(static_cast<double>(k)); };
  case FOTD_REF_SIN_SQUARED:
    return [a](int k) {
      const double s = std::sin(static_cast<double>(k));
      return a * s * s;
    };
  }
  fotd::throw_invalid("unknown reference kind " + std::to_string(kind));
}

std::function<double(int, double)> plate_reference(int kind, double a) {
  switch (kind) {
  case FOTD_REF_CONSTANT: return [a](int, double) { return a; };
  case FOTD_REF_SIN: return [a](int, double t) { return a * std::sin(t); };
  case FOTD_REF_SIN_SQUARED:
    return [a](int, double t) { return a * std::sin(t) * std::sin(t); };
  }
  fotd::throw_invalid("unknown reference kind " + std::to_string(kind));
}

fotd::SolverConfig to_core(const fotd_config &c) {
  fotd::SolverConfig s;
  s.mu = c.mu;
  s.eta = {c.eta1, c.eta2};
  s.beta = c.beta;
  s.backtrack = c.backtrack;
  s.subproblems = c.subproblems;
  s.overlap = c.overlap;
  s.kkt_tol = c.kkt_tol;
  s.step_tol = c.step_tol;
  s.max_iters = c.max_iters;
  if (c.has_definiteness_c) s.definiteness_c = c.definiteness_c;
  s.gamma_step = c.gamma_step;
  s.adaptivity = c.adaptivity != 0;
  s.nu = c.nu;
  s.rho_hat = c.rho_hat;
  s.workers = c.workers;
  s.diagnostics = c.diagnostics != 0;
  s.assert_level = c.assert_level ? fotd::AssertLevel::on : fotd::AssertLevel::off;
  s.validate();
  return s;
}

void from_core(const fotd::SolverConfig &s, fotd_config &c) {
  c.mu = s.mu;
  c.eta1 = s.eta.eta1;
  c.eta2 = s.eta.eta2;
  c.beta = s.beta;
  c.backtrack = s.backtrack;
  c.subproblems = s.subproblems;
  c.overlap = s.overlap;
  c.kkt_tol = s.kkt_tol;
  c.step_tol = s.step_tol;
  c.max_iters = s.max_iters;
  c.has_definiteness_c = s.definiteness_c.has_value();
  c.definiteness_c = s.definiteness_c.value_or(0.0);
  c.gamma_step = s.gamma_step;
  c.adaptivity = s.adaptivity;
  c.nu = s.nu;
  c.rho_hat = s.rho_hat;
  c.workers = s.workers;
  c.diagnostics = s.diagnostics;
  c.assert_level = s.assert_level == fotd::AssertLevel::on;
}

fotd::PrimalDual wrap(const fotd::ProblemDef &p, const double *z, const double *lambda) {
  require(z && lambda, "null iterate");
  const auto &l = p.layout();
  return {fotd::Trajectory(l, Eigen::Map<const fotd::Vector>(z, l.primal_size())),
          fotd::DualTrajectory(l, Eigen::Map<const fotd::Vector>(lambda, l.dual_size()))};
}

} // namespace

extern "C" {

const char *fotd_version(void) { return "1.0.0"; }

const char *fotd_last_error(void) { return g_last_error.c_str(); }

const char *fotd_status_string(int status) {
  if (status == FOTD_OK) return "ok";
  if (status == FOTD_ERR_INTERNAL) return "internal error";
  if (status >= 1 && status <= 12) return fotd::to_string(static_cast<fotd::ErrorCode>(status));
  return "unknown status";
}

const char *fotd_solve_status_string(int status) {
  if (status < 0 || status > 3) return "unknown";
  return fotd::to_string(static_cast<fotd::SolveStatus>(status));
}

fotd_status fotd_config_default(fotd_config *cfg) {
  return guarded([&] {
    require(cfg, "null config");
    from_core(fotd::SolverConfig{}, *cfg);
    const fotd::InnerSolveOptions inner;
    cfg->inner_tol = inner.tol;
    cfg->inner_max_iters = inner.max_iters;
  });
}

fotd_status fotd_config_validate(const fotd_config *cfg) {
  return guarded([&] {
    require(cfg, "null config");
    to_core(*cfg);
    require(cfg->inner_tol >= 0.0, "inner_tol must be nonnegative");
    require(cfg->inner_max_iters >= 1, "inner_max_iters must be at least 1");
  });
}

fotd_status fotd_toy_case(int which, int horizon, fotd_toy_spec *spec) {
  return guarded([&] {
    require(spec, "null spec");
    const auto s = fotd::toy_case(which, horizon);
    spec->horizon = s.horizon;
    spec->c1 = s.c1;
    spec->c2 = s.c2;
    spec->reference = which == 1 ? FOTD_REF_CONSTANT
                                 : which == 2 ? FOTD_REF_SIN_SQUARED : FOTD_REF_SIN;
    spec->amplitude = which == 1 ? 1.0 : which == 2 ? 100.0 : 5.0;
  });
}

fotd_status fotd_plate_spec_default(fotd_plate_spec *spec) {
  return guarded([&] {
    require(spec, "null spec");
    const fotd::PlateSpec s;
    *spec = {s.mesh,    s.horizon,   s.hc, s.kappa, s.emissivity, s.sigma,
             s.ambient, s.thickness, FOTD_REF_SIN,  1.0};
  });
}

fotd_status fotd_problem_create_toy(const fotd_toy_spec *spec, fotd_problem **out) {
  return guarded([&] {
    require(spec && out, "null argument");
    fotd::ToySpec s;
    s.horizon = spec->horizon;
    s.c1 = spec->c1;
    s.c2 = spec->c2;
    s.reference = toy_reference(spec->reference, spec->amplitude);
    *out = new fotd_problem{fotd::make_toy_problem(s)};
  });
}

fotd_status fotd_problem_create_plate(const fotd_plate_spec *spec, fotd_problem **out) {
  return guarded([&] {
    require(spec && out, "null argument");
    fotd::PlateSpec s;
    s.mesh = spec->mesh;
    s.horizon = spec->horizon;
    s.hc = spec->hc;
    s.kappa = spec->kappa;
    s.emissivity = spec->emissivity;
    s.sigma = spec->sigma;
    s.ambient = spec->ambient;
    s.thickness = spec->thickness;
    s.reference = plate_reference(spec->reference, spec->amplitude);
    *out = new fotd_problem{fotd::make_plate_problem(s)};
  });
}

void fotd_problem_destroy(fotd_problem *p) { delete p; }

fotd_status fotd_problem_dims(const fotd_problem *p, int *horizon, int *nx, int *nu) {
  return guarded([&] {
    require(p, "null problem");
    if (horizon) *horizon = p->def->horizon();
    if (nx) *nx = p->def->nx();
    if (nu) *nu = p->def->nu();
  });
}

fotd_status fotd_problem_sizes(const fotd_problem *p, size_t *nz, size_t *nl) {
  return guarded([&] {
    require(p, "null problem");
    if (nz) *nz = static_cast<size_t>(p->def->layout().primal_size());
    if (nl) *nl = static_cast<size_t>(p->def->layout().dual_size());
  });
}

int fotd_problem_warning_count(const fotd_problem *p) {
  return p ? static_cast<int>(p->def->warnings().size()) : 0;
}

const char *fotd_problem_warning(const fotd_problem *p, int i) {
  if (!p || i < 0 || i >= fotd_problem_warning_count(p)) return nullptr;
  return p->def->warnings()[i].c_str();
}

fotd_status fotd_initializations(const fotd_problem *p, int count, uint64_t seed, double *z,
                                 double *lambda) {
  return guarded([&] {
    require(p && z && lambda, "null argument");
    const auto inits = fotd::make_initializations(*p->def, count, seed);
    const auto &l = p->def->layout();
    for (int i = 0; i < count; ++i) {
      std::memcpy(z + static_cast<size_t>(i) * l.primal_size(), inits[i].z.data.data(),
                  sizeof(double) * l.primal_size());
      std::memcpy(lambda + static_cast<size_t>(i) * l.dual_size(),
                  inits[i].lambda.data.data(), sizeof(double) * l.dual_size());
    }
  });
}

fotd_status fotd_objective(const fotd_problem *p, const double *z, double *value) {
  return guarded([&] {
    require(p && z && value, "null argument");
    const auto &l = p->def->layout();
    *value = fotd::eval_objective(
        *p->def, fotd::Trajectory(l, Eigen::Map<const fotd::Vector>(z, l.primal_size())));
  });
}

fotd_status fotd_kkt_residual(const fotd_problem *p, const double *z, const double *lambda,
                              double *value) {
  return guarded([&] {
    require(p && value, "null argument");
    const auto s = wrap(*p->def, z, lambda);
    *value = fotd::eval_lagrangian_gradient(*p->def, s.z, s.lambda).norm();
  });
}

fotd_status fotd_solve(const fotd_problem *p, const fotd_config *cfg, int mode,
                       const double *z0, const double *lambda0, fotd_report **out) {
  return guarded([&] {
    require(p && cfg && out, "null argument");
    const auto core = to_core(*cfg);
    const auto init = wrap(*p->def, z0, lambda0);
    auto r = std::make_unique<fotd_report>();
    switch (mode) {
    case FOTD_MODE_FOTD:
      r->report = fotd::solve(*p->def, core, init, fotd::SolveMode::fotd);
      break;
    case FOTD_MODE_CENTRALIZED:
      r->report = fotd::solve(*p->def, core, init, fotd::SolveMode::centralized);
      break;
    case FOTD_MODE_SCHWARZ:
      require(cfg->inner_tol >= 0.0 && cfg->inner_max_iters >= 1, "invalid inner options");
      r->report = fotd::schwarz_solve(*p->def, core, init,
                                      {cfg->inner_tol, cfg->inner_max_iters});
      break;
    default:
      fotd::throw_invalid("unknown mode " + std::to_string(mode));
    }
    *out = r.release();
  });
}

void fotd_report_destroy(fotd_report *r) { delete r; }

int fotd_report_status(const fotd_report *r) {
  return r ? static_cast<int>(r->report.status) : FOTD_SOLVE_ERROR;
}

int fotd_report_error(const fotd_report *r) {
  if (!r) return FOTD_ERR_INVALID_ARGUMENT;
  return r->report.error ? static_cast<int>(*r->report.error) : FOTD_OK;
}

const char *fotd_report_message(const fotd_report *r) {
  return r ? r->report.message.c_str() : "";
}

int fotd_report_record_count(const fotd_report *r) {
  return r ? static_cast<int>(r->report.records.size()) : 0;
}

fotd_status fotd_report_record(const fotd_report *r, int i, fotd_record *rec) {
  return guarded([&] {
    require(r && rec, "null argument");
    require(i >= 0 && i < fotd_report_record_count(r), "record index out of range");
    const auto &x = r->report.records[i];
    *rec = {x.iter, x.kkt_residual, x.merit, x.stepsize, x.gamma, x.dir_err_ratio, x.wall_ms};
  });
}

double fotd_report_total_ms(const fotd_report *r) { return r ? r->report.total_ms : 0.0; }

int fotd_report_descent_violations(const fotd_report *r) {
  return r ? r->report.descent_violations : 0;
}

int fotd_report_adaptations(const fotd_report *r) { return r ? r->report.adaptations : 0; }

fotd_status fotd_report_final_config(const fotd_report *r, fotd_config *cfg) {
  return guarded([&] {
    require(r && cfg, "null argument");
    from_core(r->report.final_config, *cfg);
  });
}

fotd_status fotd_report_solution(const fotd_report *r, double *z, double *lambda) {
  return guarded([&] {
    require(r && z && lambda, "null argument");
    const auto &s = r->report.solution;
    std::memcpy(z, s.z.data.data(), sizeof(double) * s.z.data.size());
    std::memcpy(lambda, s.lambda.data.data(), sizeof(double) * s.lambda.data.size());
  });
}

fotd_status fotd_report_write_csv(const fotd_report *r, const char *path, int timing) {
  return guarded([&] {
    require(r && path, "null argument");
    fotd::write_iteration_csv(path, r->report, timing != 0);
  });
}

fotd_status fotd_report_write_trajectory(const fotd_report *r, const char *path) {
  return guarded([&] {
    require(r && path, "null argument");
    fotd::write_trajectory_csv(path, r->report.solution.z, r->report.solution.lambda);
  });
}

fotd_status fotd_direction_error(const fotd_problem *p, const fotd_config *cfg,
                                 const double *z, const double *lambda, double *ratio) {
  return guarded([&] {
    require(p && cfg && ratio, "null argument");
    const auto s = wrap(*p->def, z, lambda);
    *ratio = fotd::direction_error_diagnostic(*p->def, s.z, s.lambda, to_core(*cfg));
  });
}

fotd_status fotd_newton_equivalence_gap(const fotd_problem *p, int subproblems, int overlap,
                                        double mu, int workers, const double *z,
                                        const double *lambda, double *gap) {
  return guarded([&] {
    require(p && gap, "null argument");
    const auto s = wrap(*p->def, z, lambda);
    const auto plan = fotd::make_plan(p->def->horizon(), subproblems, overlap);
    *gap = fotd::newton_equivalence_gap(*p->def, s, plan, mu, workers);
  });
}

fotd_status fotd_theory_gamma_g(double gamma_c, double t, double upsilon, double *out) {
  return guarded([&] {
    require(out, "null argument");
    *out = fotd::theory_gamma_G(gamma_c, t, upsilon);
  });
}

fotd_status fotd_theory_mu_bar(double gamma_c, double t, double upsilon, double *out) {
  return guarded([&] {
    require(out, "null argument");
    *out = fotd::theory_mu_bar(gamma_c, t, upsilon);
  });
}

} // extern "C"
