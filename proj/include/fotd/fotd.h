#ifndef FOTD_FOTD_H
#define FOTD_FOTD_H

/*
 * C interface to the FOTD solver library.
 *
 * Every function returns an fotd_status; on failure a description is
 * available from fotd_last_error() on the calling thread. Objects are opaque
 * handles owned by the caller and released with the matching *_destroy.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define FOTD_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define FOTD_API __attribute__((visibility("default")))
#else
#  define FOTD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fotd_status {
  FOTD_OK = 0,
  FOTD_ERR_INVALID_ARGUMENT = 1,
  FOTD_ERR_NUMERIC = 2,
  FOTD_ERR_LINEAR_SOLVER = 3,
  FOTD_ERR_MODIFICATION = 4,
  FOTD_ERR_MU_TOO_SMALL = 5,
  FOTD_ERR_NON_DESCENT = 6,
  FOTD_ERR_LINE_SEARCH = 7,
  FOTD_ERR_ADAPTIVITY = 8,
  FOTD_ERR_SUBPROBLEM = 9,
  FOTD_ERR_DESCENT_ASSERTION = 10,
  FOTD_ERR_UNDEFINED_RATIO = 11,
  FOTD_ERR_IO = 12,
  FOTD_ERR_INTERNAL = 99
} fotd_status;

typedef enum fotd_mode {
  FOTD_MODE_FOTD = 0,
  FOTD_MODE_CENTRALIZED = 1,
  FOTD_MODE_SCHWARZ = 2
} fotd_mode;

typedef enum fotd_solve_status {
  FOTD_SOLVE_CONVERGED_KKT = 0,
  FOTD_SOLVE_CONVERGED_STEP = 1,
  FOTD_SOLVE_MAX_ITERS = 2,
  FOTD_SOLVE_ERROR = 3
} fotd_solve_status;

/* d_k = amplitude, amplitude sin(k), amplitude sin(k)^2 (toy: knot index;
 * plate: time k dt). */
typedef enum fotd_reference {
  FOTD_REF_CONSTANT = 0,
  FOTD_REF_SIN = 1,
  FOTD_REF_SIN_SQUARED = 2
} fotd_reference;

typedef struct fotd_problem fotd_problem;
typedef struct fotd_report fotd_report;

typedef struct fotd_toy_spec {
  int horizon;
  double c1;
  double c2;
  int reference; /* fotd_reference */
  double amplitude;
} fotd_toy_spec;

typedef struct fotd_plate_spec {
  int mesh;
  int horizon;
  double hc;
  double kappa;
  double emissivity;
  double sigma;
  double ambient;
  double thickness;
  int reference; /* fotd_reference */
  double amplitude;
} fotd_plate_spec;

typedef struct fotd_config {
  double mu;
  double eta1;
  double eta2;
  double beta;
  double backtrack;
  int subproblems; /* M */
  int overlap;     /* b */
  double kkt_tol;
  double step_tol;
  int max_iters;
  int has_definiteness_c;
  double definiteness_c;
  double gamma_step;
  int adaptivity;
  double nu;
  double rho_hat;
  int workers;
  int diagnostics;
  int assert_level; /* 0 off, 1 on */
  double inner_tol;     /* Schwarz inner solves */
  int inner_max_iters;
} fotd_config;

typedef struct fotd_record {
  int iter;
  double kkt_residual;
  double merit;
  double stepsize;      /* NaN when not available */
  double gamma;         /* NaN when not available */
  double dir_err_ratio; /* NaN when not available */
  double wall_ms;
} fotd_record;

FOTD_API const char *fotd_version(void);
FOTD_API const char *fotd_last_error(void);
FOTD_API const char *fotd_status_string(int status);
FOTD_API const char *fotd_solve_status_string(int status);

FOTD_API fotd_status fotd_config_default(fotd_config *cfg);
FOTD_API fotd_status fotd_config_validate(const fotd_config *cfg);
FOTD_API fotd_status fotd_toy_case(int which, int horizon, fotd_toy_spec *spec);
FOTD_API fotd_status fotd_plate_spec_default(fotd_plate_spec *spec);

FOTD_API fotd_status fotd_problem_create_toy(const fotd_toy_spec *spec, fotd_problem **out);
FOTD_API fotd_status fotd_problem_create_plate(const fotd_plate_spec *spec,
                                               fotd_problem **out);
FOTD_API void fotd_problem_destroy(fotd_problem *p);
FOTD_API fotd_status fotd_problem_dims(const fotd_problem *p, int *horizon, int *nx,
                                       int *nu);
/* Lengths of the primal (z) and dual (lambda) vectors. */
FOTD_API fotd_status fotd_problem_sizes(const fotd_problem *p, size_t *nz, size_t *nl);
FOTD_API int fotd_problem_warning_count(const fotd_problem *p);
FOTD_API const char *fotd_problem_warning(const fotd_problem *p, int i);

/* Writes `count` initializations into z (count * nz) and lambda
 * (count * nl): zeros first, then iid Uniform(-1e5, 1e5). */
FOTD_API fotd_status fotd_initializations(const fotd_problem *p, int count, uint64_t seed,
                                          double *z, double *lambda);

FOTD_API fotd_status fotd_objective(const fotd_problem *p, const double *z, double *value);
FOTD_API fotd_status fotd_kkt_residual(const fotd_problem *p, const double *z,
                                       const double *lambda, double *value);

/* Runs a solve; solver failures are reported through the report status, the
 * return value only signals invalid input. */
FOTD_API fotd_status fotd_solve(const fotd_problem *p, const fotd_config *cfg, int mode,
                                const double *z0, const double *lambda0,
                                fotd_report **out);

FOTD_API void fotd_report_destroy(fotd_report *r);
FOTD_API int fotd_report_status(const fotd_report *r);
/* FOTD_OK unless the status is FOTD_SOLVE_ERROR. */
FOTD_API int fotd_report_error(const fotd_report *r);
FOTD_API const char *fotd_report_message(const fotd_report *r);
FOTD_API int fotd_report_record_count(const fotd_report *r);
FOTD_API fotd_status fotd_report_record(const fotd_report *r, int i, fotd_record *rec);
FOTD_API double fotd_report_total_ms(const fotd_report *r);
FOTD_API int fotd_report_descent_violations(const fotd_report *r);
FOTD_API int fotd_report_adaptations(const fotd_report *r);
FOTD_API fotd_status fotd_report_final_config(const fotd_report *r, fotd_config *cfg);
FOTD_API fotd_status fotd_report_solution(const fotd_report *r, double *z, double *lambda);
/* timing = 0 leaves the wall_ms column empty. */
FOTD_API fotd_status fotd_report_write_csv(const fotd_report *r, const char *path,
                                           int timing);
FOTD_API fotd_status fotd_report_write_trajectory(const fotd_report *r, const char *path);

/* |approximate - exact| / |exact| for the Newton direction at (z, lambda). */
FOTD_API fotd_status fotd_direction_error(const fotd_problem *p, const fotd_config *cfg,
                                          const double *z, const double *lambda,
                                          double *ratio);

/* Infinity-norm gap between one exact Newton step on every nonlinear
 * subproblem and the unit decomposed Newton update at (z, lambda). */
FOTD_API fotd_status fotd_newton_equivalence_gap(const fotd_problem *p, int subproblems,
                                                 int overlap, double mu, int workers,
                                                 const double *z, const double *lambda,
                                                 double *gap);

FOTD_API fotd_status fotd_theory_gamma_g(double gamma_c, double t, double upsilon,
                                         double *out);
FOTD_API fotd_status fotd_theory_mu_bar(double gamma_c, double t, double upsilon,
                                        double *out);

#ifdef __cplusplus
}
#endif

#endif
