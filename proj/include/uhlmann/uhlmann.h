/*
 * C interface to the Uhlmann-curvature library.
 *
 * All objects are opaque handles created and destroyed by matching
 * uhl_*_free calls. Functions that can fail either return NULL (constructors)
 * or a uhl_status; the thread-local uhl_last_error() / uhl_last_status()
 * describe the most recent failure on the calling thread. All computations
 * are pure, so handles may be shared across threads once created.
 *
 * Complex matrices are written into caller buffers as row-major [re, im]
 * pairs (2*d*d doubles); real matrices as row-major doubles.
 */

#ifndef UHLMANN_UHLMANN_H
#define UHLMANN_UHLMANN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uhl_status {
  UHL_OK = 0,
  UHL_ERR_SYNTAX = 1,
  UHL_ERR_UNKNOWN_IDENTIFIER = 2,
  UHL_ERR_DOMAIN = 3,
  UHL_ERR_FORMAT = 4,
  UHL_ERR_VALIDATION = 5,
  UHL_ERR_UNKNOWN_MODEL = 6,
  UHL_ERR_EIGENSOLVER = 7,
  UHL_ERR_RANK_CHANGE = 8,
  UHL_ERR_DEGENERATE_METRIC = 9,
  UHL_ERR_NOT_PURE = 10,
  UHL_ERR_STEP_TOO_SMALL = 11,
  UHL_ERR_DEGENERATE_SPECTRUM = 12,
  UHL_ERR_WRONG_ARITY = 13,
  UHL_ERR_NO_SOLUTION = 14,
  UHL_ERR_NUMERICAL = 15,
  UHL_ERR_INVALID_ARGUMENT = 16,
  UHL_ERR_UNKNOWN = 127
} uhl_status;

typedef struct uhl_model uhl_model;
typedef struct uhl_report uhl_report;
typedef struct uhl_curve uhl_curve;
typedef struct uhl_checks uhl_checks;

#define UHL_METHOD_SPECTRAL 0
#define UHL_METHOD_DUAL_CONTRACTION 1
#define UHL_METHOD_CONNECTION 2

#define UHL_MEASURE_RIEMANNIAN 0
#define UHL_MEASURE_LEBESGUE 1

typedef struct uhl_options {
  double rank_tol; /* <= 0 selects the model's rank_tol */
  double pcc_tol;  /* <= 0 selects 1e-9 */
  double fd_step;  /* <= 0 selects 1e-4 */
  int method;      /* UHL_METHOD_* */
  int richardson;  /* one extrapolation level for finite differences */
  int measure;     /* UHL_MEASURE_*, for uhl_curvature_action */
} uhl_options;

const char* uhl_version(void);

/* Message and status of the calling thread's most recent failure. */
const char* uhl_last_error(void);
uhl_status uhl_last_status(void);

/* For expression and model-file errors: byte offset and entry position of
 * the most recent failure, or -1 when not applicable. */
long uhl_last_error_offset(void);
void uhl_last_error_entry(int* row, int* col);

void uhl_options_init(uhl_options* options);

/* ---- models ---- */

uhl_model* uhl_model_builtin(const char* name);
uhl_model* uhl_model_parse(const char* model_file_text);
void uhl_model_free(uhl_model* model);

int uhl_model_dim(const uhl_model* model);
int uhl_model_num_params(const uhl_model* model);
const char* uhl_model_param_name(const uhl_model* model, int index);
const char* uhl_model_name(const uhl_model* model);

/* ---- expression linting ---- */

uhl_status uhl_parse_check(const char* source, const char* const* params, int num_params);

/* Canonical printed form; free with uhl_string_free. NULL on error. */
char* uhl_parse_canonical(const char* source, const char* const* params, int num_params);
void uhl_string_free(char* text);

/* ---- point reports ---- */

uhl_report* uhl_report_compute(const uhl_model* model, const double* coords,
                               const uhl_options* options);
void uhl_report_free(uhl_report* report);

int uhl_report_dim(const uhl_report* report);
int uhl_report_num_params(const uhl_report* report);
double uhl_report_curvature(const uhl_report* report);
double uhl_report_pair_term(const uhl_report* report, int mu, int nu);
const char* uhl_report_method(const uhl_report* report);
int uhl_report_rank(const uhl_report* report);
double uhl_report_condition_number(const uhl_report* report);
double uhl_report_fd_step_used(const uhl_report* report); /* 0 for the spectral path */
int uhl_report_pcc_satisfied(const uhl_report* report);
double uhl_report_pcc_residual(const uhl_report* report);
double uhl_report_pcc_tol(const uhl_report* report);
int uhl_report_has_gamma(const uhl_report* report); /* 1 iff two parameters */
double uhl_report_gamma(const uhl_report* report);

void uhl_report_eigenvalues(const uhl_report* report, double* out /* d */);
void uhl_report_rho(const uhl_report* report, double* out /* 2*d*d */);
void uhl_report_g_operator(const uhl_report* report, int mu, double* out /* 2*d*d */);
void uhl_report_metric(const uhl_report* report, double* out /* p*p */);
void uhl_report_metric_inverse(const uhl_report* report, double* out /* p*p */);
void uhl_report_qfi(const uhl_report* report, double* out /* p*p */);

/* Scalar curvature only (lean path for grid sweeps). */
uhl_status uhl_curvature_at(const uhl_model* model, const double* coords,
                            const uhl_options* options, double* curvature, int* rank,
                            double* condition_number);

/* Midpoint-rule integral of C over a box, one (lo, hi, steps) triple per
 * parameter, weighted per options->measure. */
uhl_status uhl_curvature_action(const uhl_model* model, const double* lo, const double* hi,
                                const int* steps, const uhl_options* options, double* action);

/* ---- two-parameter estimation ---- */

/* verdict: 0 feasible, 1 infeasible, 2 outside-domain. Matrices are 2x2
 * row-major. */
uhl_status uhl_tradeoff_feasible(const double* covariance, int repetitions, const double* qfi,
                                 double gamma, int* verdict);

uhl_curve* uhl_tradeoff_curve(const double* qfi, double gamma, int repetitions, const double* v1,
                              int count);
void uhl_curve_free(uhl_curve* curve);
int uhl_curve_size(const uhl_curve* curve);
/* UHL_OK with *v2_min set, or UHL_ERR_NO_SOLUTION for a flagged row. */
uhl_status uhl_curve_point(const uhl_curve* curve, int index, double* v1, double* v2_min);
/* Chart in which the search family is diagonal: K = R diag(k) R^T. */
void uhl_curve_chart(const uhl_curve* curve, double* k_eigenvalues /* 2 */,
                     double* rotation /* 2x2 row-major */);

/* ---- verification suite ---- */

uhl_checks* uhl_verify(const uhl_model* model, const double* coords, const uhl_options* options);
void uhl_checks_free(uhl_checks* checks);
int uhl_checks_count(const uhl_checks* checks);
int uhl_checks_all_passed(const uhl_checks* checks);
const char* uhl_check_name(const uhl_checks* checks, int index);
/* 0 passed, 1 failed, 2 skipped */
int uhl_check_status(const uhl_checks* checks, int index);
double uhl_check_residual(const uhl_checks* checks, int index);
double uhl_check_tolerance(const uhl_checks* checks, int index);
const char* uhl_check_detail(const uhl_checks* checks, int index);

#ifdef __cplusplus
}
#endif

#endif /* UHLMANN_UHLMANN_H */
