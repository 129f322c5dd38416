#ifndef IOEST_H
#define IOEST_H

/* Generated by cbindgen from the ioest-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible `ioest_*` call.
 */
typedef enum {
  IOEST_STATUS_OK = 0,
  IOEST_STATUS_NULL_ARGUMENT = 1,
  IOEST_STATUS_INVALID_ARGUMENT = 2,
  IOEST_STATUS_DIMENSION_MISMATCH = 3,
  IOEST_STATUS_DOMAIN_ERROR = 4,
  IOEST_STATUS_SOLVER_FAILURE = 5,
  IOEST_STATUS_IO_ERROR = 6,
  IOEST_STATUS_PARSE_ERROR = 7,
} IoestStatus;

/**
 * Opaque dataset handle.
 */
typedef struct IoestDataset IoestDataset;

/**
 * Opaque forward-problem handle.
 */
typedef struct IoestProblem IoestProblem;

/**
 * Copy the last error message (UTF-8, NUL terminated) into `buf`.
 *
 * Returns the full message length in bytes (excluding the NUL), whatever
 * the capacity; passing `cap = 0` or a NULL buffer just queries the length.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be NULL.
 */
uintptr_t ioest_last_error(char *buf, uintptr_t cap);

/**
 * Linear cost over a box; `d = m = p`.
 *
 * # Safety
 * `lo`, `hi` point to `d` doubles; `out` is a valid handle slot.
 */
IoestStatus ioest_problem_linear_box(uintptr_t d,
                                     const double *lo,
                                     const double *hi,
                                     IoestProblem **out);

/**
 * Separable quadratic over a box: `sum a x_k^2 - (c theta_k + u_k + shift_k) x_k`.
 *
 * # Safety
 * `shift`, `lo`, `hi` point to `d` doubles; `out` is a valid handle slot.
 */
IoestStatus ioest_problem_separable_quad_box(uintptr_t d,
                                             double a,
                                             double c,
                                             const double *shift,
                                             const double *lo,
                                             const double *hi,
                                             IoestProblem **out);

/**
 * Weighted-log objective over the standard simplex; `d = p + 1`.
 *
 * # Safety
 * `out` is a valid handle slot.
 */
IoestStatus ioest_problem_log_simplex(uintptr_t p, IoestProblem **out);

/**
 * Scalar comfort/energy tradeoff quadratic over `[70, 76]`.
 *
 * # Safety
 * `out` is a valid handle slot.
 */
IoestStatus ioest_problem_comfort_quad(IoestProblem **out);

/**
 * Build the model (and its conventional parameter box) registered for a
 * named scenario, e.g. "FOP-B" or "CE". `p` is used by the parameterized
 * scenarios; pass 0 for the default.
 *
 * # Safety
 * `name` is a NUL-terminated string; `out` is a valid handle slot.
 */
IoestStatus ioest_problem_from_scenario(const char *name, uintptr_t p, IoestProblem **out);

/**
 * # Safety
 * `problem` must be a live handle from a constructor (or NULL).
 */
void ioest_problem_free(IoestProblem *problem);

/**
 * Query the problem dimensions; NULL outputs are skipped.
 *
 * # Safety
 * `problem` is a live handle; non-NULL outputs are writable.
 */
IoestStatus ioest_problem_dims(const IoestProblem *problem,
                               uintptr_t *out_d,
                               uintptr_t *out_m,
                               uintptr_t *out_p,
                               uintptr_t *out_q);

/**
 * Build a dataset from row-major arrays: `us` is `n x m`, `ys` is `n x d`.
 *
 * # Safety
 * `us` and `ys` point to `n*m` and `n*d` doubles; `out` is a handle slot.
 */
IoestStatus ioest_dataset_new(uintptr_t n,
                              uintptr_t m,
                              uintptr_t d,
                              const double *us,
                              const double *ys,
                              IoestDataset **out);

/**
 * Load a dataset from a CSV file with header `u_1..u_m,y_1..y_d`.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is a valid handle slot.
 */
IoestStatus ioest_dataset_read_csv(const char *path, IoestDataset **out);

/**
 * # Safety
 * `dataset` must be a live handle (or NULL).
 */
void ioest_dataset_free(IoestDataset *dataset);

/**
 * Number of observations (0 for NULL).
 *
 * # Safety
 * `dataset` must be a live handle or NULL.
 */
uintptr_t ioest_dataset_len(const IoestDataset *dataset);

/**
 * Objective value `f(x, u, theta)`.
 *
 * # Safety
 * Array lengths follow the problem dims; `out` is writable.
 */
IoestStatus ioest_objective(const IoestProblem *problem,
                            const double *x,
                            const double *u,
                            const double *theta,
                            double *out);

/**
 * Exact forward solve: writes the minimizer into `out_x` (`d` doubles) and
 * the optimal value into `out_value` (NULL to skip).
 *
 * # Safety
 * Array lengths follow the problem dims.
 */
IoestStatus ioest_solve_forward(const IoestProblem *problem,
                                const double *u,
                                const double *theta,
                                double *out_x,
                                double *out_value);

/**
 * Euclidean projection of `z` onto the feasible set, written to `out_x`.
 *
 * # Safety
 * Array lengths follow the problem dims.
 */
IoestStatus ioest_project_feasible(const IoestProblem *problem,
                                   const double *z,
                                   const double *u,
                                   double *out_x);

/**
 * Sample-average risk `Q_n(theta; eps)` of the dataset under the problem.
 *
 * # Safety
 * `theta` holds `p` doubles; `out_q` is writable.
 */
IoestStatus ioest_risk_saa(const IoestProblem *problem,
                           const IoestDataset *dataset,
                           const double *theta,
                           double eps,
                           double *out_q);

/**
 * Enumeration estimate over the box `[theta_lo, theta_hi]` (each `p`
 * doubles) with net spacing `delta` and regularization `eps`.
 *
 * # Safety
 * `out_theta` holds `p` doubles; `out_loss` may be NULL.
 */
IoestStatus ioest_ena_estimate(const IoestProblem *problem,
                               const IoestDataset *dataset,
                               const double *theta_lo,
                               const double *theta_hi,
                               double delta,
                               double eps,
                               double *out_theta,
                               double *out_loss);

/**
 * Semiparametric estimate. Pass `gamma <= 0` or `sigma <= 0` to select the
 * kernel by cross-validation; `project` forces projecting denoised points
 * onto the feasible set.
 *
 * # Safety
 * `out_theta` holds `p` doubles; `out_loss` may be NULL.
 */
IoestStatus ioest_spa_estimate(const IoestProblem *problem,
                               const IoestDataset *dataset,
                               const double *theta_lo,
                               const double *theta_hi,
                               double gamma,
                               double sigma,
                               bool project,
                               double *out_theta,
                               double *out_loss);

/**
 * Variational-inequality baseline estimate.
 *
 * # Safety
 * `out_theta` holds `p` doubles; `out_loss` may be NULL.
 */
IoestStatus ioest_via_estimate(const IoestProblem *problem,
                               const IoestDataset *dataset,
                               const double *theta_lo,
                               const double *theta_hi,
                               double delta,
                               double *out_theta,
                               double *out_loss);

/**
 * KKT-residual baseline estimate.
 *
 * # Safety
 * `out_theta` holds `p` doubles; `out_loss` may be NULL.
 */
IoestStatus ioest_kka_estimate(const IoestProblem *problem,
                               const IoestDataset *dataset,
                               const double *theta_lo,
                               const double *theta_hi,
                               double delta,
                               double *out_theta,
                               double *out_loss);

/**
 * Direct check that the risk at the estimate matches an independent
 * re-evaluation; exposed mainly for binding smoke tests.
 *
 * # Safety
 * `theta` holds `p` doubles.
 */
IoestStatus ioest_risk_mean_sqdist(const IoestProblem *problem,
                                   const IoestDataset *dataset,
                                   const double *theta,
                                   double eps,
                                   double *out_q);

#endif  /* IOEST_H */
