#ifndef EVOFRAC_H
#define EVOFRAC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum EvofracStatus {
  EVOFRAC_STATUS_OK = 0,
  EVOFRAC_STATUS_NULL_POINTER = 1,
  EVOFRAC_STATUS_INVALID_ARGUMENT = 2,
  EVOFRAC_STATUS_GRID = 3,
  EVOFRAC_STATUS_FRAC = 4,
  EVOFRAC_STATUS_MATERIAL = 5,
  EVOFRAC_STATUS_WELLPOSED = 6,
  EVOFRAC_STATUS_SPATIAL = 7,
  EVOFRAC_STATUS_SOLVER = 8,
  EVOFRAC_STATUS_IO = 9,
  EVOFRAC_STATUS_PANIC = 10,
} EvofracStatus;

typedef struct EvofracGrid EvofracGrid;

typedef struct EvofracLaw EvofracLaw;

typedef struct EvofracProjectors EvofracProjectors;

typedef struct EvofracReport EvofracReport;

typedef struct EvofracSignal EvofracSignal;

typedef struct EvofracSpatial EvofracSpatial;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Releases the handle; null is ignored.
 */
void evofrac_grid_free(struct EvofracGrid *handle);

/**
 * Releases the handle; null is ignored.
 */
void evofrac_signal_free(struct EvofracSignal *handle);

/**
 * Releases the handle; null is ignored.
 */
void evofrac_law_free(struct EvofracLaw *handle);

/**
 * Releases the handle; null is ignored.
 */
void evofrac_projectors_free(struct EvofracProjectors *handle);

/**
 * Releases the handle; null is ignored.
 */
void evofrac_spatial_free(struct EvofracSpatial *handle);

/**
 * Releases the handle; null is ignored.
 */
void evofrac_report_free(struct EvofracReport *handle);

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next `evofrac_*` call on the same thread.
 */
const char *evofrac_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *evofrac_version(void);

/**
 * Uniform grid `t_j = t_start + j dt`, `n_steps` a power of two, weight `rho > 0`.
 */
enum EvofracStatus evofrac_grid_new(double t_start,
                                    double dt,
                                    size_t n_steps,
                                    double rho,
                                    struct EvofracGrid **out);

size_t evofrac_grid_n_steps(const struct EvofracGrid *grid);

/**
 * Time of node `j`; NaN for a null handle.
 */
double evofrac_grid_time(const struct EvofracGrid *grid, size_t j);

/**
 * Signal of dimension `dim` from `2 * n_steps * dim` interleaved doubles.
 */
enum EvofracStatus evofrac_signal_new(const struct EvofracGrid *grid,
                                      size_t dim,
                                      const double *values,
                                      struct EvofracSignal **out);

size_t evofrac_signal_dim(const struct EvofracSignal *signal);

size_t evofrac_signal_n_steps(const struct EvofracSignal *signal);

/**
 * Copies the samples into `out` (`capacity` doubles, at least `2 * n_steps * dim`).
 */
enum EvofracStatus evofrac_signal_values(const struct EvofracSignal *signal,
                                         double *out,
                                         size_t capacity);

/**
 * `(d + rho)^gamma u` through the discrete transform.
 */
enum EvofracStatus evofrac_frac_apply(double gamma,
                                      const struct EvofracSignal *signal,
                                      struct EvofracSignal **out);

/**
 * Material law from its text form (`dim = ...`, `m0 = ...`, `frac <alpha> = ...`).
 */
enum EvofracStatus evofrac_law_parse(const char *text_ptr, struct EvofracLaw **out);

size_t evofrac_law_dim(const struct EvofracLaw *law);

/**
 * Writes `M(1/(i lambda + rho))` row-major into `out` (`2 * dim * dim` doubles).
 */
enum EvofracStatus evofrac_law_symbol(const struct EvofracLaw *law,
                                      double lambda,
                                      double rho,
                                      double *out,
                                      size_t capacity);

/**
 * Projector triple from text (`dim`, `p0`, `f0`, `q0`; omitted projectors are zero).
 */
enum EvofracStatus evofrac_projectors_parse(const char *text_ptr, struct EvofracProjectors **out);

/**
 * `A = [[0, div], [grad, 0]]` on `n_cells` cells of width `h`.
 */
enum EvofracStatus evofrac_spatial_grad_div(size_t n_cells, double h, struct EvofracSpatial **out);

/**
 * Negated grad-div pair, for elasticity.
 */
enum EvofracStatus evofrac_spatial_elasticity(size_t n_cells,
                                              double h,
                                              struct EvofracSpatial **out);

/**
 * `A = 0` of dimension `dim`.
 */
enum EvofracStatus evofrac_spatial_zero(size_t dim, struct EvofracSpatial **out);

size_t evofrac_spatial_dim(const struct EvofracSpatial *spatial);

/**
 * Certifies `law` against `projectors` on `[rho_min, rho_max]`. A failing
 * certificate is a successful call; inspect [`evofrac_report_passed`].
 */
enum EvofracStatus evofrac_check(const struct EvofracLaw *law,
                                 const struct EvofracProjectors *projectors,
                                 double rho_min,
                                 double rho_max,
                                 struct EvofracReport **out);

/**
 * 1 if every clause passed, 0 otherwise (also for null).
 */
int32_t evofrac_report_passed(const struct EvofracReport *report);

double evofrac_report_rho_threshold(const struct EvofracReport *report);

double evofrac_report_c0_estimate(const struct EvofracReport *report);

/**
 * Aligned plain-text report, owned by the handle.
 */
const char *evofrac_report_text(const struct EvofracReport *report);

/**
 * Solves `(d M(d^-1) + A) U = f` on the grid of `f` (its `rho` is used).
 * `max_residual` may be null.
 */
enum EvofracStatus evofrac_solve(const struct EvofracLaw *law,
                                 const struct EvofracSpatial *spatial,
                                 const struct EvofracSignal *rhs,
                                 double *max_residual,
                                 struct EvofracSignal **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVOFRAC_H */
