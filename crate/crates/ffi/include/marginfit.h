/* C interface for the marginfit library. Generated; do not edit. */

#ifndef MARGINFIT_H
#define MARGINFIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code for every fallible entry point.
 */
typedef enum MarginfitStatus {
  MARGINFIT_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  MARGINFIT_STATUS_NULL_POINTER = 1,
  MARGINFIT_STATUS_INVALID_ARGUMENT = 2,
  MARGINFIT_STATUS_DIMENSION_MISMATCH = 3,
  MARGINFIT_STATUS_SCHEMA = 4,
  MARGINFIT_STATUS_PARSE = 5,
  MARGINFIT_STATUS_INSUFFICIENT_DATA = 6,
  MARGINFIT_STATUS_NON_FINITE = 7,
  /**
   * A solver exhausted its iteration budget.
   */
  MARGINFIT_STATUS_CONVERGENCE = 8,
  MARGINFIT_STATUS_DEGENERATE = 9,
  MARGINFIT_STATUS_EMPTY_MARGIN = 10,
  MARGINFIT_STATUS_IO = 11,
  /**
   * An output buffer is smaller than the data to be written.
   */
  MARGINFIT_STATUS_BUFFER_TOO_SMALL = 12,
  /**
   * An internal invariant failed; the library caught a panic.
   */
  MARGINFIT_STATUS_INTERNAL = 13,
} MarginfitStatus;

/**
 * Treatment coding expected by [`marginfit_dataset_new`].
 */
typedef enum MarginfitTreatmentKind {
  /**
   * Exactly two distinct values; the smaller is coded -1.
   */
  MARGINFIT_TREATMENT_KIND_BINARY = 0,
  /**
   * Integer levels 0..K with K >= 3, every level present.
   */
  MARGINFIT_TREATMENT_KIND_CATEGORICAL = 1,
  /**
   * At least 3 distinct finite doses.
   */
  MARGINFIT_TREATMENT_KIND_CONTINUOUS = 2,
} MarginfitTreatmentKind;

/**
 * Opaque dataset handle.
 */
typedef struct MarginfitDataset MarginfitDataset;

/**
 * Opaque fitted SVM handle.
 */
typedef struct MarginfitSvmModel MarginfitSvmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a NUL-terminated string. Never NULL; the pointer is
 * valid for the life of the process.
 */
const char *marginfit_version(void);

/**
 * Description of the last error observed on this thread, or an empty
 * string if none. Valid until the next failing call on the same thread.
 */
const char *marginfit_last_error_message(void);

/**
 * Builds a dataset from row-major covariates `z` (`n` rows, `p`
 * columns), a length-`n` treatment vector interpreted per `kind`, and an
 * optional length-`n` outcome (`outcome` may be NULL). On success writes
 * a new handle to `out`; free it with [`marginfit_dataset_free`].
 *
 * # Safety
 * `z` must point to `n * p` readable doubles; `treatment` (and `outcome`
 * when non-NULL) to `n` readable doubles; `out` to a writable pointer.
 */
enum MarginfitStatus marginfit_dataset_new(const double *z,
                                           size_t n,
                                           size_t p,
                                           const double *treatment,
                                           enum MarginfitTreatmentKind kind,
                                           const double *outcome,
                                           struct MarginfitDataset **out);

/**
 * Number of rows.
 *
 * # Safety
 * `d` must be a live dataset handle; `out` must be writable.
 */
enum MarginfitStatus marginfit_dataset_n(const struct MarginfitDataset *d, size_t *out);

/**
 * Number of covariate columns.
 *
 * # Safety
 * `d` must be a live dataset handle; `out` must be writable.
 */
enum MarginfitStatus marginfit_dataset_p(const struct MarginfitDataset *d, size_t *out);

/**
 * Frees a dataset handle. NULL is a no-op.
 *
 * # Safety
 * `d` must be NULL or a handle produced by this library and not yet
 * freed.
 */
void marginfit_dataset_free(struct MarginfitDataset *d);

/**
 * Relaxed convex-hull overlap check between the two arms of a binary
 * dataset. `delta` is the hull-distance relaxation; pass a negative
 * value for the data-scaled default. Writes whether the hulls overlap
 * (distance <= delta) and the hull distance itself.
 *
 * # Safety
 * `d` must be a live dataset handle; `out_overlap` and `out_distance`
 * must be writable.
 */
enum MarginfitStatus marginfit_overlap_check(const struct MarginfitDataset *d,
                                             double delta,
                                             bool *out_overlap,
                                             double *out_distance);

/**
 * Fits a linear soft-margin SVM separating the arms of a binary
 * dataset. Pass `kkt_tol <= 0` for the default tolerance and
 * `max_passes == 0` for the default iteration budget. On success writes
 * a new handle to `out`; free it with [`marginfit_svm_free`].
 *
 * # Safety
 * `d` must be a live dataset handle; `out` must be writable.
 */
enum MarginfitStatus marginfit_svm_fit(const struct MarginfitDataset *d,
                                       double cost,
                                       double kkt_tol,
                                       size_t max_passes,
                                       struct MarginfitSvmModel **out);

/**
 * Dimension of the fitted weight vector.
 *
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum MarginfitStatus marginfit_svm_dim(const struct MarginfitSvmModel *m, size_t *out);

/**
 * Copies the weight vector into `buf`. `len` must equal the model
 * dimension exactly.
 *
 * # Safety
 * `m` must be a live model handle; `buf` must point to `len` writable
 * doubles.
 */
enum MarginfitStatus marginfit_svm_weights(const struct MarginfitSvmModel *m,
                                           double *buf,
                                           size_t len);

/**
 * Offset `b` of the decision function f(z) = w . z - b.
 *
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum MarginfitStatus marginfit_svm_bias(const struct MarginfitSvmModel *m, double *out);

/**
 * Geometric margin width 2 / ||w||.
 *
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum MarginfitStatus marginfit_svm_margin_width(const struct MarginfitSvmModel *m, double *out);

/**
 * Decision value f(z) = w . z - b for one observation of the model's
 * dimension.
 *
 * # Safety
 * `m` must be a live model handle; `z` must point to `len` readable
 * doubles; `out` must be writable.
 */
enum MarginfitStatus marginfit_svm_decision_value(const struct MarginfitSvmModel *m,
                                                  const double *z,
                                                  size_t len,
                                                  double *out);

/**
 * Frees a model handle. NULL is a no-op.
 *
 * # Safety
 * `m` must be NULL or a handle produced by this library and not yet
 * freed.
 */
void marginfit_svm_free(struct MarginfitSvmModel *m);

/**
 * Number of subjects inside the margin: T_i f(Z_i) < 1 - margin_tol.
 * Pass a negative `margin_tol` for the default.
 *
 * # Safety
 * `m` and `d` must be live handles over data of matching dimension;
 * `out` must be writable.
 */
enum MarginfitStatus marginfit_margin_count(const struct MarginfitSvmModel *m,
                                            const struct MarginfitDataset *d,
                                            double margin_tol,
                                            size_t *out);

/**
 * Writes the sorted row indices of the margin subpopulation into `buf`
 * and their count into `written`. Fails with `BUFFER_TOO_SMALL` when
 * `cap` is less than the count; query [`marginfit_margin_count`] first.
 *
 * # Safety
 * `m` and `d` must be live handles over data of matching dimension;
 * `buf` must point to `cap` writable size_t slots; `written` must be
 * writable.
 */
enum MarginfitStatus marginfit_margin_indices(const struct MarginfitSvmModel *m,
                                              const struct MarginfitDataset *d,
                                              double margin_tol,
                                              size_t *buf,
                                              size_t cap,
                                              size_t *written);

/**
 * Runs the margin pipeline (standardize, fit the assignment model,
 * extract the margin, estimate on it) on a dataset with an outcome and
 * writes the first estimate: point, standard error, and the number of
 * subjects used. `cost` is the SVM/SVR regularization parameter; other
 * settings are library defaults.
 *
 * # Safety
 * `d` must be a live dataset handle; the three out-pointers must be
 * writable.
 */
enum MarginfitStatus marginfit_pipeline_estimate(const struct MarginfitDataset *d,
                                                 double cost,
                                                 double *out_point,
                                                 double *out_stderr,
                                                 size_t *out_n_used);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARGINFIT_H */
