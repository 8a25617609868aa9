#ifndef PLDA_H
#define PLDA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every `plda_*` call.
 */
typedef enum PldaStatus {
  PLDA_STATUS_OK = 0,
  PLDA_STATUS_NULL_POINTER = 1,
  PLDA_STATUS_INVALID_ARGUMENT = 2,
  PLDA_STATUS_DIMENSION_MISMATCH = 3,
  PLDA_STATUS_NOT_POSITIVE_DEFINITE = 4,
  PLDA_STATUS_NUMERICAL = 5,
  PLDA_STATUS_PARSE = 6,
  PLDA_STATUS_IO = 7,
  PLDA_STATUS_PANIC = 8,
} PldaStatus;

/**
 * Values accepted by the `variant` argument of `plda_train`.
 */
typedef enum PldaVariant {
  PLDA_VARIANT_KALDI = 0,
  PLDA_VARIANT_PAPER = 1,
} PldaVariant;

/**
 * Opaque enrolled class.
 */
typedef struct PldaEnrollmentHandle PldaEnrollmentHandle;

/**
 * Opaque trained model.
 */
typedef struct PldaModelHandle PldaModelHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread, or null. The
 * pointer stays valid until the next `plda_*` call on the same thread.
 */
const char *plda_last_error_message(void);

/**
 * Builds a model from `mu` (`dim`) and row-major `phi_b`, `phi_w`
 * (`dim * dim`).
 *
 * # Safety
 * Pointers must reference arrays of the stated lengths; `out` must be
 * writable.
 */
enum PldaStatus plda_model_new(size_t dim,
                               const double *mu,
                               const double *phi_b,
                               const double *phi_w,
                               struct PldaModelHandle **out);

/**
 * Reads a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PldaStatus plda_model_load(const char *path, struct PldaModelHandle **out);

/**
 * Writes a model file.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum PldaStatus plda_model_save(const struct PldaModelHandle *model, const char *path);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void plda_model_free(struct PldaModelHandle *model);

/**
 * # Safety
 * `model` must come from this library; `out_dim` must be writable.
 */
enum PldaStatus plda_model_dim(const struct PldaModelHandle *model, size_t *out_dim);

/**
 * Copies `mu` (`dim`) and row-major `phi_b`, `phi_w` (`dim * dim`) into
 * caller buffers.
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum PldaStatus plda_model_get_params(const struct PldaModelHandle *model,
                                      double *mu,
                                      double *phi_b,
                                      double *phi_w);

/**
 * Trains a model by EM from `rows` row-major vectors of length `dim`, with
 * `labels[i]` the class of row `i` and `variant` a `PldaVariant`. Uses data-split initialization and the
 * library's default jitter.
 *
 * # Safety
 * `vectors` must hold `rows * dim` doubles and `labels` `rows` entries.
 */
enum PldaStatus plda_train(size_t dim,
                           size_t rows,
                           const double *vectors,
                           const uint32_t *labels,
                           uint32_t iterations,
                           uint32_t variant,
                           struct PldaModelHandle **out);

/**
 * Enrolls a class from `count` row-major vectors of the model's dimension.
 *
 * # Safety
 * `vectors` must hold `count * dim` doubles; `out` must be writable.
 */
enum PldaStatus plda_enroll(const struct PldaModelHandle *model,
                            const double *vectors,
                            size_t count,
                            struct PldaEnrollmentHandle **out);

/**
 * Releases an enrollment. Null is ignored.
 *
 * # Safety
 * `enrollment` must come from this library and not be used afterwards.
 */
void plda_enrollment_free(struct PldaEnrollmentHandle *enrollment);

/**
 * Log-likelihood ratio of `test` (model dimension) against an enrollment.
 *
 * # Safety
 * `test` must hold `dim` doubles; `out_llr` must be writable.
 */
enum PldaStatus plda_score(const struct PldaModelHandle *model,
                           const struct PldaEnrollmentHandle *enrollment,
                           const double *test,
                           double *out_llr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLDA_H */
