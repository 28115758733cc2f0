#ifndef RECIPBP_H
#define RECIPBP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first four match the CLI exit codes.
 */
typedef enum RecipStatus {
  RECIP_STATUS_OK = 0,
  RECIP_STATUS_VALIDATION = 1,
  RECIP_STATUS_NUMERICAL = 2,
  RECIP_STATUS_IO = 3,
  RECIP_STATUS_NULL_POINTER = 4,
  RECIP_STATUS_BUFFER_TOO_SMALL = 5,
  RECIP_STATUS_PANIC = 6,
} RecipStatus;

/**
 * Opaque model handle.
 */
typedef struct RecipModel RecipModel;

/**
 * Options for `recip_smooth`. Obtain defaults from `recip_bp_options_default`.
 */
typedef struct RecipBpOptions {
  double tol;
  size_t t_max;
  /**
   * Nonzero to normalize messages after every update.
   */
  int normalize;
  /**
   * Nonzero for seeded random initial messages, zero for uniform.
   */
  int random_init;
  uint64_t seed;
} RecipBpOptions;

/**
 * Outcome of `recip_smooth`.
 */
typedef struct RecipBpResult {
  size_t sweeps;
  int converged;
  /**
   * Hilbert distance moved in the last sweep.
   */
  double last_change;
} RecipBpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a JSON model. On success `*out` owns a new handle.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum RecipStatus recip_model_from_json(const char *json, struct RecipModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from `recip_model_from_json` and not be used afterwards.
 */
void recip_model_free(struct RecipModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum RecipStatus recip_model_num_nodes(const struct RecipModel *model, size_t *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum RecipStatus recip_model_alphabet_size(const struct RecipModel *model, size_t *out);

/**
 * Default options for a model: tolerance 1e-10, sweep budget 10 L D^2,
 * normalized messages, uniform start.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum RecipStatus recip_bp_options_default(const struct RecipModel *model,
                                          struct RecipBpOptions *out);

/**
 * Runs loopy BP and writes the beliefs. `result` may be null.
 *
 * # Safety
 * `model` must be a live handle, `beliefs` must hold `len` doubles and
 * `result`, when non-null, must be writable.
 */
enum RecipStatus recip_smooth(const struct RecipModel *model,
                              struct RecipBpOptions options,
                              double *beliefs,
                              size_t len,
                              struct RecipBpResult *result);

/**
 * Exact marginals by transfer matrices.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum RecipStatus recip_exact_marginals(const struct RecipModel *model, double *out, size_t len);

/**
 * BP fixed-point beliefs from the Perron vectors of the loop matrices.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum RecipStatus recip_steady_state_beliefs(const struct RecipModel *model,
                                            double *out,
                                            size_t len);

/**
 * Corrected posteriors for a binary model. Fails with
 * `RECIP_STATUS_VALIDATION` when the alphabet is not binary.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum RecipStatus recip_binary_correction(const struct RecipModel *model, double *out, size_t len);

/**
 * Hilbert distance between two strictly positive vectors of length `n`.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `out` must be writable.
 */
enum RecipStatus recip_hilbert_distance(const double *x, const double *y, size_t n, double *out);

/**
 * Full diagnostics report as JSON. Free `*out` with `recip_string_free`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum RecipStatus recip_diagnose_json(const struct RecipModel *model, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void recip_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null after a
 * successful call. Valid until the next call on the same thread.
 */
const char *recip_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECIPBP_H */
