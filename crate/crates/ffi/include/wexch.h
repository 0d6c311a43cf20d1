#ifndef WEXCH_H
#define WEXCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WexchStatus {
  WEXCH_STATUS_OK = 0,
  WEXCH_STATUS_NULL_POINTER = 1,
  WEXCH_STATUS_INVALID_ARGUMENT = 2,
  WEXCH_STATUS_INVALID_UTF8 = 3,
  WEXCH_STATUS_INVALID_CONFIG = 4,
  WEXCH_STATUS_TOO_LARGE = 5,
  /**
   * An estimator could not produce a value from the data (no acceptances,
   * degenerate or undefined ratios, disconnected support).
   */
  WEXCH_STATUS_ESTIMATION_FAILED = 6,
  WEXCH_STATUS_IO = 7,
  /**
   * The verdict is undetermined; the JSON output is still written.
   */
  WEXCH_STATUS_UNKNOWN = 8,
  /**
   * Criteria of an experiment failed; the JSON output is still written.
   */
  WEXCH_STATUS_CRITERIA_FAILED = 9,
  WEXCH_STATUS_PANIC = 10,
} WexchStatus;

/**
 * A weight sequence `lambda_1, lambda_2, ..` on a finite alphabet.
 */
typedef struct WexchWeightSeq WexchWeightSeq;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wexch_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The caller owns
 * the returned string.
 */
char *wexch_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void wexch_string_free(char *s);

/**
 * Builds a weight sequence from its JSON spec, e.g. `{"family": "binary_example"}`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be writable.
 */
enum WexchStatus wexch_weight_seq_from_json(const char *spec_json, struct WexchWeightSeq **out);

/**
 * # Safety
 * `seq` must be NULL or a handle from [`wexch_weight_seq_from_json`] not yet freed.
 */
void wexch_weight_seq_free(struct WexchWeightSeq *seq);

/**
 * # Safety
 * `seq` must be a live handle; `out` must be writable.
 */
enum WexchStatus wexch_weight_seq_alphabet_size(const struct WexchWeightSeq *seq, size_t *out);

/**
 * Writes `lambda_i(0..k)` (linear scale) into `out`, which holds `k` values.
 *
 * # Safety
 * `seq` must be a live handle; `out` must hold `k` doubles.
 */
enum WexchStatus wexch_weight_at(const struct WexchWeightSeq *seq, size_t i, double *out, size_t k);

/**
 * Log-permanent of the `n x n` matrix whose row-major natural-log entries are
 * in `ln_entries` (`-inf` allowed for zero entries).
 *
 * # Safety
 * `ln_entries` must hold `n * n` doubles; `out` must be writable.
 */
enum WexchStatus wexch_log_permanent(const double *ln_entries, size_t n, double *out);

/**
 * Conditional weights `w_{n,i}` for the observed `xs[0..n]`; `out` receives `n` values.
 *
 * # Safety
 * `seq` must be a live handle; `xs` and `out` must hold `n` elements.
 */
enum WexchStatus wexch_conditional_weights(const struct WexchWeightSeq *seq,
                                           const size_t *xs,
                                           size_t n,
                                           size_t i,
                                           double *out);

/**
 * Condition report as JSON. `candidates` holds `count` extra reference
 * weight functions, `k` linear values each, appended to the defaults.
 * Returns [`WexchStatus::Unknown`] with the report written when the verdict is undetermined.
 *
 * # Safety
 * `seq` must be a live handle; `candidates` must hold `count * k` doubles;
 * `out_json` must be writable.
 */
enum WexchStatus wexch_check_conditions_json(const struct WexchWeightSeq *seq,
                                             const double *candidates,
                                             size_t count,
                                             char **out_json);

/**
 * Draws `X_1..X_n` from the weighted-i.i.d. law with base masses `base[0..k]`.
 *
 * # Safety
 * `seq` must be a live handle; `base` must hold `k` doubles and `out` `n` values.
 */
enum WexchStatus wexch_sample(const struct WexchWeightSeq *seq,
                              const double *base,
                              size_t k,
                              size_t n,
                              uint64_t seed,
                              size_t *out);

/**
 * Recovers the latent component from `xs[0..n]` and writes its normalized
 * base distribution into `out[0..k]`. `reference` may be NULL for all ones.
 *
 * # Safety
 * `seq` must be a live handle; `xs` must hold `n` values; `reference`, when
 * not NULL, and `out` must hold `k` doubles.
 */
enum WexchStatus wexch_recover(const struct WexchWeightSeq *seq,
                               const size_t *xs,
                               size_t n,
                               const double *reference,
                               double *out,
                               size_t k);

/**
 * Total variation distance between two probability vectors of length `k`.
 *
 * # Safety
 * `p` and `q` must hold `k` doubles; `out` must be writable.
 */
enum WexchStatus wexch_total_variation(const double *p, const double *q, size_t k, double *out);

/**
 * Runs a CLI experiment (`"verify"`, `"lln"`, ..) on a JSON config and
 * returns the full result as JSON.
 *
 * # Safety
 * `experiment` and `config_json` must be NUL-terminated; `out_json` must be writable.
 */
enum WexchStatus wexch_run_experiment(const char *experiment,
                                      const char *config_json,
                                      uint64_t seed_offset,
                                      char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEXCH_H */
