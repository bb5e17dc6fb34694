#ifndef HYBRID_BEM_H
#define HYBRID_BEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HbemStatus {
  HBEM_STATUS_OK = 0,
  HBEM_STATUS_NULL_POINTER = 1,
  HBEM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The domain or a singular disc is geometrically invalid.
   */
  HBEM_STATUS_GEOMETRY = 3,
  /**
   * Quadrature, factorization or fitting failed.
   */
  HBEM_STATUS_NUMERICAL = 4,
  HBEM_STATUS_IO = 5,
  /**
   * A requested index does not exist.
   */
  HBEM_STATUS_OUT_OF_RANGE = 6,
  /**
   * The buffer passed in is too short; nothing was written.
   */
  HBEM_STATUS_BUFFER_TOO_SMALL = 7,
  HBEM_STATUS_PANIC = 8,
} HbemStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct HbemConfig HbemConfig;

/**
 * Opaque experiment result.
 */
typedef struct HbemResult HbemResult;

/**
 * Capacitance summary of a result. Quantities a method does not produce
 * are NaN.
 */
typedef struct HbemCapacitance {
  double c_arc;
  double c_segment;
  double c_total;
  double c_corrected;
  double e_percent;
  double e_arc_percent;
  double e_corrected_percent;
  double cond_estimate;
  bool ill_conditioned;
} HbemCapacitance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buffer` (truncated and
 * NUL-terminated) and returns the full message length in bytes, excluding
 * the terminator. Returns 0 when the last call succeeded.
 *
 * # Safety
 * `buffer` must be null or point to `capacity` writable bytes.
 */
size_t hbem_last_error_message(char *buffer, size_t capacity);

/**
 * New configuration with the default settings (single-singularity Motz
 * problem, hybrid method, N = 500, R = 0.1, two terms, linear elements).
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum HbemStatus hbem_config_new(struct HbemConfig **out);

/**
 * Configuration from a JSON object; missing fields take their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum HbemStatus hbem_config_from_json(const char *json, struct HbemConfig **out);

/**
 * Named built-in setting such as `"table1"` or `"fig6"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` valid for writes.
 */
enum HbemStatus hbem_config_from_preset(const char *name, struct HbemConfig **out);

/**
 * Sets one field from a JSON value, e.g. `("r", "0.3")` or
 * `("method", "\"bem\"")`. The configuration is unchanged on failure.
 *
 * # Safety
 * `config` must come from this library; `key` and `json_value` must be
 * NUL-terminated strings.
 */
enum HbemStatus hbem_config_set(struct HbemConfig *config, const char *key, const char *json_value);

/**
 * # Safety
 * `config` must be null or come from this library, and not be used afterwards.
 */
void hbem_config_free(struct HbemConfig *config);

/**
 * Runs the experiment described by `config`.
 *
 * # Safety
 * `config` must come from this library and `out` be valid for writes.
 */
enum HbemStatus hbem_run(const struct HbemConfig *config, struct HbemResult **out);

/**
 * # Safety
 * `result` must be null or come from this library, and not be used afterwards.
 */
void hbem_result_free(struct HbemResult *result);

/**
 * Number of coefficients of expansion `expansion` (0 for the singular
 * point at the origin, 1 for the corner of the two-singularity problem).
 *
 * # Safety
 * `result` must come from this library and `count` be valid for writes.
 */
enum HbemStatus hbem_result_alpha_count(const struct HbemResult *result,
                                        size_t expansion,
                                        size_t *count);

/**
 * Copies the coefficients of `expansion` into `buffer`, which must hold at
 * least the count reported by [`hbem_result_alpha_count`].
 *
 * # Safety
 * `result` must come from this library and `buffer` point to `capacity`
 * writable doubles.
 */
enum HbemStatus hbem_result_alpha(const struct HbemResult *result,
                                  size_t expansion,
                                  double *buffer,
                                  size_t capacity);

/**
 * # Safety
 * `result` must come from this library and `out` be valid for writes.
 */
enum HbemStatus hbem_result_capacitance(const struct HbemResult *result,
                                        struct HbemCapacitance *out);

/**
 * The full result as a JSON object. Release the string with
 * [`hbem_string_free`].
 *
 * # Safety
 * `result` must come from this library and `out` be valid for writes.
 */
enum HbemStatus hbem_result_to_json(const struct HbemResult *result, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void hbem_string_free(char *s);

/**
 * Flux weight of the `l`-th Motz coefficient (`l >= 1`) through the
 * Dirichlet leg of a disc of radius `r`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HbemStatus hbem_k_weight(size_t l, double r, double *out);

/**
 * Flux through the Dirichlet leg of radius `r` carried by the exact Motz
 * coefficients.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HbemStatus hbem_motz_exact_capacitance(double r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRID_BEM_H */
