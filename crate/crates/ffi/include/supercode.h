#ifndef SUPERCODE_H
#define SUPERCODE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SUPERCODE_MODE_FULL 0

#define SUPERCODE_MODE_GENIE 1

#define SUPERCODE_MODE_UNCODED 2

#define SUPERCODE_POLICY_FIXED 0

#define SUPERCODE_POLICY_FRESH_PER_TRIAL 1

/**
 * Returned by [`supercode_quantize`] when no codeword is admissible.
 */
#define SUPERCODE_NO_CODEWORD -1

typedef enum SupercodeStatus {
  SUPERCODE_STATUS_OK = 0,
  SUPERCODE_STATUS_NULL_POINTER = 1,
  SUPERCODE_STATUS_INVALID_PARAMETER = 2,
  SUPERCODE_STATUS_ABOVE_CAPACITY = 3,
  SUPERCODE_STATUS_DOMAIN = 4,
  SUPERCODE_STATUS_RESOURCE = 5,
  SUPERCODE_STATUS_USAGE = 6,
  SUPERCODE_STATUS_IO = 7,
  SUPERCODE_STATUS_PANIC = 8,
} SupercodeStatus;

/**
 * Opaque spherical codebook.
 */
typedef struct SupercodeCodebook SupercodeCodebook;

/**
 * Opaque system parameters.
 */
typedef struct SupercodeParams SupercodeParams;

typedef struct SupercodeCoefficients {
  double alpha;
  double beta;
  /**
   * Quantization distortion `sigma2 2^(-2 rho)`.
   */
  double delta_q;
  double gamma;
  /**
   * Per-symbol squared codeword radius.
   */
  double radius2;
  double target_cos;
} SupercodeCoefficients;

/**
 * Headline numbers of a simulation run.
 */
typedef struct SupercodeRunSummary {
  size_t num_trials;
  size_t codebook_size;
  double mean_distortion;
  double stderr_distortion;
  double genie_mean_distortion;
  double mean_power;
  double encode_failure_rate;
  double decode_error_rate;
  double mean_quant_error;
  double optimal_distortion;
  double distortion_at_rho;
} SupercodeRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *supercode_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void supercode_string_free(char *s);

/**
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum SupercodeStatus supercode_capacity(double power, double noise, double *out);

/**
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum SupercodeStatus supercode_distortion_rate(double sigma2, double rate, double *out);

/**
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum SupercodeStatus supercode_optimal_distortion(double sigma2,
                                                  double power,
                                                  double noise,
                                                  double *out);

/**
 * Validated parameters with the default encoder tolerance, `delta = 0`
 * and seed 0.
 *
 * # Safety
 * `out` must be NULL or valid for writes. On success `*out` owns a handle
 * to be released with [`supercode_params_free`].
 */
enum SupercodeStatus supercode_params_new(double sigma2,
                                          double power,
                                          double noise,
                                          double rho,
                                          size_t n,
                                          struct SupercodeParams **out);

/**
 * # Safety
 * `params` must be NULL or a live handle.
 */
void supercode_params_free(struct SupercodeParams *params);

/**
 * Encoder cosine tolerance. The handle is unchanged on failure.
 *
 * # Safety
 * `params` must be NULL or a live handle.
 */
enum SupercodeStatus supercode_params_set_epsilon(struct SupercodeParams *params, double epsilon);

/**
 * Codeword sphere shrink factor in `[0, 1)`.
 *
 * # Safety
 * `params` must be NULL or a live handle.
 */
enum SupercodeStatus supercode_params_set_delta(struct SupercodeParams *params, double delta);

/**
 * # Safety
 * `params` must be NULL or a live handle.
 */
enum SupercodeStatus supercode_params_set_seed(struct SupercodeParams *params, uint64_t seed);

/**
 * # Safety
 * `params` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum SupercodeStatus supercode_coefficients(const struct SupercodeParams *params,
                                            struct SupercodeCoefficients *out);

/**
 * The codebook a fixed-codebook simulation with these parameters uses.
 *
 * # Safety
 * `params` must be NULL or a live handle; `out` NULL or valid for writes.
 * On success `*out` must be released with [`supercode_codebook_free`].
 */
enum SupercodeStatus supercode_codebook_build(const struct SupercodeParams *params,
                                              struct SupercodeCodebook **out);

/**
 * # Safety
 * `cb` must be NULL or a live handle.
 */
void supercode_codebook_free(struct SupercodeCodebook *cb);

/**
 * Number of codewords; 0 for NULL.
 *
 * # Safety
 * `cb` must be NULL or a live handle.
 */
size_t supercode_codebook_len(const struct SupercodeCodebook *cb);

/**
 * Blocklength; 0 for NULL.
 *
 * # Safety
 * `cb` must be NULL or a live handle.
 */
size_t supercode_codebook_dim(const struct SupercodeCodebook *cb);

/**
 * Copies codeword `index` into `buf`, which must hold `len == dim` values.
 *
 * # Safety
 * `cb` must be NULL or a live handle; `buf` valid for `len` writes.
 */
enum SupercodeStatus supercode_codebook_codeword(const struct SupercodeCodebook *cb,
                                                 size_t index,
                                                 double *buf,
                                                 size_t len);

/**
 * Typical-angle quantization of `s`: picks uniformly (stream seeded by
 * `seed`) among codewords with `|cos - target_cos| <= epsilon`. Writes
 * [`SUPERCODE_NO_CODEWORD`] when none qualifies.
 *
 * # Safety
 * `cb` must be NULL or a live handle; `s` valid for `len` reads; `out`
 * NULL or valid for writes.
 */
enum SupercodeStatus supercode_quantize(const struct SupercodeCodebook *cb,
                                        const double *s,
                                        size_t len,
                                        double target_cos,
                                        double epsilon,
                                        uint64_t seed,
                                        int64_t *out);

/**
 * Minimum-angle decoding of `y`; lowest index on ties.
 *
 * # Safety
 * `cb` must be NULL or a live handle; `y` valid for `len` reads; `out`
 * NULL or valid for writes.
 */
enum SupercodeStatus supercode_decode(const struct SupercodeCodebook *cb,
                                      const double *y,
                                      size_t len,
                                      size_t *out);

/**
 * Runs a simulation. `report_json` may be NULL; otherwise it receives the
 * full report as a JSON string owned by the caller.
 *
 * # Safety
 * `params` must be NULL or a live handle; `summary` NULL or valid for
 * writes; `report_json` NULL or valid for writes.
 */
enum SupercodeStatus supercode_run(const struct SupercodeParams *params,
                                   size_t num_trials,
                                   uint32_t mode,
                                   uint32_t policy,
                                   struct SupercodeRunSummary *summary,
                                   char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPERCODE_H */
