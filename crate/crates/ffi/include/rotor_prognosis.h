#ifndef ROTOR_PROGNOSIS_H
#define ROTOR_PROGNOSIS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI function.
 */
typedef enum RpStatus {
  /**
   * Success.
   */
  RpStatusOk = 0,
  /**
   * A required pointer argument was null.
   */
  RpStatusNullPointer = 1,
  /**
   * An argument was out of range (state > 2, zero length, bad weights).
   */
  RpStatusInvalidArgument = 2,
  /**
   * The loop layout violates `N1 >= 2`, `N2 >= 1`, `N3 >= 1`.
   */
  RpStatusDegenerateLayout = 3,
  /**
   * The layout admits no feasible calibration for the given weights.
   */
  RpStatusInfeasibleCalibration = 4,
  /**
   * Buffer lengths disagree with the layout or with each other.
   */
  RpStatusLengthMismatch = 5,
  /**
   * The wave cannot be processed (too short, not a multiple of 16, or
   * non-finite samples).
   */
  RpStatusInvalidWave = 6,
  /**
   * Unexpected internal failure.
   */
  RpStatusInternal = 7,
} RpStatus;

/**
 * Opaque calibrated-coefficients handle.
 */
typedef struct RpCalibration RpCalibration;

/**
 * Accuracy and index scores of one prediction series.
 */
typedef struct RpOpaiReport {
  double accuracy;
  double s;
  double c;
  double c1;
  double c2;
  double c3;
} RpOpaiReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rp_version(void);

/**
 * Human-readable description of a status code (static string).
 */
const char *rp_status_message(enum RpStatus status);

/**
 * Calibrate penalty coefficients for a loop layout and score weights.
 *
 * # Safety
 * `out` must point to a writable handle slot. The returned handle must be
 * released with [`rp_calibration_free`].
 */
enum RpStatus rp_calibration_new(unsigned long long n1,
                                 unsigned long long n2,
                                 unsigned long long n3,
                                 double w1,
                                 double w2,
                                 double w3,
                                 struct RpCalibration **out);

/**
 * Release a calibration handle. Null is accepted and ignored.
 *
 * # Safety
 * `handle` must be null or a pointer previously returned by
 * [`rp_calibration_new`]; it must not be used afterwards.
 */
void rp_calibration_free(struct RpCalibration *handle);

/**
 * Read the calibrated coefficients out of a handle. `feasible` is 1 when
 * `beta >= 0` and `gamma >= 0` (so `S` stays in `[0, 1]`), else 0.
 *
 * # Safety
 * `handle` must be a live handle from [`rp_calibration_new`]; output
 * pointers may be null to skip a field.
 */
enum RpStatus rp_calibration_params(const struct RpCalibration *handle,
                                    double *alpha,
                                    double *beta,
                                    double *gamma,
                                    int32_t *feasible);

/**
 * Time-weighted accuracy `S` of a prediction sequence under a calibration.
 * The sequence length must equal the calibrated layout's total.
 *
 * # Safety
 * `predicted` must point to `len` readable bytes; `out` must be writable.
 */
enum RpStatus rp_s_score(const struct RpCalibration *handle,
                         const uint8_t *predicted,
                         unsigned long long len,
                         double *out);

/**
 * Full report (accuracy, S, C, C1..C3) for a prediction sequence over the
 * layout `(n1, n2, n3)` with the standard 0.2/0.3/0.5 weights.
 *
 * # Safety
 * `predicted` must point to `len` readable bytes; `out` must be writable.
 */
enum RpStatus rp_score_series(const uint8_t *predicted,
                              unsigned long long len,
                              unsigned long long n1,
                              unsigned long long n2,
                              unsigned long long n3,
                              struct RpOpaiReport *out);

/**
 * Consistency of one undivided prediction sequence
 * (`1 - mean squared difference of consecutive predictions`).
 *
 * # Safety
 * `predicted` must point to `len` readable bytes; `out` must be writable.
 */
enum RpStatus rp_sequence_consistency(const uint8_t *predicted,
                                      unsigned long long len,
                                      double *out);

/**
 * Wavelet-denoise a wave in place semantics: reads `len` samples from
 * `samples` and writes the denoised wave to `out` (same length). The length
 * must be a multiple of 16 and at least 16.
 *
 * # Safety
 * `samples` must point to `len` readable doubles and `out` to `len`
 * writable doubles.
 */
enum RpStatus rp_wave_denoise(const double *samples, unsigned long long len, double *out);

/**
 * Extract the 24 per-sensor features of one wave into `out` (24 doubles:
 * 13 time-domain then 11 time-frequency, in the library's canonical order).
 * Features whose formula is undefined for this wave are written as NaN.
 *
 * # Safety
 * `samples` must point to `len` readable doubles and `out` to 24 writable
 * doubles.
 */
enum RpStatus rp_wave_features(const double *samples, unsigned long long len, double *out);

/**
 * Name of per-sensor feature `index` (0..24) as a static string, or null
 * when out of range.
 */
const char *rp_feature_name(unsigned long long index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTOR_PROGNOSIS_H */
