/* C interface to the de Sitter Klein-Gordon scattering toolbox. */

#ifndef DSCAT_H
#define DSCAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum DscatStatus {
  DSCAT_STATUS_OK = 0,
  DSCAT_STATUS_NULL_POINTER = 1,
  DSCAT_STATUS_INVALID_ARGUMENT = 2,
  DSCAT_STATUS_NUMERICAL_FAILURE = 3,
} DscatStatus;

/**
 * Regime tag mirrored from the core crate.
 */
typedef enum DscatRegime {
  DSCAT_REGIME_NON_INTEGER_GAP = 0,
  DSCAT_REGIME_INTEGER_GAP = 1,
  DSCAT_REGIME_THRESHOLD = 2,
  DSCAT_REGIME_COMPLEX_ROOTS = 3,
} DscatRegime;

/**
 * Sign classification of the commutator weights at an exponent `r`.
 */
typedef enum DscatWeightRegime {
  DSCAT_WEIGHT_REGIME_ALL_POSITIVE = 0,
  DSCAT_WEIGHT_REGIME_ALL_NEGATIVE = 1,
  DSCAT_WEIGHT_REGIME_DEGENERATE = 2,
} DscatWeightRegime;

/**
 * Opaque metric model handle.
 */
typedef struct DscatModel DscatModel;

/**
 * Indicial data for one `(n, lambda)` pair.
 */
typedef struct DscatSpectral {
  uint32_t n;
  double lambda;
  double s_plus_re;
  double s_plus_im;
  double s_minus_re;
  double s_minus_im;
  double s_hat_plus_re;
  double s_hat_plus_im;
  double s_hat_minus_re;
  double s_hat_minus_im;
  double l_lambda;
  enum DscatRegime regime;
} DscatSpectral;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Indicial roots, shifted roots, decay threshold and regime for
 * `(n, lambda)`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one
 * [`DscatSpectral`].
 */
enum DscatStatus dscat_spectral_compute(uint32_t n, double lambda, struct DscatSpectral *out);

/**
 * Weight-regime classification of the exponent `r`.
 *
 * # Safety
 * `out` must be null or valid for one write.
 */
enum DscatStatus dscat_weight_regime(uint32_t n,
                                     double lambda,
                                     double r,
                                     enum DscatWeightRegime *out);

/**
 * The ellipticity witness `exp(i pi (s_plus - s_minus))`.
 *
 * # Safety
 * `out_re`, `out_im` must be null or valid for one write each.
 */
enum DscatStatus dscat_symbol_ratio(uint32_t n, double lambda, double *out_re, double *out_im);

/**
 * Distributional pairing `((1-|Y|^2)_+^s, 1)` normalizing the flat-model
 * Poisson kernel; fails on the excluded exponent set.
 *
 * # Safety
 * `out_re`, `out_im` must be null or valid for one write each.
 */
enum DscatStatus dscat_pairing_constant(uint32_t n,
                                        double s_re,
                                        double s_im,
                                        double *out_re,
                                        double *out_im);

/**
 * Exact de Sitter model in dimension `n >= 2`; returns null on invalid
 * input.  Free with [`dscat_model_free`].
 */
struct DscatModel *dscat_model_exact(uint32_t n);

/**
 * Warped perturbation of the boundary metric (n = 2 only); returns null
 * on invalid input.
 */
struct DscatModel *dscat_model_perturbed(uint32_t n, double amplitude, uint32_t angular_wave);

/**
 * Release a model handle.
 *
 * # Safety
 * `model` must be null or a pointer previously returned by a
 * `dscat_model_*` constructor, not yet freed.
 */
void dscat_model_free(struct DscatModel *model);

/**
 * Classical scattering map on the model: boundary data
 * `(theta, eta_sign)` outgoing from `Y_+`, mapped to the arrival point
 * and unit covector on `Y_-`.
 *
 * # Safety
 * `model` must be a live handle; `out_theta`, `out_eta` null or valid
 * for one write each.
 */
enum DscatStatus dscat_classical_scatter(const struct DscatModel *model,
                                         double theta,
                                         double eta_sign,
                                         double *out_theta,
                                         double *out_eta);

/**
 * Mode-`k` connection matrix from `Y_+` to `Y_-` on exact de Sitter.
 * `out` receives the four entries row-major as (re, im) pairs, so 8
 * doubles.
 *
 * # Safety
 * `out` must be null or valid for 8 writes; `out_cond` null or valid
 * for one.
 */
enum DscatStatus dscat_connection_matrix(uint32_t n,
                                         double lambda,
                                         uint32_t k,
                                         double *out,
                                         double *out_cond);

/**
 * Library version as a static null-terminated string.
 */
const char *dscat_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSCAT_H */
