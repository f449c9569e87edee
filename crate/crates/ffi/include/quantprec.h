#ifndef QUANTPREC_H
#define QUANTPREC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum QpStatus {
  QP_STATUS_OK = 0,
  QP_STATUS_NULL_POINTER = 1,
  QP_STATUS_INVALID_UTF8 = 2,
  /*
   Bad argument, configuration or spec string.
   */
  QP_STATUS_INVALID_ARGUMENT = 3,
  /*
   Numerical failure (degenerate quantizer, non-finite value, ...).
   */
  QP_STATUS_NUMERICAL = 4,
  /*
   Internal panic caught at the boundary.
   */
  QP_STATUS_PANIC = 5,
} QpStatus;

/*
 Opaque parsed experiment.
 */
typedef struct QpExperiment QpExperiment;

/*
 Opaque quantizer handle.
 */
typedef struct QpQuantizer QpQuantizer;

/*
 Optimal design summary.
 */
typedef struct QpDesign {
  double alpha_star;
  double phi_star;
  double eta_star;
  double rho_star;
  double tau_star;
  double zeta_star;
} QpDesign;

/*
 Asymptotic performance of one precoder.
 */
typedef struct QpAsymptotic {
  double eta;
  double alpha_bar;
  double phi;
  double sinr;
  double tx_power;
} QpAsymptotic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *qp_last_error(void);

/*
 Library version as a static string.
 */
const char *qp_version(void);

/*
 Parses `ce:L`, `indep:L:DELTA` or `identity`.

 # Safety
 `spec` must be a nul-terminated string; `out` must be writable.
 */
enum QpStatus qp_quantizer_parse(const char *spec, struct QpQuantizer **out);

/*
 Releases a quantizer; null is ignored.

 # Safety
 `q` must come from [`qp_quantizer_parse`] and not be used afterwards.
 */
void qp_quantizer_free(struct QpQuantizer *q);

/*
 Number of output levels `L`.

 # Safety
 `q` must be a live handle; `out` must be writable.
 */
enum QpStatus qp_quantizer_levels(const struct QpQuantizer *q, size_t *out);

/*
 Quantizes one complex sample.

 # Safety
 `q` must be a live handle; the output pointers must be writable.
 */
enum QpStatus qp_quantize(const struct QpQuantizer *q,
                          double re,
                          double im,
                          double *out_re,
                          double *out_im);

/*
 Bussgang moments at input scale `alpha`: `E[conj(Z) q(αZ)]` and
 `E|q(αZ)|²` for `Z ~ CN(0, 1)`.

 # Safety
 `q` must be a live handle; the output pointers must be writable.
 */
enum QpStatus qp_quantizer_moments(const struct QpQuantizer *q,
                                   double alpha,
                                   double *cross_re,
                                   double *cross_im,
                                   double *out_power);

/*
 Optimal regularized-ZF design at antenna ratio `gamma`, noise variance
 `noise_var`, unit symbol variance and power budget.

 # Safety
 `q` must be a live handle; `out` must be writable.
 */
enum QpStatus qp_optimal_design(const struct QpQuantizer *q,
                                double gamma,
                                double noise_var,
                                struct QpDesign *out);

/*
 Asymptotic SINR of `precoder` (`mf`, `zf`, `rzf:RHO`, `srzf:RHO:TAU`).
 `eta <= 0` selects the power-saturating DAC scale.

 # Safety
 `q` must be a live handle, `precoder` a nul-terminated string, `out`
 writable.
 */
enum QpStatus qp_asymptotic_sinr(const struct QpQuantizer *q,
                                 double gamma,
                                 double noise_var,
                                 const char *precoder,
                                 double eta,
                                 struct QpAsymptotic *out);

/*
 Parses an experiment in the command-line syntax, e.g.
 `"sweep --var rho --range 0.02:0.6:30 --gamma 3"`.

 # Safety
 `spec` must be a nul-terminated string; `out` must be writable.
 */
enum QpStatus qp_experiment_parse(const char *spec, struct QpExperiment **out);

/*
 Releases an experiment; null is ignored.

 # Safety
 `e` must come from [`qp_experiment_parse`] and not be used afterwards.
 */
void qp_experiment_free(struct QpExperiment *e);

/*
 Canonical command line of an experiment.

 # Safety
 `e` must be a live handle; `out` must be writable. Free the result with
 [`qp_string_free`].
 */
enum QpStatus qp_experiment_canonical(const struct QpExperiment *e, char **out);

/*
 Runs an experiment and returns its CSV (`json == 0`) or JSON artifact.

 # Safety
 `e` must be a live handle; `out` must be writable. Free the result with
 [`qp_string_free`].
 */
enum QpStatus qp_experiment_run(const struct QpExperiment *e, int32_t json, char **out);

/*
 Releases a string returned by this library; null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void qp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUANTPREC_H */
