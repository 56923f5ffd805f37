#ifndef QUADRIC_FFI_H
#define QUADRIC_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QuadricStatus {
  QUADRIC_STATUS_OK = 0,
  QUADRIC_STATUS_NULL_POINTER = 1,
  QUADRIC_STATUS_INVALID_ARGUMENT = 2,
  QUADRIC_STATUS_DOMAIN = 3,
  QUADRIC_STATUS_NO_SOLUTION = 4,
  QUADRIC_STATUS_UNREPRESENTABLE = 5,
  QUADRIC_STATUS_EXCLUDED_BRANCH = 6,
  QUADRIC_STATUS_DEGENERATE_GEOMETRY = 7,
  QUADRIC_STATUS_INSUFFICIENT_SAMPLES = 8,
  QUADRIC_STATUS_NO_ELEMENTS = 9,
  QUADRIC_STATUS_SAMPLING = 10,
  QUADRIC_STATUS_BUFFER_TOO_SMALL = 11,
  QUADRIC_STATUS_PANIC = 12,
} QuadricStatus;

/**
 * Kind codes, used both as outputs and as `uint32_t` inputs.
 */
enum QuadricKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  QUADRIC_KIND_ELLIPSOID = 0,
  QUADRIC_KIND_PARABOLOID = 1,
  QUADRIC_KIND_HYPERBOLOID_SHEET = 2,
  QUADRIC_KIND_HYPERPLANE = 3,
  QUADRIC_KIND_CENTERED_SPHERE = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum QuadricKind QuadricKind;
#else
typedef uint32_t QuadricKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * A fit together with the samples it was computed from.
 */
typedef struct QuadricFit QuadricFit;

/**
 * A quadric in canonical form `rho = f / (1 - eps <x, xi>)`.
 */
typedef struct QuadricModel QuadricModel;

typedef struct QuadricFitSummary {
  double s;
  double amplitude;
  double c2;
  QuadricKind kind;
  double rms_residual;
  double condition;
  size_t samples;
} QuadricFitSummary;

/**
 * Residual summary. Quantities absent from a report are NaN.
 */
typedef struct QuadricReport {
  size_t samples;
  bool analytic;
  double c2;
  double k;
  double s;
  double eq1_max;
  double eq1_rms;
  double obata_shifted_max;
  double trace_max;
  double schouten_max;
  double s_deviation;
  double reciprocity_max;
  double worst;
  bool under_determined;
} QuadricReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *quadric_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *quadric_version(void);

/**
 * Builds a model from the canonical form. `kind` is a [`QuadricKind`] code.
 *
 * # Safety
 * `axis` must point to `axis_len` doubles and `out` to writable storage.
 */
enum QuadricStatus quadric_model_from_canonical(uint32_t kind,
                                                double f,
                                                double eps,
                                                const double *axis,
                                                size_t axis_len,
                                                struct QuadricModel **out);

/**
 * Builds the model of `w = S + C<x, xi>` with `S² = C² + c2 − 1`; `branch`
 * is the sign of `S` (+1 or −1).
 *
 * # Safety
 * `axis` must point to `axis_len` doubles and `out` to writable storage.
 */
enum QuadricStatus quadric_model_from_solution(double c2,
                                               double amplitude,
                                               int32_t branch,
                                               const double *axis,
                                               size_t axis_len,
                                               struct QuadricModel **out);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards. Null is ignored.
 */
void quadric_model_free(struct QuadricModel *handle);

/**
 * Ambient dimension `n + 1`, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live model.
 */
size_t quadric_model_ambient_dim(const struct QuadricModel *handle);

/**
 * # Safety
 * `handle` must be a live model; the out pointers must be writable.
 */
enum QuadricStatus quadric_model_params(const struct QuadricModel *handle,
                                        QuadricKind *kind,
                                        double *f,
                                        double *eps,
                                        double *axis,
                                        size_t axis_len);

/**
 * Solution parameters of the model; fails with `ExcludedBranch` for a
 * centered sphere given in canonical form.
 *
 * # Safety
 * `handle` must be a live model; the out pointers must be writable.
 */
enum QuadricStatus quadric_model_solution(const struct QuadricModel *handle,
                                          double *c2,
                                          double *amplitude,
                                          double *s);

/**
 * Radial function at a unit direction.
 *
 * # Safety
 * `handle` must be a live model, `x` must point to `x_len` doubles.
 */
enum QuadricStatus quadric_model_radial(const struct QuadricModel *handle,
                                        const double *x,
                                        size_t x_len,
                                        double *rho);

/**
 * Seeded surface points, row-major into `points` (`count * ambient` doubles).
 *
 * # Safety
 * `handle` must be a live model and `points` must hold `points_len` doubles.
 */
enum QuadricStatus quadric_model_sample_surface(const struct QuadricModel *handle,
                                                size_t count,
                                                uint64_t seed,
                                                double *points,
                                                size_t points_len);

/**
 * Seeded radial samples: directions row-major into `directions`, radii into `rhos`.
 *
 * # Safety
 * `handle` must be a live model; the buffers must hold the given lengths.
 */
enum QuadricStatus quadric_model_sample_radial(const struct QuadricModel *handle,
                                               size_t count,
                                               uint64_t seed,
                                               double *directions,
                                               size_t directions_len,
                                               double *rhos,
                                               size_t rhos_len);

/**
 * Center, second focus (each `ambient` doubles) and semi-axes of an
 * ellipsoid or hyperboloid sheet.
 *
 * # Safety
 * `handle` must be a live model; the buffers must hold `len` doubles each.
 */
enum QuadricStatus quadric_model_elements(const struct QuadricModel *handle,
                                          double *center,
                                          double *second_focus,
                                          size_t len,
                                          double *semi_major,
                                          double *semi_minor);

/**
 * Classifies `S + C<x, xi>` with the default tolerances.
 *
 * # Safety
 * `kind` must be writable.
 */
enum QuadricStatus quadric_classify(double s, double amplitude, QuadricKind *kind);

/**
 * Fits `1/rho = S + <x, v>` to `count` samples. `weighting` is 0 for uniform
 * rows and 1 for `rho²` weights.
 *
 * # Safety
 * `directions` must hold `count * ambient` doubles, `rhos` `count` doubles,
 * and `out` must be writable.
 */
enum QuadricStatus quadric_fit_radial(const double *directions,
                                      const double *rhos,
                                      size_t count,
                                      size_t ambient,
                                      uint32_t weighting,
                                      struct QuadricFit **out);

/**
 * Fits surface points given row-major (`count * ambient` doubles).
 *
 * # Safety
 * `points` must hold `count * ambient` doubles and `out` must be writable.
 */
enum QuadricStatus quadric_fit_points(const double *points,
                                      size_t count,
                                      size_t ambient,
                                      uint32_t weighting,
                                      struct QuadricFit **out);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards. Null is ignored.
 */
void quadric_fit_free(struct QuadricFit *handle);

/**
 * # Safety
 * `handle` must be a live fit and `summary` writable.
 */
enum QuadricStatus quadric_fit_summary(const struct QuadricFit *handle,
                                       struct QuadricFitSummary *summary);

/**
 * The fitted affine part `v`, `ambient` doubles.
 *
 * # Safety
 * `handle` must be a live fit and `v` must hold `v_len` doubles.
 */
enum QuadricStatus quadric_fit_v(const struct QuadricFit *handle, double *v, size_t v_len);

/**
 * The recovered quadric as a new model handle.
 *
 * # Safety
 * `handle` must be a live fit and `out` writable.
 */
enum QuadricStatus quadric_fit_model(const struct QuadricFit *handle, struct QuadricModel **out);

/**
 * Residuals of the fit against the data it was computed from.
 *
 * # Safety
 * `handle` must be a live fit and `report` writable.
 */
enum QuadricStatus quadric_fit_verify(const struct QuadricFit *handle,
                                      struct QuadricReport *report);

/**
 * Analytic residuals of `w = S/k + C<x, xi>` on the sphere of radius `1/k`
 * at `samples` seeded uniform points.
 *
 * # Safety
 * `axis` must point to `axis_len` doubles and `report` must be writable.
 */
enum QuadricStatus quadric_verify_solution(double c2,
                                           double amplitude,
                                           int32_t branch,
                                           const double *axis,
                                           size_t axis_len,
                                           double k,
                                           size_t samples,
                                           uint64_t seed,
                                           struct QuadricReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADRIC_FFI_H */
