#ifndef WAVEDENS_H
#define WAVEDENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WD_CRITERION_NORMALIZED 0

#define WD_CRITERION_UNNORMALIZED 1

#define WD_RULE_NONE 0

#define WD_RULE_UNIVERSAL 1

#define WD_RULE_LEVEL 2

#define WD_RULE_JACKKNIFE 3

#define WD_SCALING_UNIT 0

#define WD_SCALING_ZSCORE 1

#define WD_SCALING_NONE 2

typedef enum WdStatus {
  WD_STATUS_OK = 0,
  WD_STATUS_NULL_POINTER = 1,
  WD_STATUS_INVALID_ARGUMENT = 2,
  WD_STATUS_DATA = 3,
  WD_STATUS_NUMERIC = 4,
  WD_STATUS_IO = 5,
  WD_STATUS_PANIC = 6,
} WdStatus;

typedef struct WdBasis WdBasis;

/*
 A square-root density model with its coordinate transform.
 */
typedef struct WdModel WdModel;

/*
 Observations, row-major.
 */
typedef struct WdSample WdSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next `wd_*` call on this thread.
 */
const char *wd_last_error_message(void);

/*
 Copies `n * d` row-major values into a new sample.

 # Safety
 `data` must point to `n * d` readable doubles; `out` must be writable.
 */
enum WdStatus wd_sample_new(const double *data, size_t n, size_t d, struct WdSample **out);

/*
 # Safety
 `s` must come from [`wd_sample_new`] and not be freed twice; null is a no-op.
 */
void wd_sample_free(struct WdSample *s);

/*
 Basis by name: `haar`, `db2`..`db10`, `sym2`..`sym10`.

 # Safety
 `family` must be a NUL-terminated string; `out` must be writable.
 */
enum WdStatus wd_basis_new(const char *family, struct WdBasis **out);

/*
 # Safety
 `b` must come from [`wd_basis_new`] and not be freed twice; null is a no-op.
 */
void wd_basis_free(struct WdBasis *b);

/*
 Resolution `J-hat` maximizing the chosen leave-one-out criterion over the
 default candidate range, after applying `scaling` to the sample.

 # Safety
 Handles must be valid; `j_out` must be writable.
 */
enum WdStatus wd_select_resolution(const struct WdSample *s,
                                   const struct WdBasis *b,
                                   int32_t criterion_code,
                                   int32_t scaling_code,
                                   int32_t *j_out);

/*
 Fits levels `j0..=j` in the sample's own coordinates, without selection
 or thresholding. With `normalize` nonzero the model is scaled to unit norm.

 # Safety
 Handles must be valid; `out` must be writable.
 */
enum WdStatus wd_fit(const struct WdSample *s,
                     const struct WdBasis *b,
                     int32_t j0,
                     int32_t j,
                     int32_t normalize,
                     struct WdModel **out);

/*
 Full pipeline: scaling, resolution selection, `j0 = J-hat - delta_j`,
 optional thresholding, normalization.

 # Safety
 Handles must be valid; `out` must be writable.
 */
enum WdStatus wd_fit_auto(const struct WdSample *s,
                          const struct WdBasis *b,
                          int32_t delta_j,
                          int32_t criterion_code,
                          int32_t rule_code,
                          int32_t scaling_code,
                          struct WdModel **out);

/*
 Density values at `m` points of the model's dimension, row-major.

 # Safety
 `x` must hold `m * dim` doubles and `out` room for `m` doubles.
 */
enum WdStatus wd_model_eval(const struct WdModel *model, const double *x, size_t m, double *out);

/*
 # Safety
 `model` must be valid; `out` must be writable.
 */
enum WdStatus wd_model_dim(const struct WdModel *model, size_t *out);

/*
 Number of nonzero coefficients (the length of the JSON coefficient list).

 # Safety
 `model` must be valid; `out` must be writable.
 */
enum WdStatus wd_model_coefficient_count(const struct WdModel *model, size_t *out);

/*
 Serializes the model; free the string with [`wd_string_free`].

 # Safety
 `model` must be valid; `out` must be writable.
 */
enum WdStatus wd_model_to_json(const struct WdModel *model, char **out);

/*
 # Safety
 `s` must come from this library and not be freed twice; null is a no-op.
 */
void wd_string_free(char *s);

/*
 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WdStatus wd_model_from_json(const char *json, struct WdModel **out);

/*
 # Safety
 `m` must come from this library and not be freed twice; null is a no-op.
 */
void wd_model_free(struct WdModel *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVEDENS_H */
