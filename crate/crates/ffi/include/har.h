#ifndef HAR_FFI_H
#define HAR_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HarStatus {
  HAR_STATUS_OK = 0,
  HAR_STATUS_NULL_POINTER = 1,
  HAR_STATUS_INVALID_ARGUMENT = 2,
  HAR_STATUS_IO = 3,
  HAR_STATUS_FORMAT = 4,
  HAR_STATUS_SHAPE_MISMATCH = 5,
  HAR_STATUS_UNDEFINED = 6,
  HAR_STATUS_BUFFER_TOO_SMALL = 7,
  HAR_STATUS_PANIC = 99,
} HarStatus;

/**
 * Opaque trained model.
 */
typedef struct HarModel HarModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *har_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *har_version(void);

/**
 * Loads a model file written by `har train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HarStatus har_model_load(const char *path, struct HarModel **out);

/**
 * Loads a model from an in-memory JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HarStatus har_model_load_json(const char *json, struct HarModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from `har_model_load*` and not be used afterwards.
 */
void har_model_free(struct HarModel *model);

/**
 * Window length T expected by [`har_model_predict`].
 *
 * # Safety
 * `model` must be a live handle or NULL.
 */
size_t har_model_window_len(const struct HarModel *model);

/**
 * Number of feature columns F.
 *
 * # Safety
 * `model` must be a live handle or NULL.
 */
size_t har_model_feature_count(const struct HarModel *model);

/**
 * Number of output classes.
 *
 * # Safety
 * `model` must be a live handle or NULL.
 */
size_t har_model_class_count(const struct HarModel *model);

/**
 * Copies the name of feature column `index` into `buf` (NUL-terminated).
 * `required` receives the buffer size needed including the terminator.
 *
 * # Safety
 * `buf` must hold `buf_len` bytes; `required` may be NULL.
 */
enum HarStatus har_model_feature_name(const struct HarModel *model,
                                      size_t index,
                                      char *buf,
                                      size_t buf_len,
                                      size_t *required);

/**
 * Classifies one raw window of `len = T × F` values (row-major, columns in
 * the model's feature order). Writes the winning class index and its
 * probability; when `probs` is non-NULL it receives all class
 * probabilities and must hold `probs_len >= class count` values.
 *
 * # Safety
 * `values` must hold `len` doubles; output pointers must be valid or NULL
 * where allowed.
 */
enum HarStatus har_model_predict(const struct HarModel *model,
                                 const double *values,
                                 size_t len,
                                 size_t *out_class,
                                 double *out_probability,
                                 double *probs,
                                 size_t probs_len);

/**
 * Snake-case motion name of class `index`, or NULL when out of range.
 */
const char *har_motion_name(size_t index);

/**
 * Intrinsic Z-Y-X Euler angles `[roll, pitch, yaw]` (radians) to a unit
 * quaternion `[x, y, z, w]` with `w >= 0`.
 *
 * # Safety
 * `euler` must hold 3 doubles and `out` 4.
 */
enum HarStatus har_euler_to_quaternion(const double *euler, double *out);

/**
 * Quaternion inverse (conjugate over squared norm).
 *
 * # Safety
 * `q` and `out` must each hold 4 doubles.
 */
enum HarStatus har_quaternion_inverse(const double *q, double *out);

/**
 * Hamilton product `a ⊗ b` of `[x, y, z, w]` quaternions.
 *
 * # Safety
 * `a`, `b` and `out` must each hold 4 doubles.
 */
enum HarStatus har_hamilton_product(const double *a, const double *b, double *out);

/**
 * Gravity vector in the device frame for Euler angles and magnitude `g`.
 *
 * # Safety
 * `euler` and `out` must each hold 3 doubles.
 */
enum HarStatus har_gravity_from_euler(const double *euler, double g, double *out);

/**
 * Pearson correlation of two series of `len` values. Returns
 * `HAR_STATUS_UNDEFINED` when either series is constant.
 *
 * # Safety
 * `x` and `y` must each hold `len` doubles; `out` must be valid.
 */
enum HarStatus har_pearson(const double *x, const double *y, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAR_FFI_H */
