#ifndef POSEKIT_H
#define POSEKIT_H

/* Generated by cbindgen from posekit-capi; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call. Anything but `PK_STATUS_OK` leaves the out
// parameters untouched.
typedef enum PkStatus {
  PK_STATUS_OK = 0,
  // A required pointer argument was null.
  PK_STATUS_NULL_POINTER = 1,
  // An input failed validation: a non-finite value, a matrix that is
  // not a rotation, a quaternion off the unit sphere, a malformed
  // checkpoint, or a dimension mismatch.
  PK_STATUS_INVALID_ARGUMENT = 2,
  // The computation hit a numeric degeneracy.
  PK_STATUS_NUMERIC_ERROR = 3,
  // A file could not be read.
  PK_STATUS_IO_ERROR = 4,
  // The model holds no network for the requested category.
  PK_STATUS_UNKNOWN_CATEGORY = 5,
} PkStatus;

// Opaque handle to a loaded bank of per-category pose networks.
typedef struct PkModel PkModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code; never null.
const char *pk_status_message(enum PkStatus status);

// Exponential map: `y` points to 3 doubles (any finite rotation
// vector), `m_out` to 9 doubles receiving the row-major matrix.
enum PkStatus pk_axis_angle_to_matrix(const double *y, double *m_out);

// Logarithm map: `m` points to 9 row-major doubles forming a rotation,
// `y_out` to 3 doubles receiving the canonical axis-angle vector with
// angle in `[0, pi]`.
enum PkStatus pk_matrix_to_axis_angle(const double *m, double *y_out);

// `y` points to 3 doubles, `q_out` to 4 receiving the canonical unit
// quaternion (scalar first, non-negative).
enum PkStatus pk_axis_angle_to_quat(const double *y, double *q_out);

// `q` points to 4 doubles forming a unit quaternion (scalar first),
// `y_out` to 3 doubles receiving the axis-angle vector.
enum PkStatus pk_quat_to_axis_angle(const double *q, double *y_out);

// `q` points to 4 doubles forming a unit quaternion, `m_out` to 9
// doubles receiving the row-major matrix.
enum PkStatus pk_quat_to_matrix(const double *q, double *m_out);

// `m` points to 9 row-major doubles forming a rotation, `q_out` to 4
// doubles receiving the canonical unit quaternion.
enum PkStatus pk_matrix_to_quat(const double *m, double *q_out);

// Builds `Rz(ct) Rx(el) Rz(az)` from azimuth, elevation, and camera
// tilt in radians; `m_out` points to 9 doubles.
enum PkStatus pk_viewpoint_to_matrix(double az, double el, double ct, double *m_out);

// Factors a rotation into viewpoint angles. `angles_out` points to 3
// doubles receiving azimuth, elevation, tilt; `gimbal_out` (optional,
// may be null) receives 1 when the factorization is degenerate and the
// azimuth/tilt split is a convention.
enum PkStatus pk_matrix_to_viewpoint(const double *m, double *angles_out, uint8_t *gimbal_out);

// Geodesic angle between two rotations given as 9 row-major doubles
// each; `dist_out` receives a value in `[0, pi]`.
enum PkStatus pk_geodesic_dist_mat(const double *a, const double *b, double *dist_out);

// Geodesic angle between two axis-angle vectors of 3 doubles each.
enum PkStatus pk_geodesic_dist_aa(const double *y1, const double *y2, double *dist_out);

// Geodesic angle between two unit quaternions of 4 doubles each,
// insensitive to the double cover.
enum PkStatus pk_geodesic_dist_quat(const double *q1, const double *q2, double *dist_out);

// Geodesic loss of a 3-double rotation-vector prediction against a
// 9-double row-major target rotation. `grad_out` points to 3 doubles;
// `near_singular_out` (optional, may be null) receives 1 when the
// angle sits at an endpoint of acos where the gradient is unreliable.
enum PkStatus pk_gve_loss_aa(const double *pred,
                             const double *target,
                             double *value_out,
                             double *grad_out,
                             uint8_t *near_singular_out);

// Geodesic loss of a 4-double quaternion prediction (any finite
// 4-vector; the loss reads it directly) against a 4-double unit target
// quaternion. `grad_out` points to 4 doubles.
enum PkStatus pk_gve_loss_quat(const double *pred,
                               const double *target,
                               double *value_out,
                               double *grad_out,
                               uint8_t *near_singular_out);

// Loads a checkpoint from a NUL-terminated UTF-8 path into a new
// handle. On success `model_out` receives a pointer that must be
// released with [`pk_model_free`].
enum PkStatus pk_model_load(const char *path, struct PkModel **model_out);

// Releases a handle from [`pk_model_load`]. A null pointer is a no-op.
void pk_model_free(struct PkModel *model);

// Feature-vector length the model expects.
enum PkStatus pk_model_input_dim(const struct PkModel *model, size_t *dim_out);

// Number of categories the model holds networks for.
enum PkStatus pk_model_category_count(const struct PkModel *model, size_t *count_out);

// Copies up to `capacity` category ids, in ascending order, into
// `categories_out`; `count_out` receives the total number available
// regardless of how many fit.
enum PkStatus pk_model_categories(const struct PkModel *model,
                                  uint32_t *categories_out,
                                  size_t capacity,
                                  size_t *count_out);

// Runs the category's network on `features_len` doubles at `features`
// and writes the predicted rotation as 9 row-major doubles. The length
// must equal the model's input dimension.
enum PkStatus pk_model_predict(const struct PkModel *model,
                               uint32_t category,
                               const double *features,
                               size_t features_len,
                               double *m_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSEKIT_H */
