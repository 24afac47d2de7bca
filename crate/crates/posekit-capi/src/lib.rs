//! C ABI over the posekit core: rotation conversions and distances on
//! raw arrays, geodesic losses with gradients, and an opaque handle for
//! trained model banks. Every function returns a [`PkStatus`]; results
//! leave through out-pointers the caller owns.
//!
//! Conventions, also spelled out in the generated header: matrices are
//! 9 doubles in row-major order, axis-angle vectors 3 doubles,
//! quaternions 4 doubles with the scalar part first. Angles are radians.
//!
//! The safety contract is uniform across the API: every pointer must be
//! null or valid for the access its parameter documents, and arrays must
//! have the documented length. Null pointers are caught and reported.

#![allow(clippy::missing_safety_doc)]

use std::ffi::{c_char, CStr};

use nalgebra::{DVector, Matrix3, Vector3, Vector4};
use posekit::loss::{gve_loss_aa, gve_loss_quat, LossValue};
use posekit::network::{CategoryBank, NetworkError};
use posekit::rotation::{
    geodesic_dist_aa, geodesic_dist_mat, geodesic_dist_quat, RotationMatrix, UnitQuat,
    Viewpoint,
};

/// Outcome of a call. Anything but `PK_STATUS_OK` leaves the out
/// parameters untouched.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An input failed validation: a non-finite value, a matrix that is
    /// not a rotation, a quaternion off the unit sphere, a malformed
    /// checkpoint, or a dimension mismatch.
    InvalidArgument = 2,
    /// The computation hit a numeric degeneracy.
    NumericError = 3,
    /// A file could not be read.
    IoError = 4,
    /// The model holds no network for the requested category.
    UnknownCategory = 5,
}

/// Static description of a status code; never null.
#[no_mangle]
pub extern "C" fn pk_status_message(status: PkStatus) -> *const c_char {
    let msg: &CStr = match status {
        PkStatus::Ok => c"ok",
        PkStatus::NullPointer => c"null pointer argument",
        PkStatus::InvalidArgument => c"invalid argument",
        PkStatus::NumericError => c"numeric error",
        PkStatus::IoError => c"i/o error",
        PkStatus::UnknownCategory => c"unknown category",
    };
    msg.as_ptr()
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() { return PkStatus::NullPointer; })+
    };
}

unsafe fn read_vec3(p: *const f64) -> Option<Vector3<f64>> {
    let s = std::slice::from_raw_parts(p, 3);
    s.iter().all(|v| v.is_finite()).then(|| Vector3::new(s[0], s[1], s[2]))
}

unsafe fn read_vec4(p: *const f64) -> Option<Vector4<f64>> {
    let s = std::slice::from_raw_parts(p, 4);
    s.iter()
        .all(|v| v.is_finite())
        .then(|| Vector4::new(s[0], s[1], s[2], s[3]))
}

unsafe fn read_matrix(p: *const f64) -> Option<RotationMatrix> {
    let s = std::slice::from_raw_parts(p, 9);
    if !s.iter().all(|v| v.is_finite()) {
        return None;
    }
    RotationMatrix::from_matrix(Matrix3::from_row_slice(s)).ok()
}

unsafe fn read_quat(p: *const f64) -> Option<UnitQuat> {
    let q = read_vec4(p)?;
    UnitQuat::new(q[0], Vector3::new(q[1], q[2], q[3])).ok()
}

unsafe fn write_matrix(out: *mut f64, r: &RotationMatrix) {
    let m = r.matrix();
    let s = std::slice::from_raw_parts_mut(out, 9);
    for i in 0..3 {
        for j in 0..3 {
            s[i * 3 + j] = m[(i, j)];
        }
    }
}

unsafe fn write_slice(out: *mut f64, values: &[f64]) {
    std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(values);
}

// ---------------------------------------------------------------------------
// Rotation conversions

/// Exponential map: `y` points to 3 doubles (any finite rotation
/// vector), `m_out` to 9 doubles receiving the row-major matrix.
#[no_mangle]
pub unsafe extern "C" fn pk_axis_angle_to_matrix(y: *const f64, m_out: *mut f64) -> PkStatus {
    non_null!(y, m_out);
    let Some(v) = read_vec3(y) else {
        return PkStatus::InvalidArgument;
    };
    write_matrix(m_out, &RotationMatrix::exp(&v));
    PkStatus::Ok
}

/// Logarithm map: `m` points to 9 row-major doubles forming a rotation,
/// `y_out` to 3 doubles receiving the canonical axis-angle vector with
/// angle in `[0, pi]`.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_to_axis_angle(m: *const f64, y_out: *mut f64) -> PkStatus {
    non_null!(m, y_out);
    let Some(r) = read_matrix(m) else {
        return PkStatus::InvalidArgument;
    };
    write_slice(y_out, r.to_axis_angle().vector().as_slice());
    PkStatus::Ok
}

/// `y` points to 3 doubles, `q_out` to 4 receiving the canonical unit
/// quaternion (scalar first, non-negative).
#[no_mangle]
pub unsafe extern "C" fn pk_axis_angle_to_quat(y: *const f64, q_out: *mut f64) -> PkStatus {
    non_null!(y, q_out);
    let Some(v) = read_vec3(y) else {
        return PkStatus::InvalidArgument;
    };
    write_slice(q_out, RotationMatrix::exp(&v).to_quat().as_vector().as_slice());
    PkStatus::Ok
}

/// `q` points to 4 doubles forming a unit quaternion (scalar first),
/// `y_out` to 3 doubles receiving the axis-angle vector.
#[no_mangle]
pub unsafe extern "C" fn pk_quat_to_axis_angle(q: *const f64, y_out: *mut f64) -> PkStatus {
    non_null!(q, y_out);
    let Some(quat) = read_quat(q) else {
        return PkStatus::InvalidArgument;
    };
    write_slice(y_out, quat.to_axis_angle().vector().as_slice());
    PkStatus::Ok
}

/// `q` points to 4 doubles forming a unit quaternion, `m_out` to 9
/// doubles receiving the row-major matrix.
#[no_mangle]
pub unsafe extern "C" fn pk_quat_to_matrix(q: *const f64, m_out: *mut f64) -> PkStatus {
    non_null!(q, m_out);
    let Some(quat) = read_quat(q) else {
        return PkStatus::InvalidArgument;
    };
    write_matrix(m_out, &quat.to_matrix());
    PkStatus::Ok
}

/// `m` points to 9 row-major doubles forming a rotation, `q_out` to 4
/// doubles receiving the canonical unit quaternion.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_to_quat(m: *const f64, q_out: *mut f64) -> PkStatus {
    non_null!(m, q_out);
    let Some(r) = read_matrix(m) else {
        return PkStatus::InvalidArgument;
    };
    write_slice(q_out, r.to_quat().as_vector().as_slice());
    PkStatus::Ok
}

/// Builds `Rz(ct) Rx(el) Rz(az)` from azimuth, elevation, and camera
/// tilt in radians; `m_out` points to 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn pk_viewpoint_to_matrix(
    az: f64,
    el: f64,
    ct: f64,
    m_out: *mut f64,
) -> PkStatus {
    non_null!(m_out);
    if !(az.is_finite() && el.is_finite() && ct.is_finite()) {
        return PkStatus::InvalidArgument;
    }
    write_matrix(m_out, &Viewpoint::new(az, el, ct).to_matrix());
    PkStatus::Ok
}

/// Factors a rotation into viewpoint angles. `angles_out` points to 3
/// doubles receiving azimuth, elevation, tilt; `gimbal_out` (optional,
/// may be null) receives 1 when the factorization is degenerate and the
/// azimuth/tilt split is a convention.
#[no_mangle]
pub unsafe extern "C" fn pk_matrix_to_viewpoint(
    m: *const f64,
    angles_out: *mut f64,
    gimbal_out: *mut u8,
) -> PkStatus {
    non_null!(m, angles_out);
    let Some(r) = read_matrix(m) else {
        return PkStatus::InvalidArgument;
    };
    let d = r.to_viewpoint();
    write_slice(angles_out, &[d.angles.az, d.angles.el, d.angles.ct]);
    if !gimbal_out.is_null() {
        *gimbal_out = d.gimbal_locked as u8;
    }
    PkStatus::Ok
}

// ---------------------------------------------------------------------------
// Distances

/// Geodesic angle between two rotations given as 9 row-major doubles
/// each; `dist_out` receives a value in `[0, pi]`.
#[no_mangle]
pub unsafe extern "C" fn pk_geodesic_dist_mat(
    a: *const f64,
    b: *const f64,
    dist_out: *mut f64,
) -> PkStatus {
    non_null!(a, b, dist_out);
    let (Some(ra), Some(rb)) = (read_matrix(a), read_matrix(b)) else {
        return PkStatus::InvalidArgument;
    };
    *dist_out = geodesic_dist_mat(&ra, &rb);
    PkStatus::Ok
}

/// Geodesic angle between two axis-angle vectors of 3 doubles each.
#[no_mangle]
pub unsafe extern "C" fn pk_geodesic_dist_aa(
    y1: *const f64,
    y2: *const f64,
    dist_out: *mut f64,
) -> PkStatus {
    non_null!(y1, y2, dist_out);
    let (Some(a), Some(b)) = (read_vec3(y1), read_vec3(y2)) else {
        return PkStatus::InvalidArgument;
    };
    *dist_out = geodesic_dist_aa(
        &RotationMatrix::exp(&a).to_axis_angle(),
        &RotationMatrix::exp(&b).to_axis_angle(),
    );
    PkStatus::Ok
}

/// Geodesic angle between two unit quaternions of 4 doubles each,
/// insensitive to the double cover.
#[no_mangle]
pub unsafe extern "C" fn pk_geodesic_dist_quat(
    q1: *const f64,
    q2: *const f64,
    dist_out: *mut f64,
) -> PkStatus {
    non_null!(q1, q2, dist_out);
    let (Some(a), Some(b)) = (read_quat(q1), read_quat(q2)) else {
        return PkStatus::InvalidArgument;
    };
    *dist_out = geodesic_dist_quat(&a, &b);
    PkStatus::Ok
}

// ---------------------------------------------------------------------------
// Losses

unsafe fn write_loss(
    lv: &LossValue,
    value_out: *mut f64,
    grad_out: *mut f64,
    near_singular_out: *mut u8,
) {
    *value_out = lv.value;
    write_slice(grad_out, lv.grad.as_slice());
    if !near_singular_out.is_null() {
        *near_singular_out = lv.near_singular as u8;
    }
}

/// Geodesic loss of a 3-double rotation-vector prediction against a
/// 9-double row-major target rotation. `grad_out` points to 3 doubles;
/// `near_singular_out` (optional, may be null) receives 1 when the
/// angle sits at an endpoint of acos where the gradient is unreliable.
#[no_mangle]
pub unsafe extern "C" fn pk_gve_loss_aa(
    pred: *const f64,
    target: *const f64,
    value_out: *mut f64,
    grad_out: *mut f64,
    near_singular_out: *mut u8,
) -> PkStatus {
    non_null!(pred, target, value_out, grad_out);
    let (Some(p), Some(t)) = (read_vec3(pred), read_matrix(target)) else {
        return PkStatus::InvalidArgument;
    };
    write_loss(&gve_loss_aa(&p, &t), value_out, grad_out, near_singular_out);
    PkStatus::Ok
}

/// Geodesic loss of a 4-double quaternion prediction (any finite
/// 4-vector; the loss reads it directly) against a 4-double unit target
/// quaternion. `grad_out` points to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn pk_gve_loss_quat(
    pred: *const f64,
    target: *const f64,
    value_out: *mut f64,
    grad_out: *mut f64,
    near_singular_out: *mut u8,
) -> PkStatus {
    non_null!(pred, target, value_out, grad_out);
    let (Some(p), Some(t)) = (read_vec4(pred), read_quat(target)) else {
        return PkStatus::InvalidArgument;
    };
    write_loss(&gve_loss_quat(&p, &t), value_out, grad_out, near_singular_out);
    PkStatus::Ok
}

// ---------------------------------------------------------------------------
// Model handles

/// Opaque handle to a loaded bank of per-category pose networks.
pub struct PkModel {
    bank: CategoryBank,
}

fn network_status(e: NetworkError) -> PkStatus {
    match e {
        NetworkError::Io(_) => PkStatus::IoError,
        NetworkError::UnknownCategory(_) => PkStatus::UnknownCategory,
        NetworkError::ZeroHeadInput { .. } => PkStatus::NumericError,
        NetworkError::DimensionMismatch { .. }
        | NetworkError::EmptyBatch
        | NetworkError::BadCheckpoint(_) => PkStatus::InvalidArgument,
    }
}

/// Loads a checkpoint from a NUL-terminated UTF-8 path into a new
/// handle. On success `model_out` receives a pointer that must be
/// released with [`pk_model_free`].
#[no_mangle]
pub unsafe extern "C" fn pk_model_load(
    path: *const c_char,
    model_out: *mut *mut PkModel,
) -> PkStatus {
    non_null!(path, model_out);
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return PkStatus::InvalidArgument;
    };
    match CategoryBank::load(std::path::Path::new(path)) {
        Ok(bank) => {
            *model_out = Box::into_raw(Box::new(PkModel { bank }));
            PkStatus::Ok
        }
        Err(e) => network_status(e),
    }
}

/// Releases a handle from [`pk_model_load`]. A null pointer is a no-op.
#[no_mangle]
pub unsafe extern "C" fn pk_model_free(model: *mut PkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature-vector length the model expects.
#[no_mangle]
pub unsafe extern "C" fn pk_model_input_dim(
    model: *const PkModel,
    dim_out: *mut usize,
) -> PkStatus {
    non_null!(model, dim_out);
    *dim_out = (*model).bank.input_dim;
    PkStatus::Ok
}

/// Number of categories the model holds networks for.
#[no_mangle]
pub unsafe extern "C" fn pk_model_category_count(
    model: *const PkModel,
    count_out: *mut usize,
) -> PkStatus {
    non_null!(model, count_out);
    *count_out = (*model).bank.categories().len();
    PkStatus::Ok
}

/// Copies up to `capacity` category ids, in ascending order, into
/// `categories_out`; `count_out` receives the total number available
/// regardless of how many fit.
#[no_mangle]
pub unsafe extern "C" fn pk_model_categories(
    model: *const PkModel,
    categories_out: *mut u32,
    capacity: usize,
    count_out: *mut usize,
) -> PkStatus {
    non_null!(model, count_out);
    let cats = (*model).bank.categories();
    *count_out = cats.len();
    if capacity > 0 {
        non_null!(categories_out);
        let n = capacity.min(cats.len());
        std::slice::from_raw_parts_mut(categories_out, n).copy_from_slice(&cats[..n]);
    }
    PkStatus::Ok
}

/// Runs the category's network on `features_len` doubles at `features`
/// and writes the predicted rotation as 9 row-major doubles. The length
/// must equal the model's input dimension.
#[no_mangle]
pub unsafe extern "C" fn pk_model_predict(
    model: *const PkModel,
    category: u32,
    features: *const f64,
    features_len: usize,
    m_out: *mut f64,
) -> PkStatus {
    non_null!(model, features, m_out);
    let bank = &(*model).bank;
    if features_len != bank.input_dim {
        return PkStatus::InvalidArgument;
    }
    let slice = std::slice::from_raw_parts(features, features_len);
    if !slice.iter().all(|v| v.is_finite()) {
        return PkStatus::InvalidArgument;
    }
    match bank.predict(category, &DVector::from_column_slice(slice)) {
        Ok(r) => {
            write_matrix(m_out, &r);
            PkStatus::Ok
        }
        Err(e) => network_status(e),
    }
}
