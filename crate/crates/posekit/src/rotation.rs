//! Rotation representations and conversions between them.
//!
//! A rotation can be carried as an orthonormal matrix, an axis-angle
//! vector, a unit quaternion, or a viewpoint triple (azimuth, elevation,
//! camera tilt). Conversions round-trip, and three geodesic distances
//! (matrix-log, trace, quaternion) agree on the same pair of rotations.
//!
//! Conventions: angles are radians everywhere in this module. Axis-angle
//! vectors are canonical when their norm lies in `[0, pi)`. Quaternions
//! are stored scalar-first and canonicalized to a non-negative scalar
//! part, which picks one representative of the `q == -q` double cover.

use nalgebra::{Matrix3, Vector3, Vector4};
use std::f64::consts::PI;

/// How far `R^T R` may deviate from the identity (max absolute entry)
/// before a matrix is rejected as not a rotation.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Canonical axis-angle norms live in `[0, pi)`; a half-turn input is
/// clamped this far below pi so the open bound holds.
const ANGLE_CLAMP: f64 = 1e-9;

/// Below this sine of the elevation, azimuth and tilt are no longer
/// separately recoverable from a matrix and a convention takes over.
const GIMBAL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RotationError {
    #[error("axis-angle norm {norm} is outside the canonical range [0, pi)")]
    AngleOutOfRange { norm: f64 },
    #[error("matrix is not a rotation (orthonormality defect {defect:.3e}, det {det:.6})")]
    NotARotation { defect: f64, det: f64 },
    #[error("quaternion norm {norm} is not 1 within {ORTHONORMALITY_TOL:.0e}")]
    NotUnitNorm { norm: f64 },
    #[error("value is not finite")]
    NotFinite,
}

/// Cross-product matrix: `skew(v) * w == v x w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    (a + PI).rem_euclid(2.0 * PI) - PI
}

// ---------------------------------------------------------------------------
// Axis-angle

/// Rotation as `theta * v` for a unit axis `v`, with `theta` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle(Vector3<f64>);

impl AxisAngle {
    pub fn new(y: Vector3<f64>) -> Result<Self, RotationError> {
        if !y.iter().all(|v| v.is_finite()) {
            return Err(RotationError::NotFinite);
        }
        let norm = y.norm();
        if norm >= PI {
            return Err(RotationError::AngleOutOfRange { norm });
        }
        Ok(AxisAngle(y))
    }

    pub fn zero() -> Self {
        AxisAngle(Vector3::zeros())
    }

    /// The rotation vector `theta * v`.
    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Unit axis, or zero for the identity rotation.
    pub fn axis(&self) -> Vector3<f64> {
        let n = self.0.norm();
        if n > 0.0 {
            self.0 / n
        } else {
            Vector3::zeros()
        }
    }

    /// Rodrigues' formula `I + sin(t) K + (1 - cos(t)) K^2`.
    pub fn to_matrix(&self) -> RotationMatrix {
        RotationMatrix::exp(&self.0)
    }

    /// `(cos(t/2), sin(t/2) v)`; canonical since `t/2 < pi/2`.
    pub fn to_quat(&self) -> UnitQuat {
        let theta = self.angle();
        // sin(t/2)/t stays finite as t -> 0 (limit 1/2).
        let scale = if theta < 1e-12 {
            0.5
        } else {
            (0.5 * theta).sin() / theta
        };
        UnitQuat::from_parts_normalized((0.5 * theta).cos(), self.0 * scale)
    }
}

// ---------------------------------------------------------------------------
// Rotation matrix

/// Orthonormal 3x3 matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    /// Validates orthonormality and orientation before wrapping.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, RotationError> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(RotationError::NotFinite);
        }
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if defect > ORTHONORMALITY_TOL || det <= 0.0 {
            return Err(RotationError::NotARotation { defect, det });
        }
        Ok(RotationMatrix(m))
    }

    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Exponential of an arbitrary finite rotation vector.
    ///
    /// Unlike [`AxisAngle`], the input is not required to be canonical:
    /// norms at or beyond pi are fine, which is what the loss side needs
    /// when a bounded activation can reach `pi * sqrt(3)`.
    pub fn exp(y: &Vector3<f64>) -> Self {
        let theta2 = y.norm_squared();
        let theta = theta2.sqrt();
        let (a, b) = if theta < 1e-12 {
            (1.0, 0.5)
        } else {
            // 2 sin^2(t/2) avoids the cancellation in 1 - cos(t).
            let half_sin = (0.5 * theta).sin();
            (theta.sin() / theta, 2.0 * half_sin * half_sin / theta2)
        };
        let k = skew(y);
        RotationMatrix(Matrix3::identity() + k * a + k * k * b)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    /// Same as the transpose for an orthonormal matrix.
    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// Principal logarithm as a canonical axis-angle vector.
    ///
    /// The rotation angle comes from `atan2` of the skew and trace parts.
    /// Near a half turn the skew part vanishes, so the axis is recovered
    /// from the diagonal of the symmetric part instead, signed so that its
    /// largest-magnitude component is positive; a half-turn angle is
    /// clamped just below pi to stay in the canonical range.
    pub fn to_axis_angle(&self) -> AxisAngle {
        let m = &self.0;
        let w = Vector3::new(
            m[(2, 1)] - m[(1, 2)],
            m[(0, 2)] - m[(2, 0)],
            m[(1, 0)] - m[(0, 1)],
        );
        let sin_theta = 0.5 * w.norm();
        let cos_theta = (0.5 * (m.trace() - 1.0)).clamp(-1.0, 1.0);
        let theta = sin_theta.atan2(cos_theta);

        if theta < 1e-10 {
            return AxisAngle(w * 0.5);
        }
        if theta > PI - 1e-8 {
            let sym = (m + m.transpose()) * 0.5;
            let one_minus_c = 1.0 - cos_theta;
            let diag = sym.diagonal();
            let k = if diag.x >= diag.y && diag.x >= diag.z {
                0
            } else if diag.y >= diag.z {
                1
            } else {
                2
            };
            let mut v = Vector3::zeros();
            v[k] = ((diag[k] - cos_theta) / one_minus_c).max(0.0).sqrt();
            for i in 0..3 {
                if i != k {
                    v[i] = sym[(i, k)] / (one_minus_c * v[k]);
                }
            }
            v /= v.norm();
            return AxisAngle(v * theta.min(PI - ANGLE_CLAMP));
        }
        AxisAngle(w * (0.5 * theta / sin_theta))
    }

    /// Scalar-first unit quaternion on the canonical hemisphere.
    pub fn to_quat(&self) -> UnitQuat {
        let m = &self.0;
        let trace = m.trace();
        let (c, s) = if trace > 0.0 {
            let r = (1.0 + trace).sqrt();
            let inv = 0.5 / r;
            (
                0.5 * r,
                Vector3::new(
                    (m[(2, 1)] - m[(1, 2)]) * inv,
                    (m[(0, 2)] - m[(2, 0)]) * inv,
                    (m[(1, 0)] - m[(0, 1)]) * inv,
                ),
            )
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let r = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt();
            let inv = 0.5 / r;
            (
                (m[(2, 1)] - m[(1, 2)]) * inv,
                Vector3::new(
                    0.5 * r,
                    (m[(0, 1)] + m[(1, 0)]) * inv,
                    (m[(0, 2)] + m[(2, 0)]) * inv,
                ),
            )
        } else if m[(1, 1)] >= m[(2, 2)] {
            let r = (1.0 - m[(0, 0)] + m[(1, 1)] - m[(2, 2)]).sqrt();
            let inv = 0.5 / r;
            (
                (m[(0, 2)] - m[(2, 0)]) * inv,
                Vector3::new(
                    (m[(0, 1)] + m[(1, 0)]) * inv,
                    0.5 * r,
                    (m[(1, 2)] + m[(2, 1)]) * inv,
                ),
            )
        } else {
            let r = (1.0 - m[(0, 0)] - m[(1, 1)] + m[(2, 2)]).sqrt();
            let inv = 0.5 / r;
            (
                (m[(1, 0)] - m[(0, 1)]) * inv,
                Vector3::new(
                    (m[(0, 2)] + m[(2, 0)]) * inv,
                    (m[(1, 2)] + m[(2, 1)]) * inv,
                    0.5 * r,
                ),
            )
        };
        UnitQuat::from_parts_normalized(c, s).canonicalized()
    }

    /// Factors into viewpoint angles, `R = Rz(ct) Rx(el) Rz(az)`.
    ///
    /// The factorization degenerates when `sin(el)` vanishes (elevation
    /// near 0 or a half turn): only `az` and `ct` jointly determine the
    /// rotation there, so azimuth is set to 0 and the whole coupled angle
    /// lands in the tilt. The returned flag reports that case.
    pub fn to_viewpoint(&self) -> ViewpointDecomposition {
        let m = &self.0;
        let h = m[(2, 0)].hypot(m[(2, 1)]);
        let el = h.atan2(m[(2, 2)]);
        if h < GIMBAL_EPS {
            return ViewpointDecomposition {
                angles: Viewpoint::new(0.0, el, m[(1, 0)].atan2(m[(0, 0)])),
                gimbal_locked: true,
            };
        }
        let az = m[(2, 0)].atan2(m[(2, 1)]);
        let ct = m[(0, 2)].atan2(-m[(1, 2)]);
        ViewpointDecomposition {
            angles: Viewpoint::new(az, el, ct),
            gimbal_locked: false,
        }
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

// ---------------------------------------------------------------------------
// Unit quaternion

/// Scalar-first unit quaternion `(c, s1, s2, s3)`.
///
/// `q` and `-q` encode the same rotation; [`UnitQuat::canonicalized`]
/// selects the representative with `c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat(Vector4<f64>);

impl UnitQuat {
    pub fn new(c: f64, s: Vector3<f64>) -> Result<Self, RotationError> {
        let q = Vector4::new(c, s.x, s.y, s.z);
        if !q.iter().all(|v| v.is_finite()) {
            return Err(RotationError::NotFinite);
        }
        let norm = q.norm();
        if (norm - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(RotationError::NotUnitNorm { norm });
        }
        Ok(UnitQuat(q))
    }

    pub fn from_vector(q: Vector4<f64>) -> Result<Self, RotationError> {
        Self::new(q.x, Vector3::new(q.y, q.z, q.w))
    }

    /// Renormalizes parts that are already unit up to rounding.
    fn from_parts_normalized(c: f64, s: Vector3<f64>) -> Self {
        let q = Vector4::new(c, s.x, s.y, s.z);
        UnitQuat(q / q.norm())
    }

    pub fn identity() -> Self {
        UnitQuat(Vector4::new(1.0, 0.0, 0.0, 0.0))
    }

    /// Scalar part `c = cos(theta/2)`.
    pub fn scalar(&self) -> f64 {
        self.0.x
    }

    /// Vector part `s = sin(theta/2) v`.
    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.0.y, self.0.z, self.0.w)
    }

    /// The four components `(c, s1, s2, s3)`.
    pub fn as_vector(&self) -> Vector4<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitQuat) -> f64 {
        self.0.dot(&other.0)
    }

    /// The double-cover representative with `c >= 0`. An exactly zero
    /// scalar part is disambiguated by making the first nonzero vector
    /// component positive.
    pub fn canonicalized(&self) -> UnitQuat {
        let c = self.0.x;
        if c > 0.0 {
            return *self;
        }
        if c < 0.0 {
            return UnitQuat(-self.0);
        }
        for i in 1..4 {
            if self.0[i] != 0.0 {
                return if self.0[i] > 0.0 {
                    *self
                } else {
                    UnitQuat(-self.0)
                };
            }
        }
        *self
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonicalized()
    }

    /// Canonical axis-angle of the encoded rotation; `q` and `-q` agree.
    pub fn to_axis_angle(&self) -> AxisAngle {
        let q = self.canonicalized();
        let s = q.vector();
        let s_norm = s.norm();
        let theta = 2.0 * s_norm.atan2(q.scalar());
        if s_norm < 1e-12 {
            // theta/|s| -> 2/c as s -> 0.
            return AxisAngle(s * (2.0 / q.scalar().max(1e-12)));
        }
        AxisAngle(s * (theta.min(PI - ANGLE_CLAMP) / s_norm))
    }

    pub fn to_matrix(&self) -> RotationMatrix {
        let c = self.0.x;
        let (s1, s2, s3) = (self.0.y, self.0.z, self.0.w);
        RotationMatrix(Matrix3::new(
            1.0 - 2.0 * (s2 * s2 + s3 * s3),
            2.0 * (s1 * s2 - c * s3),
            2.0 * (s1 * s3 + c * s2),
            2.0 * (s1 * s2 + c * s3),
            1.0 - 2.0 * (s1 * s1 + s3 * s3),
            2.0 * (s2 * s3 - c * s1),
            2.0 * (s1 * s3 - c * s2),
            2.0 * (s2 * s3 + c * s1),
            1.0 - 2.0 * (s1 * s1 + s2 * s2),
        ))
    }
}

impl std::ops::Neg for UnitQuat {
    type Output = UnitQuat;

    fn neg(self) -> UnitQuat {
        UnitQuat(-self.0)
    }
}

// ---------------------------------------------------------------------------
// Viewpoint angles

/// Azimuth, elevation, camera tilt (radians), composing as
/// `R = Rz(ct) Rx(el) Rz(az)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub az: f64,
    pub el: f64,
    pub ct: f64,
}

impl Viewpoint {
    /// Wraps all three angles into `[-pi, pi)`.
    pub fn new(az: f64, el: f64, ct: f64) -> Self {
        Viewpoint {
            az: wrap_angle(az),
            el: wrap_angle(el),
            ct: wrap_angle(ct),
        }
    }

    pub fn from_degrees(az: f64, el: f64, ct: f64) -> Self {
        Viewpoint::new(az.to_radians(), el.to_radians(), ct.to_radians())
    }

    pub fn to_degrees(self) -> (f64, f64, f64) {
        (self.az.to_degrees(), self.el.to_degrees(), self.ct.to_degrees())
    }

    pub fn to_matrix(self) -> RotationMatrix {
        RotationMatrix(rot_z(self.ct) * rot_x(self.el) * rot_z(self.az))
    }

    /// The mirrored viewpoint `(-az, el, -ct)`; an involution.
    pub fn flipped(self) -> Viewpoint {
        Viewpoint::new(-self.az, self.el, -self.ct)
    }
}

/// Result of factoring a matrix into viewpoint angles.
#[derive(Debug, Clone, Copy)]
pub struct ViewpointDecomposition {
    pub angles: Viewpoint,
    /// True when `sin(el)` was too small to separate azimuth from tilt;
    /// `az` is 0 by convention in that case.
    pub gimbal_locked: bool,
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

// ---------------------------------------------------------------------------
// Geodesic distances

/// Geodesic distance via the matrix logarithm of the relative rotation:
/// `||log(R1 R2^T)||_F / sqrt(2)`, which is the relative rotation angle.
pub fn geodesic_dist_mat(r1: &RotationMatrix, r2: &RotationMatrix) -> f64 {
    (*r1 * r2.transpose()).to_axis_angle().angle()
}

/// Geodesic distance between two axis-angle rotations via the trace:
/// `acos((tr(R1^T R2) - 1) / 2)` with the argument clamped to `[-1, 1]`.
pub fn geodesic_dist_aa(y1: &AxisAngle, y2: &AxisAngle) -> f64 {
    let r1 = y1.to_matrix();
    let r2 = y2.to_matrix();
    let u = 0.5 * ((r1.matrix().transpose() * r2.matrix()).trace() - 1.0);
    u.clamp(-1.0, 1.0).acos()
}

/// Geodesic distance between unit quaternions, `2 acos(|<q1, q2>|)`,
/// evaluated through the shorter chord as `4 asin(min(|q1 - q2|,
/// |q1 + q2|) / 2)`. The two forms agree in exact arithmetic; the chord
/// stays accurate where the inner product saturates near 1, and taking
/// the shorter of the two chords makes it insensitive to the double
/// cover, identically zero at `q2 = -q1`.
pub fn geodesic_dist_quat(q1: &UnitQuat, q2: &UnitQuat) -> f64 {
    let a = q1.as_vector();
    let b = q2.as_vector();
    let chord = (a - b).norm().min((a + b).norm());
    4.0 * (0.5 * chord).min(1.0).asin()
}
