//! Differentiable objectives and the constrained activations feeding them.
//!
//! Two regression targets are supported: a plain mean squared error used
//! to warm up training, and geodesic viewpoint error, the actual quantity
//! reported at evaluation time, in axis-angle and quaternion forms. Each
//! loss returns its value together with an analytic gradient with respect
//! to the prediction, so the network side only has to chain its own head
//! jacobian onto it.

use crate::rotation::{RotationMatrix, UnitQuat};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use std::f64::consts::PI;

/// Inputs this close to (or past) zero norm cannot be normalized.
pub const NORMALIZE_MIN_NORM: f64 = 1e-12;

/// The acos derivative `1/sqrt(1 - u^2)` blows up at |u| = 1; the
/// denominator is floored at sqrt of this, capping the slope at 1e6.
const ACOS_DENOM_FLOOR: f64 = 1e-12;

/// Loss values this close to 0 or pi sit at the acos singularity, where
/// the clipped gradient is no longer the exact derivative.
const SINGULAR_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("cannot normalize a vector of norm {norm:.3e}")]
    NearZeroNorm { norm: f64 },
    #[error("prediction has {pred} components but target has {target}")]
    DimensionMismatch { pred: usize, target: usize },
}

/// A scalar loss with its gradient in the prediction's coordinates.
#[derive(Debug, Clone)]
pub struct LossValue {
    pub value: f64,
    pub grad: DVector<f64>,
    /// True when the value sits within [`SINGULAR_MARGIN`] of an acos
    /// endpoint, meaning `grad` was computed with the clipped slope.
    pub near_singular: bool,
}

/// Componentwise `pi * tanh`, bounding each output to `(-pi, pi)`.
///
/// Returns the activation and the diagonal of its jacobian,
/// `pi * (1 - tanh^2)`. The bound is strict in exact arithmetic; in f64
/// a saturated tanh rounds to exactly 1 around |x| = 19, so the output
/// can attain the endpoints. Downstream consumers map through the
/// unrestricted exponential, which is fine with that.
pub fn pi_tanh(x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let t = x.map(f64::tanh);
    let jac = t.map(|v| PI * (1.0 - v * v));
    (t * PI, jac)
}

/// Projection onto the unit sphere with its full jacobian
/// `(I - u u^T) / ||x||` for `u = x / ||x||`.
pub fn l2_normalize(x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>), LossError> {
    let norm = x.norm();
    if norm <= NORMALIZE_MIN_NORM {
        return Err(LossError::NearZeroNorm { norm });
    }
    let unit = x / norm;
    let jac = (DMatrix::identity(x.len(), x.len()) - &unit * unit.transpose()) / norm;
    Ok((unit, jac))
}

/// Mean squared error over components, gradient `2 (pred - target) / n`.
pub fn mse_loss(pred: &DVector<f64>, target: &DVector<f64>) -> Result<LossValue, LossError> {
    if pred.len() != target.len() {
        return Err(LossError::DimensionMismatch {
            pred: pred.len(),
            target: target.len(),
        });
    }
    let diff = pred - target;
    let n = pred.len() as f64;
    Ok(LossValue {
        value: diff.norm_squared() / n,
        grad: diff * (2.0 / n),
        near_singular: false,
    })
}

/// Geodesic angle between the exponential of a predicted rotation vector
/// and a target rotation, with the analytic gradient in the vector.
///
/// The prediction is mapped through the unrestricted exponential, so any
/// finite vector is acceptable; a `pi * tanh` head can reach norms up to
/// `pi * sqrt(3)` and still lands on a valid rotation. The gradient
/// chains the acos derivative through the exponential's left jacobian.
pub fn gve_loss_aa(pred: &Vector3<f64>, target: &RotationMatrix) -> LossValue {
    let r_hat = RotationMatrix::exp(pred);
    let u = 0.5 * ((target.matrix().transpose() * r_hat.matrix()).trace() - 1.0);
    let u = u.clamp(-1.0, 1.0);
    let value = u.acos();

    let b = r_hat.matrix() * target.matrix().transpose();
    let g = antisym_vee(&b);
    let denom = (1.0 - u * u).max(ACOS_DENOM_FLOOR).sqrt();
    let grad = left_jacobian(pred).transpose() * g * (0.5 / denom);

    LossValue {
        value,
        grad: DVector::from_column_slice(grad.as_slice()),
        near_singular: !(SINGULAR_MARGIN..=PI - SINGULAR_MARGIN).contains(&value),
    }
}

/// Geodesic angle between quaternions, `2 acos(|<pred, target>|)`.
///
/// The gradient treats `pred` as a free 4-vector; composing it with the
/// [`l2_normalize`] jacobian yields the gradient in a network's raw head
/// output. The absolute value's subgradient at an exactly orthogonal
/// pair is taken as +1.
pub fn gve_loss_quat(pred: &Vector4<f64>, target: &UnitQuat) -> LossValue {
    let u_raw = pred.dot(&target.as_vector());
    let u = u_raw.abs().min(1.0);
    let value = 2.0 * u.acos();

    let denom = (1.0 - u * u).max(ACOS_DENOM_FLOOR).sqrt();
    let sign = if u_raw < 0.0 { -1.0 } else { 1.0 };
    let grad = target.as_vector() * (-2.0 * sign / denom);

    LossValue {
        value,
        grad: DVector::from_column_slice(grad.as_slice()),
        near_singular: !(SINGULAR_MARGIN..=PI - SINGULAR_MARGIN).contains(&value),
    }
}

/// Vector of the antisymmetric part: `vee(b - b^T)`.
fn antisym_vee(b: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        b[(2, 1)] - b[(1, 2)],
        b[(0, 2)] - b[(2, 0)],
        b[(1, 0)] - b[(0, 1)],
    )
}

/// Left jacobian of the rotation exponential,
/// `I + (1-cos t)/t^2 K + (t - sin t)/t^3 K^2` for `K = skew(y)`.
fn left_jacobian(y: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = y.norm_squared();
    let theta = theta2.sqrt();
    let (b, c) = if theta < 1e-4 {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        let half_sin = (0.5 * theta).sin();
        (
            2.0 * half_sin * half_sin / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    let k = crate::rotation::skew(y);
    Matrix3::identity() + k * b + k * k * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::{geodesic_dist_mat, AxisAngle};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pi_tanh_stays_inside_the_cube() {
        // Strictly inside while f64 can still distinguish tanh from 1;
        // fully saturated inputs land exactly on the closed boundary.
        let (y, jac) = pi_tanh(&DVector::from_vec(vec![-18.0, -2.0, 0.0, 2.0, 18.0]));
        for v in y.iter() {
            assert!(v.abs() < PI);
        }
        assert_abs_diff_eq!(y[2], 0.0);
        assert_abs_diff_eq!(jac[2], PI, epsilon = 1e-15);

        let (saturated, jac_sat) = pi_tanh(&DVector::from_vec(vec![1e6, -1e6]));
        assert!(saturated.iter().all(|v| v.abs() <= PI));
        assert!(jac_sat.iter().all(|v| *v >= 0.0 && *v < 1e-12));
    }

    #[test]
    fn pi_tanh_composed_with_exp_is_always_a_rotation() {
        // Even a saturated head output (norm approaching pi * sqrt(3))
        // must land on an orthonormal matrix.
        for raw in [[50.0, -50.0, 50.0], [3.0, 3.0, -3.0], [0.1, -0.2, 0.3]] {
            let (y, _) = pi_tanh(&DVector::from_row_slice(&raw));
            let r = RotationMatrix::exp(&Vector3::new(y[0], y[1], y[2]));
            assert!(RotationMatrix::from_matrix(*r.matrix()).is_ok());
        }
    }

    #[test]
    fn l2_normalize_matches_hand_jacobian_in_2d() {
        let (unit, jac) = l2_normalize(&DVector::from_vec(vec![3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(unit[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(unit[1], 0.8, epsilon = 1e-15);
        // (I - u u^T) / 5 with u = (0.6, 0.8).
        assert_abs_diff_eq!(jac[(0, 0)], 0.64 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(0, 1)], -0.48 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(1, 1)], 0.36 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn l2_normalize_rejects_vanishing_input() {
        let err = l2_normalize(&DVector::from_vec(vec![0.0, 1e-13])).unwrap_err();
        assert!(matches!(err, LossError::NearZeroNorm { .. }));
    }

    #[test]
    fn mse_on_a_small_hand_example() {
        let loss = mse_loss(
            &DVector::from_vec(vec![1.0, 2.0]),
            &DVector::from_vec(vec![0.0, 0.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(loss.value, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(loss.grad[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(loss.grad[1], 2.0, epsilon = 1e-15);
        assert!(!loss.near_singular);
    }

    #[test]
    fn mse_rejects_mismatched_dimensions() {
        assert!(mse_loss(
            &DVector::from_vec(vec![1.0, 2.0, 3.0]),
            &DVector::from_vec(vec![0.0])
        )
        .is_err());
    }

    #[test]
    fn gve_aa_value_is_the_geodesic_distance() {
        let pred = Vector3::new(0.3, -0.5, 0.8);
        let target = AxisAngle::new(Vector3::new(-0.2, 0.4, 0.1))
            .unwrap()
            .to_matrix();
        let loss = gve_loss_aa(&pred, &target);
        let expected = geodesic_dist_mat(&RotationMatrix::exp(&pred), &target);
        assert_abs_diff_eq!(loss.value, expected, epsilon = 1e-12);
    }

    #[test]
    fn gve_aa_at_the_target_is_flagged_singular_with_zero_grad() {
        let y = Vector3::new(0.7, 0.1, -0.3);
        let loss = gve_loss_aa(&y, &RotationMatrix::exp(&y));
        assert!(loss.value < 1e-7);
        assert!(loss.near_singular);
        assert!(loss.grad.norm() < 1e-5);
    }

    #[test]
    fn gve_quat_ignores_the_double_cover() {
        let q = AxisAngle::new(Vector3::new(0.4, 0.2, -0.6)).unwrap().to_quat();
        let loss = gve_loss_quat(&(-q).as_vector(), &q);
        assert!(loss.value < 1e-7);
        assert!(loss.near_singular);
    }

    #[test]
    fn gve_quat_subgradient_sign_at_orthogonal_pair() {
        // <pred, target> == 0 exactly: the |.| subgradient is taken as +1,
        // so the gradient points along -2 * target (denominator 1).
        let target = UnitQuat::identity();
        let pred = Vector4::new(0.0, 1.0, 0.0, 0.0);
        let loss = gve_loss_quat(&pred, &target);
        assert_abs_diff_eq!(loss.value, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(loss.grad[0], -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(loss.grad[1], 0.0, epsilon = 1e-15);
    }
}
