//! Shared numerical oracles for the integration test suites.
//!
//! Everything in here is deliberately independent of the library's own
//! rotation code: matrix exponentials and logarithms come from truncated
//! power series, gradients from central finite differences. When a test
//! compares the library against these, agreement is meaningful.

#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

/// Cross-product matrix of `v`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of skew: extracts the vector from an antisymmetric matrix.
pub fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Matrix exponential by scaling-and-squaring over a truncated power series.
///
/// The argument is scaled down by 2^k until its norm is below 0.5, the
/// series is summed to `terms`, and the result squared k times. With 30+
/// terms the truncation error is far below f64 resolution.
pub fn expm_series(a: &Matrix3<f64>, terms: usize) -> Matrix3<f64> {
    let norm = a.norm();
    let k = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(k as i32);

    let mut sum = Matrix3::identity();
    let mut term = Matrix3::identity();
    for j in 1..=terms {
        term = term * scaled / j as f64;
        sum += term;
    }
    for _ in 0..k {
        sum = sum * sum;
    }
    sum
}

/// Principal square root of a rotation matrix by Denman-Beavers iteration.
fn sqrtm_db(r: &Matrix3<f64>) -> Matrix3<f64> {
    let mut y = *r;
    let mut z = Matrix3::<f64>::identity();
    for _ in 0..200 {
        let yi = y.try_inverse().expect("iterate stayed invertible");
        let zi = z.try_inverse().expect("iterate stayed invertible");
        let y_next = (y + zi) * 0.5;
        let z_next = (z + yi) * 0.5;
        y = y_next;
        z = z_next;
        if (y * y - r).norm() < 1e-14 {
            break;
        }
    }
    y
}

/// Matrix logarithm of a rotation by inverse scaling-and-squaring over the
/// Mercator series log(I + X) = X - X^2/2 + X^3/3 - ...
///
/// Square roots are taken (Denman-Beavers) until the iterate is close to
/// the identity, where the plain series converges; the series sum is then
/// scaled back up. Valid on all rotations short of a half turn, where the
/// library's own closed-form branch logic never enters the picture.
pub fn logm_series(r: &Matrix3<f64>, terms: usize) -> Matrix3<f64> {
    let mut s = *r;
    let mut doublings = 0u32;
    while (s - Matrix3::identity()).norm() > 0.3 {
        s = sqrtm_db(&s);
        doublings += 1;
        assert!(doublings < 60, "square-root scaling failed to contract");
    }

    let x = s - Matrix3::identity();
    let mut sum = Matrix3::zeros();
    let mut power = Matrix3::identity();
    for j in 1..=terms {
        power *= x;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += power * (sign / j as f64);
    }
    sum * 2f64.powi(doublings as i32)
}

/// Random unit vector from three Gaussian draws.
pub fn random_unit_vector<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(rand_distr::StandardNormal),
            rng.sample::<f64, _>(rand_distr::StandardNormal),
            rng.sample::<f64, _>(rand_distr::StandardNormal),
        );
        if v.norm() > 1e-3 {
            return v / v.norm();
        }
    }
}

/// Random rotation-vector with angle uniform on [0, max_angle].
pub fn random_rotation_vector<R: Rng>(rng: &mut R, max_angle: f64) -> Vector3<f64> {
    random_unit_vector(rng) * rng.gen_range(0.0..=max_angle)
}

/// Random rotation matrix built through the series exponential, so its
/// provenance is independent of the library under test.
pub fn random_rotation_series<R: Rng>(rng: &mut R, max_angle: f64) -> Matrix3<f64> {
    expm_series(&skew(&random_rotation_vector(rng, max_angle)), 30)
}

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let hi = f(&probe);
        probe[i] = x[i] - step;
        let lo = f(&probe);
        probe[i] = x[i];
        grad[i] = (hi - lo) / (2.0 * step);
    }
    grad
}

/// Norm-wise relative error between an analytic and a reference gradient.
pub fn gradient_rel_error(analytic: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(analytic.len(), reference.len());
    let diff: f64 = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = analytic
        .iter()
        .chain(reference)
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1e-8);
    diff / scale
}

/// Frobenius distance between two matrices.
pub fn mat_dist(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).norm()
}
