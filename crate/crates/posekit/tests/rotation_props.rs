//! Oracle and invariant tests for the rotation representations.
//!
//! The reference values come from `common`: series matrix exponentials
//! and logarithms, so closed-form branches in the library are checked
//! against an implementation that shares none of their structure.

mod common;

use common::skew;
use common::*;
use nalgebra::Vector3;
use posekit::rotation::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn exp_matches_series_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let y = random_rotation_vector(&mut rng, PI - 1e-4);
        let ours = AxisAngle::new(y).unwrap().to_matrix();
        let oracle = expm_series(&skew(&y), 30);
        assert!(
            mat_dist(ours.matrix(), &oracle) < 1e-12,
            "exp disagrees with series at {y:?}"
        );
    }
}

#[test]
fn log_matches_series_logarithm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let m = random_rotation_series(&mut rng, PI - 1e-3);
        let r = RotationMatrix::from_matrix(m).unwrap();
        let ours = r.to_axis_angle().vector();
        let oracle = unskew(&logm_series(&m, 40));
        assert!(
            (ours - oracle).norm() < 1e-9,
            "log disagrees with series: {ours:?} vs {oracle:?}"
        );
    }
}

#[test]
fn trace_distance_matches_series_log_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let y1 = random_rotation_vector(&mut rng, PI - 1e-4);
        let y2 = random_rotation_vector(&mut rng, PI - 1e-4);
        let d = geodesic_dist_aa(
            &AxisAngle::new(y1).unwrap(),
            &AxisAngle::new(y2).unwrap(),
        );
        let rel = expm_series(&skew(&y1), 30) * expm_series(&skew(&y2), 30).transpose();
        let oracle = logm_series(&rel, 40).norm() / 2f64.sqrt();
        assert!(
            (d - oracle).abs() < 1e-6,
            "distance {d} vs oracle {oracle}"
        );
    }
}

#[test]
fn all_round_trips_hold_on_random_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..500 {
        let y = random_rotation_vector(&mut rng, PI - 1e-4);
        let aa = AxisAngle::new(y).unwrap();

        let via_mat = aa.to_matrix().to_axis_angle();
        assert!((via_mat.vector() - y).norm() < 1e-7);

        let via_quat = aa.to_quat().to_axis_angle();
        assert!((via_quat.vector() - y).norm() < 1e-7);

        let r = aa.to_matrix();
        let q = r.to_quat();
        assert!(q.scalar() >= 0.0);
        assert!(mat_dist(q.to_matrix().matrix(), r.matrix()) < 1e-7);
    }
}

#[test]
fn viewpoint_round_trips_in_angle_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..500 {
        use rand::Rng;
        let az = rng.gen_range(-3.1..3.1);
        let el = rng.gen_range(0.02..PI - 0.02);
        let ct = rng.gen_range(-3.1..3.1);
        let vp = Viewpoint::new(az, el, ct);
        let d = vp.to_matrix().to_viewpoint();
        assert!(!d.gimbal_locked);
        assert!((d.angles.az - az).abs() < 1e-9);
        assert!((d.angles.el - el).abs() < 1e-9);
        assert!((d.angles.ct - ct).abs() < 1e-9);
    }
}

#[test]
fn viewpoint_with_negative_elevation_reconstructs_the_rotation() {
    // Negative elevation has an equivalent triple with positive elevation
    // and both horizontal angles shifted by a half turn; factoring picks
    // that branch, and the rotation itself survives the round trip.
    let vp = Viewpoint::new(0.5, -0.7, 1.3);
    let d = vp.to_matrix().to_viewpoint();
    assert!(d.angles.el > 0.0);
    assert!(
        mat_dist(
            d.angles.to_matrix().matrix(),
            vp.to_matrix().matrix()
        ) < 1e-12
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_routes_agree(
        a in prop::array::uniform3(-1.0f64..1.0),
        b in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let y1 = Vector3::from(a) * 0.9;
        let y2 = Vector3::from(b) * 0.9;
        let aa1 = AxisAngle::new(y1).unwrap();
        let aa2 = AxisAngle::new(y2).unwrap();
        let d_aa = geodesic_dist_aa(&aa1, &aa2);
        let d_mat = geodesic_dist_mat(&aa1.to_matrix(), &aa2.to_matrix());
        let d_quat = geodesic_dist_quat(&aa1.to_quat(), &aa2.to_quat());
        prop_assert!((d_aa - d_mat).abs() < 1e-7);
        prop_assert!((d_aa - d_quat).abs() < 1e-7);
    }

    #[test]
    fn triangle_inequality_has_no_real_violation(
        a in prop::array::uniform3(-1.0f64..1.0),
        b in prop::array::uniform3(-1.0f64..1.0),
        c in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let r1 = AxisAngle::new(Vector3::from(a)).unwrap().to_matrix();
        let r2 = AxisAngle::new(Vector3::from(b)).unwrap().to_matrix();
        let r3 = AxisAngle::new(Vector3::from(c)).unwrap().to_matrix();
        let slack = geodesic_dist_mat(&r1, &r2) + geodesic_dist_mat(&r2, &r3)
            - geodesic_dist_mat(&r1, &r3);
        prop_assert!(slack >= -1e-9, "triangle violated by {slack}");
    }

    #[test]
    fn distance_is_invariant_under_common_rotation(
        a in prop::array::uniform3(-1.0f64..1.0),
        b in prop::array::uniform3(-1.0f64..1.0),
        q in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let r1 = AxisAngle::new(Vector3::from(a)).unwrap().to_matrix();
        let r2 = AxisAngle::new(Vector3::from(b)).unwrap().to_matrix();
        let q = AxisAngle::new(Vector3::from(q)).unwrap().to_matrix();
        let d = geodesic_dist_mat(&r1, &r2);
        prop_assert!((geodesic_dist_mat(&(q * r1), &(q * r2)) - d).abs() < 1e-9);
        prop_assert!((geodesic_dist_mat(&(r1 * q), &(r2 * q)) - d).abs() < 1e-9);
    }

    #[test]
    fn shared_axis_distance_is_angle_difference(
        t1 in 0.0f64..3.1,
        t2 in 0.0f64..3.1,
        axis in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let v = Vector3::from(axis);
        prop_assume!(v.norm() > 1e-2);
        let v = v.normalize();
        let a = AxisAngle::new(v * t1).unwrap();
        let b = AxisAngle::new(v * t2).unwrap();
        prop_assert!((geodesic_dist_aa(&a, &b) - (t1 - t2).abs()).abs() < 1e-9);
    }

    #[test]
    fn double_cover_is_invisible_to_the_quat_metric(
        a in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let q = AxisAngle::new(Vector3::from(a)).unwrap().to_quat();
        prop_assert!(geodesic_dist_quat(&q, &(-q)) <= 1e-9);
    }
}
