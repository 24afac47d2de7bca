//! Pose datasets: the sample type, a plain-text on-disk format, and
//! seeded synthetic problem generators for end-to-end checks.
//!
//! A synthetic problem ties features to poses through a fixed random
//! linear map per category: features are that map applied to the pose's
//! rotation vector plus optional Gaussian noise. With zero noise the
//! relationship is exactly linear, which gives evaluation a closed-form
//! oracle to compare against.

use crate::rotation::{RotationMatrix, UnitQuat, Viewpoint};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// One training or evaluation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSample {
    pub category: u32,
    pub features: DVector<f64>,
    pub rotation: RotationMatrix,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("dataset I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("not a dataset file (missing or wrong header)")]
    BadHeader,
}

// ---------------------------------------------------------------------------
// Synthetic generation

/// How ground-truth rotations are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum PoseDistribution {
    /// Haar-uniform over the rotation group, via normalized Gaussian
    /// quaternions.
    UniformSo3,
    /// Independent uniform viewpoint angles (radians) in closed ranges.
    ViewpointRanges {
        az: (f64, f64),
        el: (f64, f64),
        ct: (f64, f64),
    },
}

/// Recipe for a synthetic feature-to-pose problem.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub categories: Vec<u32>,
    pub samples_per_category: usize,
    pub feature_dim: usize,
    pub noise: f64,
    pub distribution: PoseDistribution,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Deterministic for a fixed spec: each category draws from its own
    /// seeded stream, so adding a category never reshuffles another.
    pub fn generate(&self) -> Vec<PoseSample> {
        let mut samples = Vec::with_capacity(self.categories.len() * self.samples_per_category);
        for &cat in &self.categories {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::mix(self.seed, 4, cat as u64));
            let map = feature_map(self.feature_dim, &mut rng);
            for _ in 0..self.samples_per_category {
                let rotation = self.draw_rotation(&mut rng);
                let y = rotation.to_axis_angle().vector();
                let mut features = &map * y;
                if self.noise > 0.0 {
                    for v in features.iter_mut() {
                        *v += self.noise * rng.sample::<f64, _>(rand_distr::StandardNormal);
                    }
                }
                samples.push(PoseSample {
                    category: cat,
                    features,
                    rotation,
                });
            }
        }
        samples
    }

    fn draw_rotation(&self, rng: &mut ChaCha8Rng) -> RotationMatrix {
        match &self.distribution {
            PoseDistribution::UniformSo3 => random_rotation_so3(rng),
            PoseDistribution::ViewpointRanges { az, el, ct } => Viewpoint::new(
                rng.gen_range(az.0..=az.1),
                rng.gen_range(el.0..=el.1),
                rng.gen_range(ct.0..=ct.1),
            )
            .to_matrix(),
        }
    }
}

/// Haar-uniform rotation from a normalized 4-Gaussian quaternion.
pub fn random_rotation_so3<R: Rng>(rng: &mut R) -> RotationMatrix {
    loop {
        let q = nalgebra::Vector4::new(
            rng.sample::<f64, _>(rand_distr::StandardNormal),
            rng.sample::<f64, _>(rand_distr::StandardNormal),
            rng.sample::<f64, _>(rand_distr::StandardNormal),
            rng.sample::<f64, _>(rand_distr::StandardNormal),
        );
        if q.norm() > 1e-3 {
            let q = q / q.norm();
            return UnitQuat::new(q.x, Vector3::new(q.y, q.z, q.w))
                .expect("normalized quaternion is unit")
                .to_matrix();
        }
    }
}

fn feature_map(feature_dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let scale = 1.0 / 3f64.sqrt();
    DMatrix::from_fn(feature_dim, 3, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal) * scale
    })
}

// ---------------------------------------------------------------------------
// Dataset files
//
// Line-oriented whitespace-separated text:
//   posekit-dataset v1
//   feature_dim <d>
//   <category> <d features> <9 rotation values, row-major>
// Floats print in Rust's shortest round-trip form, so a write/read
// cycle reproduces every value exactly.

const DATASET_HEADER: &str = "posekit-dataset v1";

pub fn write_dataset(path: &Path, samples: &[PoseSample]) -> Result<(), DataError> {
    let dim = samples.first().map_or(0, |s| s.features.len());
    let mut out = String::new();
    out.push_str(DATASET_HEADER);
    out.push('\n');
    out.push_str(&format!("feature_dim {dim}\n"));
    for s in samples {
        let mut fields = Vec::with_capacity(1 + dim + 9);
        fields.push(s.category.to_string());
        for v in s.features.iter() {
            fields.push(v.to_string());
        }
        let m = s.rotation.matrix();
        for i in 0..3 {
            for j in 0..3 {
                fields.push(m[(i, j)].to_string());
            }
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    crate::io::atomic_write_text(path, &out)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<PoseSample>, DataError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(DataError::BadHeader)?;
    if header.trim() != DATASET_HEADER {
        return Err(DataError::BadHeader);
    }
    let (line_no, dim_line) = lines.next().ok_or(DataError::BadHeader)?;
    let dim: usize = dim_line
        .trim()
        .strip_prefix("feature_dim ")
        .and_then(|v| v.parse().ok())
        .ok_or(DataError::Parse {
            line: line_no + 1,
            what: "expected `feature_dim <n>`".into(),
        })?;

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 1 + dim + 9 {
            return Err(DataError::Parse {
                line: line_no,
                what: format!("expected {} fields, found {}", 1 + dim + 9, fields.len()),
            });
        }
        let category: u32 = fields[0].parse().map_err(|_| DataError::Parse {
            line: line_no,
            what: format!("bad category id {:?}", fields[0]),
        })?;
        let mut values = Vec::with_capacity(dim + 9);
        for f in &fields[1..] {
            values.push(f.parse::<f64>().map_err(|_| DataError::Parse {
                line: line_no,
                what: format!("bad number {f:?}"),
            })?);
        }
        let features = DVector::from_column_slice(&values[..dim]);
        let rotation = RotationMatrix::from_matrix(Matrix3::from_row_slice(&values[dim..]))
            .map_err(|e| DataError::Parse {
                line: line_no,
                what: e.to_string(),
            })?;
        samples.push(PoseSample {
            category,
            features,
            rotation,
        });
    }
    Ok(samples)
}

/// Rotation targets in the head's native coordinates, reused by training
/// and by least-squares baselines.
pub fn axis_angle_targets(samples: &[PoseSample]) -> Vec<Vector3<f64>> {
    samples
        .iter()
        .map(|s| s.rotation.to_axis_angle().vector())
        .collect()
}
