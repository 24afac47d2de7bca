//! Fully connected pose regressor with constrained output heads.
//!
//! The network is three dense layers with batch normalization and ReLU
//! after the first two, and a head activation after the third: either
//! `pi * tanh` producing an axis-angle vector or L2 normalization
//! producing a unit quaternion. Forward, backward and initialization are
//! spelled out here so training has no framework behind it; a
//! [`CategoryBank`] holds one independent network per object category.
//!
//! Batches are row-major: one sample per row.

use crate::loss::NORMALIZE_MIN_NORM;
use crate::rotation::{RotationMatrix, UnitQuat};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

/// Default widths of the two hidden layers.
pub const DEFAULT_HIDDEN: (usize, usize) = (4096, 500);

/// Variance floor inside batch normalization.
pub const BN_EPSILON: f64 = 1e-5;

/// Fraction of the previous running statistic kept per batch.
pub const BN_MOMENTUM: f64 = 0.9;

const CHECKPOINT_MAGIC: &[u8; 8] = b"PKBANK1\n";

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("quaternion head received a near-zero pre-activation (row {row})")]
    ZeroHeadInput { row: usize },
    #[error("no network for category {0}")]
    UnknownCategory(u32),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    BadCheckpoint(String),
}

/// Output head: what the last layer's activation produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Three components squashed into `(-pi, pi)` by `pi * tanh`.
    AxisAngle,
    /// Four components L2-normalized onto the unit sphere.
    Quaternion,
}

impl Head {
    pub fn output_dim(self) -> usize {
        match self {
            Head::AxisAngle => 3,
            Head::Quaternion => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::AxisAngle => "axisangle",
            Head::Quaternion => "quat",
        }
    }

    pub fn from_name(name: &str) -> Option<Head> {
        match name {
            "axisangle" => Some(Head::AxisAngle),
            "quat" => Some(Head::Quaternion),
            _ => None,
        }
    }
}

/// Dense layer `z = x W^T + b`, weights stored out-by-in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl DenseLayer {
    fn init(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // 1/sqrt(fan_in) keeps pre-activation variance near one, which
        // the saturation check on fresh networks depends on.
        let scale = 1.0 / (in_dim as f64).sqrt();
        let weights = DMatrix::from_fn(out_dim, in_dim, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) * scale
        });
        DenseLayer {
            weights,
            bias: DVector::zeros(out_dim),
        }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x * self.weights.transpose();
        for mut row in z.row_iter_mut() {
            row += self.bias.transpose();
        }
        z
    }
}

/// Per-feature batch normalization state.
///
/// Training normalizes with the current batch's biased statistics and
/// folds them into the running ones; inference uses the running
/// statistics only. A batch of one has zero variance, so normalization
/// there divides by `sqrt(epsilon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: DVector<f64>,
    pub beta: DVector<f64>,
    pub running_mean: DVector<f64>,
    pub running_var: DVector<f64>,
    pub epsilon: f64,
    pub momentum: f64,
}

impl BatchNorm {
    fn init(dim: usize) -> Self {
        BatchNorm {
            gamma: DVector::repeat(dim, 1.0),
            beta: DVector::zeros(dim),
            running_mean: DVector::zeros(dim),
            running_var: DVector::repeat(dim, 1.0),
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
        }
    }

    /// Normalize with batch statistics, update running ones, and return
    /// `(output, xhat, inv_std)` for the backward pass.
    fn forward_train(&mut self, z: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let m = z.nrows() as f64;
        let mean = z.row_mean().transpose();
        let mut var = DVector::zeros(z.ncols());
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                let d = z[(i, j)] - mean[j];
                var[j] += d * d;
            }
        }
        var /= m;

        let inv_std = var.map(|v| 1.0 / (v + self.epsilon).sqrt());
        let mut xhat = z.clone();
        let mut out = DMatrix::zeros(z.nrows(), z.ncols());
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                xhat[(i, j)] = (z[(i, j)] - mean[j]) * inv_std[j];
                out[(i, j)] = self.gamma[j] * xhat[(i, j)] + self.beta[j];
            }
        }

        self.running_mean = &self.running_mean * self.momentum + mean * (1.0 - self.momentum);
        self.running_var = &self.running_var * self.momentum + var * (1.0 - self.momentum);
        (out, xhat, inv_std)
    }

    fn forward_infer(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let inv_std = self.running_var.map(|v| 1.0 / (v + self.epsilon).sqrt());
        let mut out = z.clone();
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                out[(i, j)] =
                    self.gamma[j] * (z[(i, j)] - self.running_mean[j]) * inv_std[j] + self.beta[j];
            }
        }
        out
    }
}

/// One pose regressor: dense(in, h1) + BN + ReLU, dense(h1, h2) + BN +
/// ReLU, dense(h2, out) + head activation. No normalization after the
/// final layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseNetwork {
    pub input_dim: usize,
    pub hidden: (usize, usize),
    pub head: Head,
    pub layer1: DenseLayer,
    pub bn1: BatchNorm,
    pub layer2: DenseLayer,
    pub bn2: BatchNorm,
    pub layer3: DenseLayer,
}

/// Everything the backward pass needs from a training-mode forward.
pub struct ForwardCache {
    x: DMatrix<f64>,
    xhat1: DMatrix<f64>,
    inv_std1: DVector<f64>,
    a1: DMatrix<f64>,
    xhat2: DMatrix<f64>,
    inv_std2: DVector<f64>,
    a2: DMatrix<f64>,
    z3: DMatrix<f64>,
    z3_norms: DVector<f64>,
}

/// Parameter gradients, shaped exactly like the parameters.
#[derive(Debug, Clone)]
pub struct NetworkGrads {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub gamma1: DVector<f64>,
    pub beta1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub gamma2: DVector<f64>,
    pub beta2: DVector<f64>,
    pub w3: DMatrix<f64>,
    pub b3: DVector<f64>,
}

impl NetworkGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.w1.as_slice(),
            self.b1.as_slice(),
            self.gamma1.as_slice(),
            self.beta1.as_slice(),
            self.w2.as_slice(),
            self.b2.as_slice(),
            self.gamma2.as_slice(),
            self.beta2.as_slice(),
            self.w3.as_slice(),
            self.b3.as_slice(),
        ]
    }
}

impl PoseNetwork {
    /// Fresh network with seeded initialization: weights drawn from
    /// `N(0, 1/fan_in)`, biases zero, BN at identity.
    pub fn new(input_dim: usize, hidden: (usize, usize), head: Head, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PoseNetwork {
            input_dim,
            hidden,
            head,
            layer1: DenseLayer::init(hidden.0, input_dim, &mut rng),
            bn1: BatchNorm::init(hidden.0),
            layer2: DenseLayer::init(hidden.1, hidden.0, &mut rng),
            bn2: BatchNorm::init(hidden.1),
            layer3: DenseLayer::init(head.output_dim(), hidden.1, &mut rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    fn check_batch(&self, x: &DMatrix<f64>) -> Result<(), NetworkError> {
        if x.nrows() == 0 {
            return Err(NetworkError::EmptyBatch);
        }
        if x.ncols() != self.input_dim {
            return Err(NetworkError::DimensionMismatch {
                expected: self.input_dim,
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Head activation over rows of `z3`; returns outputs and row norms
    /// (norms are only meaningful for the quaternion head).
    fn apply_head(&self, z3: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>), NetworkError> {
        match self.head {
            Head::AxisAngle => {
                let out = z3.map(|v| std::f64::consts::PI * v.tanh());
                Ok((out, DVector::zeros(z3.nrows())))
            }
            Head::Quaternion => {
                let mut out = z3.clone();
                let mut norms = DVector::zeros(z3.nrows());
                for i in 0..z3.nrows() {
                    let norm = z3.row(i).norm();
                    if norm <= NORMALIZE_MIN_NORM {
                        return Err(NetworkError::ZeroHeadInput { row: i });
                    }
                    norms[i] = norm;
                    for j in 0..z3.ncols() {
                        out[(i, j)] /= norm;
                    }
                }
                Ok((out, norms))
            }
        }
    }

    /// Training-mode forward: batch statistics in the BN layers (which
    /// also advances their running statistics) and a cache for backward.
    pub fn forward_train(
        &mut self,
        x: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, ForwardCache), NetworkError> {
        self.check_batch(x)?;
        let z1 = self.layer1.apply(x);
        let (y1, xhat1, inv_std1) = self.bn1.forward_train(&z1);
        let a1 = y1.map(|v| v.max(0.0));

        let z2 = self.layer2.apply(&a1);
        let (y2, xhat2, inv_std2) = self.bn2.forward_train(&z2);
        let a2 = y2.map(|v| v.max(0.0));

        let z3 = self.layer3.apply(&a2);
        let (out, z3_norms) = self.apply_head(&z3)?;

        let cache = ForwardCache {
            x: x.clone(),
            xhat1,
            inv_std1,
            a1,
            xhat2,
            inv_std2,
            a2,
            z3,
            z3_norms,
        };
        Ok((out, cache))
    }

    /// Inference-mode forward: running statistics, no state mutation,
    /// deterministic for fixed parameters.
    pub fn forward_infer(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, NetworkError> {
        self.check_batch(x)?;
        let a1 = self
            .bn1
            .forward_infer(&self.layer1.apply(x))
            .map(|v| v.max(0.0));
        let a2 = self
            .bn2
            .forward_infer(&self.layer2.apply(&a1))
            .map(|v| v.max(0.0));
        let z3 = self.layer3.apply(&a2);
        Ok(self.apply_head(&z3)?.0)
    }

    pub fn infer_one(&self, features: &DVector<f64>) -> Result<DVector<f64>, NetworkError> {
        let x = DMatrix::from_row_slice(1, features.len(), features.as_slice());
        let out = self.forward_infer(&x)?;
        Ok(out.row(0).transpose())
    }

    /// Backpropagation from `dout = dL/d(head output)` through head,
    /// layers and batch normalization, using a training-mode cache.
    pub fn backward(&self, cache: &ForwardCache, dout: &DMatrix<f64>) -> NetworkGrads {
        let m = cache.x.nrows();

        // Head jacobian, row by row.
        let mut dz3 = DMatrix::zeros(m, self.output_dim());
        match self.head {
            Head::AxisAngle => {
                for i in 0..m {
                    for j in 0..self.output_dim() {
                        let t = cache.z3[(i, j)].tanh();
                        dz3[(i, j)] = dout[(i, j)] * std::f64::consts::PI * (1.0 - t * t);
                    }
                }
            }
            Head::Quaternion => {
                for i in 0..m {
                    let norm = cache.z3_norms[i];
                    let unit = cache.z3.row(i) / norm;
                    let proj = unit.dot(&dout.row(i));
                    for j in 0..self.output_dim() {
                        dz3[(i, j)] = (dout[(i, j)] - unit[j] * proj) / norm;
                    }
                }
            }
        }

        let w3 = dz3.transpose() * &cache.a2;
        let b3 = column_sums(&dz3);
        let da2 = &dz3 * &self.layer3.weights;

        let dy2 = relu_backward(&da2, &cache.a2);
        let (dz2, gamma2, beta2) =
            bn_backward(&dy2, &cache.xhat2, &cache.inv_std2, &self.bn2.gamma);
        let w2 = dz2.transpose() * &cache.a1;
        let b2 = column_sums(&dz2);
        let da1 = &dz2 * &self.layer2.weights;

        let dy1 = relu_backward(&da1, &cache.a1);
        let (dz1, gamma1, beta1) =
            bn_backward(&dy1, &cache.xhat1, &cache.inv_std1, &self.bn1.gamma);
        let w1 = dz1.transpose() * &cache.x;
        let b1 = column_sums(&dz1);

        NetworkGrads {
            w1,
            b1,
            gamma1,
            beta1,
            w2,
            b2,
            gamma2,
            beta2,
            w3,
            b3,
        }
    }

    /// All trainable tensors as mutable slices, in the same order as
    /// [`NetworkGrads::slices`]. Running BN statistics are not trainable
    /// and are not included.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let PoseNetwork {
            layer1,
            bn1,
            layer2,
            bn2,
            layer3,
            ..
        } = self;
        vec![
            layer1.weights.as_mut_slice(),
            layer1.bias.as_mut_slice(),
            bn1.gamma.as_mut_slice(),
            bn1.beta.as_mut_slice(),
            layer2.weights.as_mut_slice(),
            layer2.bias.as_mut_slice(),
            bn2.gamma.as_mut_slice(),
            bn2.beta.as_mut_slice(),
            layer3.weights.as_mut_slice(),
            layer3.bias.as_mut_slice(),
        ]
    }
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_sum().transpose()
}

fn relu_backward(da: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = da.clone();
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            if a[(i, j)] <= 0.0 {
                d[(i, j)] = 0.0;
            }
        }
    }
    d
}

/// Batch-statistics BN backward: returns `(dz, dgamma, dbeta)`.
fn bn_backward(
    dy: &DMatrix<f64>,
    xhat: &DMatrix<f64>,
    inv_std: &DVector<f64>,
    gamma: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let m = dy.nrows() as f64;
    let cols = dy.ncols();
    let mut dgamma = DVector::zeros(cols);
    let mut dbeta = DVector::zeros(cols);
    let mut mean_dxhat = DVector::zeros(cols);
    let mut mean_dxhat_xhat = DVector::zeros(cols);

    for i in 0..dy.nrows() {
        for j in 0..cols {
            let dxhat = dy[(i, j)] * gamma[j];
            dgamma[j] += dy[(i, j)] * xhat[(i, j)];
            dbeta[j] += dy[(i, j)];
            mean_dxhat[j] += dxhat;
            mean_dxhat_xhat[j] += dxhat * xhat[(i, j)];
        }
    }
    mean_dxhat /= m;
    mean_dxhat_xhat /= m;

    let mut dz = DMatrix::zeros(dy.nrows(), cols);
    for i in 0..dy.nrows() {
        for j in 0..cols {
            let dxhat = dy[(i, j)] * gamma[j];
            dz[(i, j)] =
                inv_std[j] * (dxhat - mean_dxhat[j] - xhat[(i, j)] * mean_dxhat_xhat[j]);
        }
    }
    (dz, dgamma, dbeta)
}

// ---------------------------------------------------------------------------
// Category bank

/// One independently trained network per object category.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBank {
    pub head: Head,
    pub input_dim: usize,
    pub hidden: (usize, usize),
    pub seed: u64,
    networks: BTreeMap<u32, PoseNetwork>,
}

impl CategoryBank {
    /// One network per listed category, each with its own seed derived
    /// from the bank seed so categories stay decoupled.
    pub fn init(
        categories: &[u32],
        input_dim: usize,
        hidden: (usize, usize),
        head: Head,
        seed: u64,
    ) -> Self {
        let networks = categories
            .iter()
            .map(|&c| {
                (
                    c,
                    PoseNetwork::new(input_dim, hidden, head, crate::seeding::mix(seed, 1, c as u64)),
                )
            })
            .collect();
        CategoryBank {
            head,
            input_dim,
            hidden,
            seed,
            networks,
        }
    }

    pub fn categories(&self) -> Vec<u32> {
        self.networks.keys().copied().collect()
    }

    pub fn network(&self, category: u32) -> Result<&PoseNetwork, NetworkError> {
        self.networks
            .get(&category)
            .ok_or(NetworkError::UnknownCategory(category))
    }

    pub fn network_mut(&mut self, category: u32) -> Result<&mut PoseNetwork, NetworkError> {
        self.networks
            .get_mut(&category)
            .ok_or(NetworkError::UnknownCategory(category))
    }

    /// Inference straight to a rotation matrix through the head's
    /// natural representation.
    pub fn predict(
        &self,
        category: u32,
        features: &DVector<f64>,
    ) -> Result<RotationMatrix, NetworkError> {
        let out = self.network(category)?.infer_one(features)?;
        Ok(match self.head {
            Head::AxisAngle => RotationMatrix::exp(&Vector3::new(out[0], out[1], out[2])),
            Head::Quaternion => UnitQuat::new(out[0], Vector3::new(out[1], out[2], out[3]))
                .expect("head output is unit by construction")
                .to_matrix(),
        })
    }

    // -- checkpoint format ---------------------------------------------
    //
    // Binary, little-endian, versioned by magic:
    //   "PKBANK1\n" | head tag u32 | seed u64 | input u32 | h1 u32 | h2 u32
    //   | bn epsilon f64 | bn momentum f64 | category count u32
    //   | per category: id u32, then tensors as raw f64 runs in a fixed
    //     order (w1, b1, bn1 gamma/beta/mean/var, w2, b2, bn2 likewise,
    //     w3, b3; matrices row-major).
    // Every f64 is written verbatim, so save/load round-trips bit-exactly.

    pub fn save(&self, path: &Path) -> Result<(), NetworkError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        let head_tag: u32 = match self.head {
            Head::AxisAngle => 0,
            Head::Quaternion => 1,
        };
        buf.extend_from_slice(&head_tag.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&(self.input_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.hidden.0 as u32).to_le_bytes());
        buf.extend_from_slice(&(self.hidden.1 as u32).to_le_bytes());
        buf.extend_from_slice(&BN_EPSILON.to_le_bytes());
        buf.extend_from_slice(&BN_MOMENTUM.to_le_bytes());
        buf.extend_from_slice(&(self.networks.len() as u32).to_le_bytes());
        for (&cat, net) in &self.networks {
            buf.extend_from_slice(&cat.to_le_bytes());
            for tensor in checkpoint_tensors(net) {
                for v in tensor {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        crate::io::atomic_write(path, &buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = CheckpointReader { bytes: &bytes, pos: 0 };

        let magic = r.take(8)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(NetworkError::BadCheckpoint(
                "unrecognized magic; not a checkpoint file".into(),
            ));
        }
        let head = match r.u32()? {
            0 => Head::AxisAngle,
            1 => Head::Quaternion,
            t => {
                return Err(NetworkError::BadCheckpoint(format!(
                    "unknown head tag {t}"
                )))
            }
        };
        let seed = r.u64()?;
        let input_dim = r.u32()? as usize;
        let hidden = (r.u32()? as usize, r.u32()? as usize);
        let epsilon = r.f64()?;
        let momentum = r.f64()?;
        let count = r.u32()? as usize;

        let mut networks = BTreeMap::new();
        for _ in 0..count {
            let cat = r.u32()?;
            let mut net = PoseNetwork::new(input_dim, hidden, head, 0);
            net.bn1.epsilon = epsilon;
            net.bn1.momentum = momentum;
            net.bn2.epsilon = epsilon;
            net.bn2.momentum = momentum;
            for tensor in checkpoint_tensors_mut(&mut net) {
                for v in tensor {
                    *v = r.f64()?;
                }
            }
            networks.insert(cat, net);
        }
        if r.pos != bytes.len() {
            return Err(NetworkError::BadCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(CategoryBank {
            head,
            input_dim,
            hidden,
            seed,
            networks,
        })
    }
}

/// Tensor order shared by save and load, including the (non-trainable)
/// running BN statistics that inference depends on.
fn checkpoint_tensors(net: &PoseNetwork) -> Vec<&[f64]> {
    vec![
        net.layer1.weights.as_slice(),
        net.layer1.bias.as_slice(),
        net.bn1.gamma.as_slice(),
        net.bn1.beta.as_slice(),
        net.bn1.running_mean.as_slice(),
        net.bn1.running_var.as_slice(),
        net.layer2.weights.as_slice(),
        net.layer2.bias.as_slice(),
        net.bn2.gamma.as_slice(),
        net.bn2.beta.as_slice(),
        net.bn2.running_mean.as_slice(),
        net.bn2.running_var.as_slice(),
        net.layer3.weights.as_slice(),
        net.layer3.bias.as_slice(),
    ]
}

fn checkpoint_tensors_mut(net: &mut PoseNetwork) -> Vec<&mut [f64]> {
    let PoseNetwork {
        layer1,
        bn1,
        layer2,
        bn2,
        layer3,
        ..
    } = net;
    vec![
        layer1.weights.as_mut_slice(),
        layer1.bias.as_mut_slice(),
        bn1.gamma.as_mut_slice(),
        bn1.beta.as_mut_slice(),
        bn1.running_mean.as_mut_slice(),
        bn1.running_var.as_mut_slice(),
        layer2.weights.as_mut_slice(),
        layer2.bias.as_mut_slice(),
        bn2.gamma.as_mut_slice(),
        bn2.beta.as_mut_slice(),
        bn2.running_mean.as_mut_slice(),
        bn2.running_var.as_mut_slice(),
        layer3.weights.as_mut_slice(),
        layer3.bias.as_mut_slice(),
    ]
}

struct CheckpointReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> CheckpointReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetworkError> {
        if self.pos + n > self.bytes.len() {
            return Err(NetworkError::BadCheckpoint("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NetworkError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NetworkError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, NetworkError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
