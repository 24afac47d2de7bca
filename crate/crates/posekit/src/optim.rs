//! Two-stage trainer: warm up on mean squared error in the head's
//! coordinates, then fine-tune on the geodesic objective, per category,
//! with Adam and a 1/(1+epoch) learning-rate decay.
//!
//! Stage boundaries are real boundaries: optimizer moments reset, the
//! epoch counter does not. Running the stages separately over the same
//! epoch ranges reproduces a combined run exactly, which keeps resumed
//! and one-shot training interchangeable.

use crate::data::PoseSample;
use crate::loss::{gve_loss_aa, gve_loss_quat, mse_loss, LossError, LossValue};
use crate::network::{CategoryBank, Head, NetworkError};
use crate::rotation::UnitQuat;
use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite gradient (tensor {tensor}, element {index})")]
    NonFiniteGradient { tensor: usize, index: usize },
    #[error("non-finite loss for category {category} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        category: u32,
        epoch: usize,
        batch: usize,
    },
    #[error("category {0} has no training samples")]
    EmptyCategory(u32),
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Adam

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one pair of buffers per parameter
/// tensor, plus the bias-correction step count.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn zeros_like(tensors: &[&[f64]]) -> Self {
        AdamState {
            m: tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
            v: tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
            step: 0,
        }
    }
}

/// One Adam update over a parameter/gradient pair list.
///
/// Rejects non-finite gradients before touching any state, so a failed
/// step leaves parameters and moments exactly as they were.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    for (tensor, g) in grads.iter().enumerate() {
        if let Some(index) = g.iter().position(|v| !v.is_finite()) {
            return Err(TrainError::NonFiniteGradient { tensor, index });
        }
    }

    state.step += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.step as i32);
    for t in 0..params.len() {
        let (p, g) = (&mut *params[t], grads[t]);
        let (m, v) = (&mut state.m[t], &mut state.v[t]);
        assert_eq!(p.len(), g.len());
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            p[i] -= lr * mhat / (vhat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// Decayed learning rate for a given (global) epoch index.
pub fn lr_at(base_lr: f64, epoch: usize) -> f64 {
    base_lr / (1.0 + epoch as f64)
}

// ---------------------------------------------------------------------------
// Batch loss

/// Combined loss over a batch together with per-row output gradients.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub value: f64,
    /// Row `i` holds d(value)/d(output row `i`).
    pub output_grads: DMatrix<f64>,
}

/// Mean of `weight(category) * loss` over the batch; the stored
/// gradients carry the same `weight / batch_size` scaling. Categories
/// missing from the weight map count with weight one.
pub fn weighted_batch_loss(
    per_sample: &[(u32, LossValue)],
    weights: &BTreeMap<u32, f64>,
) -> BatchLoss {
    assert!(!per_sample.is_empty());
    let m = per_sample.len() as f64;
    let dim = per_sample[0].1.grad.len();
    let mut value = 0.0;
    let mut output_grads = DMatrix::zeros(per_sample.len(), dim);
    for (i, (category, loss)) in per_sample.iter().enumerate() {
        let w = weights.get(category).copied().unwrap_or(1.0);
        value += w * loss.value / m;
        for j in 0..dim {
            output_grads[(i, j)] = w * loss.grad[j] / m;
        }
    }
    BatchLoss {
        value,
        output_grads,
    }
}

// ---------------------------------------------------------------------------
// Configuration

/// Everything a training run needs besides the data itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub head: Head,
    pub hidden: (usize, usize),
    pub batch_size: usize,
    pub base_lr: f64,
    pub epochs_mse: usize,
    pub epochs_gve: usize,
    pub category_weights: BTreeMap<u32, f64>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrainConfig {
    version: u32,
    #[serde(default)]
    seed: u64,
    head: String,
    #[serde(default = "default_hidden")]
    hidden: [usize; 2],
    #[serde(default = "default_batch_size")]
    batch_size: usize,
    #[serde(default = "default_base_lr")]
    base_lr: f64,
    epochs_mse: usize,
    epochs_gve: usize,
    #[serde(default)]
    category_weights: BTreeMap<String, f64>,
}

fn default_hidden() -> [usize; 2] {
    [64, 32]
}
fn default_batch_size() -> usize {
    32
}
fn default_base_lr() -> f64 {
    1e-3
}

impl TrainConfig {
    /// Parse the TOML schema:
    ///
    /// ```toml
    /// version = 1
    /// head = "axisangle"        # or "quat"
    /// epochs_mse = 10
    /// epochs_gve = 10
    /// seed = 7                  # default 0
    /// hidden = [64, 32]         # default
    /// batch_size = 32           # default
    /// base_lr = 0.001           # default
    ///
    /// [category_weights]        # optional, default weight is 1.0
    /// 2 = 2.0
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, TrainError> {
        let raw: RawTrainConfig =
            toml::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        if raw.version != 1 {
            return Err(TrainError::Config(format!(
                "unsupported config version {}",
                raw.version
            )));
        }
        let head = Head::from_name(&raw.head)
            .ok_or_else(|| TrainError::Config(format!("unknown head {:?}", raw.head)))?;
        if raw.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be positive".into()));
        }
        if !(raw.base_lr.is_finite() && raw.base_lr > 0.0) {
            return Err(TrainError::Config("base_lr must be positive".into()));
        }
        let mut category_weights = BTreeMap::new();
        for (key, weight) in raw.category_weights {
            let cat: u32 = key
                .parse()
                .map_err(|_| TrainError::Config(format!("bad category id {key:?}")))?;
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(TrainError::Config(format!(
                    "weight for category {cat} must be finite and non-negative"
                )));
            }
            category_weights.insert(cat, weight);
        }
        Ok(TrainConfig {
            seed: raw.seed,
            head,
            hidden: (raw.hidden[0], raw.hidden[1]),
            batch_size: raw.batch_size,
            base_lr: raw.base_lr,
            epochs_mse: raw.epochs_mse,
            epochs_gve: raw.epochs_gve,
            category_weights,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

// ---------------------------------------------------------------------------
// Training loop

/// Which objective drives the updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Mse,
    Gve,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Mse => "mse",
            Stage::Gve => "gve",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        match name {
            "mse" => Some(Stage::Mse),
            "gve" => Some(Stage::Gve),
            _ => None,
        }
    }
}

/// Per-category mean of the weighted per-sample loss over one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub category: u32,
    pub epoch: usize,
    pub stage: Stage,
    pub mean_loss: f64,
}

/// Runs one objective over the given global epoch range.
///
/// Each category gets fresh optimizer moments at entry and its own
/// shuffle stream keyed by (seed, category, epoch), so a run split into
/// `0..k` and `k..n` calls matches a single `0..n` call bit for bit.
/// The learning rate decays with the global epoch index.
pub fn train_stage(
    bank: &mut CategoryBank,
    samples: &[PoseSample],
    stage: Stage,
    epochs: Range<usize>,
    config: &TrainConfig,
) -> Result<Vec<TraceRow>, TrainError> {
    if config.batch_size == 0 {
        return Err(TrainError::ZeroBatchSize);
    }
    let head = bank.head;

    let mut by_category: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_category.entry(s.category).or_default().push(i);
    }
    let categories = bank.categories();
    if let Some(&stray) = by_category.keys().find(|c| !categories.contains(c)) {
        return Err(NetworkError::UnknownCategory(stray).into());
    }
    for &cat in &categories {
        if !by_category.contains_key(&cat) {
            return Err(TrainError::EmptyCategory(cat));
        }
    }

    let quat_targets: BTreeMap<usize, UnitQuat> = if head == Head::Quaternion {
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.rotation.to_quat()))
            .collect()
    } else {
        BTreeMap::new()
    };
    let mse_targets: BTreeMap<usize, DVector<f64>> = if stage == Stage::Mse {
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let t = match head {
                    Head::AxisAngle => {
                        DVector::from_column_slice(s.rotation.to_axis_angle().vector().as_slice())
                    }
                    Head::Quaternion => {
                        DVector::from_column_slice(quat_targets[&i].as_vector().as_slice())
                    }
                };
                (i, t)
            })
            .collect()
    } else {
        BTreeMap::new()
    };

    let adam_cfg = AdamConfig::default();
    let mut states: BTreeMap<u32, AdamState> = BTreeMap::new();
    let mut trace = Vec::new();

    for epoch in epochs {
        let lr = lr_at(config.base_lr, epoch);
        for &cat in &categories {
            let indices = &by_category[&cat];
            let mut order: Vec<usize> = indices.clone();
            let shuffle_seed =
                crate::seeding::mix(crate::seeding::mix(config.seed, 5, cat as u64), 6, epoch as u64);
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));

            let mut loss_sum = 0.0;
            for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
                let net = bank.network_mut(cat)?;
                let x = DMatrix::from_fn(batch.len(), net.input_dim, |r, c| {
                    samples[batch[r]].features[c]
                });
                let (out, cache) = net.forward_train(&x)?;

                let mut per_sample = Vec::with_capacity(batch.len());
                for (r, &gi) in batch.iter().enumerate() {
                    let row = out.row(r).transpose();
                    let loss = match (stage, head) {
                        (Stage::Mse, _) => mse_loss(&row, &mse_targets[&gi])?,
                        (Stage::Gve, Head::AxisAngle) => gve_loss_aa(
                            &Vector3::new(row[0], row[1], row[2]),
                            &samples[gi].rotation,
                        ),
                        (Stage::Gve, Head::Quaternion) => gve_loss_quat(
                            &Vector4::new(row[0], row[1], row[2], row[3]),
                            &quat_targets[&gi],
                        ),
                    };
                    per_sample.push((cat, loss));
                }
                let batch_loss = weighted_batch_loss(&per_sample, &config.category_weights);
                if !batch_loss.value.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        category: cat,
                        epoch,
                        batch: batch_no,
                    });
                }
                loss_sum += batch_loss.value * batch.len() as f64;

                let grads = net.backward(&cache, &batch_loss.output_grads);
                let gslices = grads.slices();
                let state = states
                    .entry(cat)
                    .or_insert_with(|| AdamState::zeros_like(&gslices));
                let mut pslices = net.param_slices_mut();
                adam_step(&mut pslices, &gslices, state, lr, &adam_cfg)?;
            }

            trace.push(TraceRow {
                category: cat,
                epoch,
                stage,
                mean_loss: loss_sum / indices.len() as f64,
            });
        }
    }
    Ok(trace)
}

/// The full schedule: `epochs_mse` epochs of squared error, then
/// `epochs_gve` epochs of the geodesic objective, with the epoch
/// counter (and so the learning-rate decay) running straight through.
pub fn train_two_stage(
    bank: &mut CategoryBank,
    samples: &[PoseSample],
    config: &TrainConfig,
) -> Result<Vec<TraceRow>, TrainError> {
    let mut trace = train_stage(bank, samples, Stage::Mse, 0..config.epochs_mse, config)?;
    trace.extend(train_stage(
        bank,
        samples,
        Stage::Gve,
        config.epochs_mse..config.epochs_mse + config.epochs_gve,
        config,
    )?);
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Trace files
//
//   posekit-trace v1
//   <category> <epoch> <stage> <mean_loss>

const TRACE_HEADER: &str = "posekit-trace v1";

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), TrainError> {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{} {} {} {}\n",
            r.category,
            r.epoch,
            r.stage.name(),
            r.mean_loss
        ));
    }
    crate::io::atomic_write_text(path, &out)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, TrainError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRACE_HEADER) {
        return Err(TrainError::Config("not a trace file".into()));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || TrainError::Config(format!("trace line {}: {line:?}", idx + 2));
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad());
        }
        rows.push(TraceRow {
            category: f[0].parse().map_err(|_| bad())?,
            epoch: f[1].parse().map_err(|_| bad())?,
            stage: Stage::from_name(f[2]).ok_or_else(bad)?,
            mean_loss: f[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{PoseDistribution, SyntheticSpec};

    #[test]
    fn adam_single_step_matches_hand_computation() {
        let mut p = [2.0];
        let g = [0.5];
        let mut state = AdamState::zeros_like(&[&g]);
        let cfg = AdamConfig::default();
        adam_step(&mut [&mut p], &[&g], &mut state, 0.1, &cfg).unwrap();

        let m_hat: f64 = (0.1 * 0.5) / (1.0 - 0.9);
        let v_hat: f64 = (0.001 * 0.25) / (1.0 - 0.999);
        let expected = 2.0 - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-12);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_converges_on_a_quadratic() {
        let mut p = [0.0];
        let mut state = AdamState::zeros_like(&[&[0.0][..]]);
        let cfg = AdamConfig::default();
        for _ in 0..500 {
            let g = [2.0 * (p[0] - 3.0)];
            adam_step(&mut [&mut p], &[&g], &mut state, 0.1, &cfg).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 1e-3, "ended at {}", p[0]);
    }

    #[test]
    fn adam_rejects_non_finite_gradients_without_mutating() {
        let mut p = [1.0, 2.0];
        let g = [0.1, f64::NAN];
        let mut state = AdamState::zeros_like(&[&g[..]]);
        let err = adam_step(&mut [&mut p], &[&g], &mut state, 0.1, &AdamConfig::default())
            .unwrap_err();
        match err {
            TrainError::NonFiniteGradient { tensor: 0, index: 1 } => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(state.step, 0);
        assert_eq!(state.m[0], vec![0.0, 0.0]);
    }

    #[test]
    fn learning_rate_decays_harmonically() {
        assert_eq!(lr_at(0.01, 0), 0.01);
        assert_eq!(lr_at(0.01, 1), 0.005);
        assert_eq!(lr_at(0.01, 4), 0.002);
        assert!(lr_at(0.01, 7) < lr_at(0.01, 6));
    }

    fn loss_value(v: f64, grad: &[f64]) -> LossValue {
        LossValue {
            value: v,
            grad: DVector::from_column_slice(grad),
            near_singular: false,
        }
    }

    #[test]
    fn weighted_batch_loss_matches_hand_computation() {
        let per_sample = vec![
            (0, loss_value(1.0, &[1.0, 0.0])),
            (1, loss_value(2.0, &[0.0, 2.0])),
        ];
        let mut weights = BTreeMap::new();
        weights.insert(0u32, 2.0);

        let b = weighted_batch_loss(&per_sample, &weights);
        assert!((b.value - (2.0 * 1.0 + 1.0 * 2.0) / 2.0).abs() < 1e-15);
        assert!((b.output_grads[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((b.output_grads[(1, 1)] - 1.0).abs() < 1e-15);

        let plain = weighted_batch_loss(&per_sample, &BTreeMap::new());
        assert!((plain.value - 1.5).abs() < 1e-15);

        weights.insert(1u32, 0.0);
        let partial = weighted_batch_loss(&per_sample, &weights);
        assert!((partial.value - 1.0).abs() < 1e-15);
        assert_eq!(partial.output_grads[(1, 1)], 0.0);
    }

    fn small_problem(categories: Vec<u32>) -> Vec<PoseSample> {
        SyntheticSpec {
            categories,
            samples_per_category: 30,
            feature_dim: 5,
            noise: 0.0,
            distribution: PoseDistribution::UniformSo3,
            seed: 91,
        }
        .generate()
    }

    fn small_config(head: Head) -> TrainConfig {
        TrainConfig {
            seed: 5,
            head,
            hidden: (12, 8),
            batch_size: 8,
            base_lr: 5e-3,
            epochs_mse: 3,
            epochs_gve: 3,
            category_weights: BTreeMap::new(),
        }
    }

    #[test]
    fn training_reduces_the_loss() {
        let samples = small_problem(vec![0]);
        let config = small_config(Head::AxisAngle);
        let mut bank = CategoryBank::init(&[0], 5, config.hidden, config.head, config.seed);
        let trace = train_stage(&mut bank, &samples, Stage::Mse, 0..6, &config).unwrap();
        assert!(trace.last().unwrap().mean_loss < 0.5 * trace[0].mean_loss);
    }

    #[test]
    fn split_stages_reproduce_the_combined_run() {
        let samples = small_problem(vec![0, 2]);
        for head in [Head::AxisAngle, Head::Quaternion] {
            let config = small_config(head);
            let make_bank =
                || CategoryBank::init(&[0, 2], 5, config.hidden, config.head, config.seed);
            let dir = tempfile::tempdir().unwrap();

            let mut combined = make_bank();
            let trace_combined = train_two_stage(&mut combined, &samples, &config).unwrap();
            combined.save(&dir.path().join("combined.ckpt")).unwrap();

            let mut split = make_bank();
            let mut trace_split =
                train_stage(&mut split, &samples, Stage::Mse, 0..3, &config).unwrap();
            split.save(&dir.path().join("after_stage1.ckpt")).unwrap();
            trace_split
                .extend(train_stage(&mut split, &samples, Stage::Gve, 3..6, &config).unwrap());
            split.save(&dir.path().join("split.ckpt")).unwrap();

            assert_eq!(trace_combined, trace_split);
            assert_eq!(
                std::fs::read(dir.path().join("combined.ckpt")).unwrap(),
                std::fs::read(dir.path().join("split.ckpt")).unwrap()
            );

            // The second stage started from exactly the stage-one result.
            let mut stage1_only = make_bank();
            train_stage(&mut stage1_only, &samples, Stage::Mse, 0..3, &config).unwrap();
            stage1_only
                .save(&dir.path().join("stage1_only.ckpt"))
                .unwrap();
            assert_eq!(
                std::fs::read(dir.path().join("after_stage1.ckpt")).unwrap(),
                std::fs::read(dir.path().join("stage1_only.ckpt")).unwrap()
            );
        }
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let samples = small_problem(vec![1]);
        let config = small_config(Head::Quaternion);
        let dir = tempfile::tempdir().unwrap();
        let mut traces = Vec::new();
        for name in ["a.ckpt", "b.ckpt"] {
            let mut bank = CategoryBank::init(&[1], 5, config.hidden, config.head, config.seed);
            traces.push(train_two_stage(&mut bank, &samples, &config).unwrap());
            bank.save(&dir.path().join(name)).unwrap();
        }
        assert_eq!(traces[0], traces[1]);
        assert_eq!(
            std::fs::read(dir.path().join("a.ckpt")).unwrap(),
            std::fs::read(dir.path().join("b.ckpt")).unwrap()
        );
    }

    #[test]
    fn missing_and_stray_categories_are_reported() {
        let samples = small_problem(vec![0]);
        let config = small_config(Head::AxisAngle);

        let mut bank = CategoryBank::init(&[0, 7], 5, config.hidden, config.head, config.seed);
        assert!(matches!(
            train_stage(&mut bank, &samples, Stage::Mse, 0..1, &config),
            Err(TrainError::EmptyCategory(7))
        ));

        let mut bank = CategoryBank::init(&[7], 5, config.hidden, config.head, config.seed);
        assert!(matches!(
            train_stage(&mut bank, &samples, Stage::Mse, 0..1, &config),
            Err(TrainError::Network(NetworkError::UnknownCategory(0)))
        ));
    }

    #[test]
    fn config_parses_with_defaults_and_rejects_bad_input() {
        let full = TrainConfig::from_toml_str(
            r#"
            version = 1
            seed = 9
            head = "quat"
            hidden = [24, 12]
            batch_size = 16
            base_lr = 0.002
            epochs_mse = 4
            epochs_gve = 2

            [category_weights]
            3 = 2.5
            "#,
        )
        .unwrap();
        assert_eq!(full.head, Head::Quaternion);
        assert_eq!(full.hidden, (24, 12));
        assert_eq!(full.category_weights.get(&3), Some(&2.5));

        let minimal = TrainConfig::from_toml_str(
            "version = 1\nhead = \"axisangle\"\nepochs_mse = 1\nepochs_gve = 1\n",
        )
        .unwrap();
        assert_eq!(minimal.seed, 0);
        assert_eq!(minimal.hidden, (64, 32));
        assert_eq!(minimal.batch_size, 32);
        assert_eq!(minimal.base_lr, 1e-3);

        for bad in [
            "version = 2\nhead = \"quat\"\nepochs_mse = 1\nepochs_gve = 1\n",
            "version = 1\nhead = \"euler\"\nepochs_mse = 1\nepochs_gve = 1\n",
            "version = 1\nhead = \"quat\"\nepochs_mse = 1\nepochs_gve = 1\nbatch_size = 0\n",
            "version = 1\nhead = \"quat\"\nepochs_mse = 1\nepochs_gve = 1\nmystery = 3\n",
            "version = 1\nhead = \"quat\"\nepochs_mse = 1\nepochs_gve = 1\n[category_weights]\nx = 1.0\n",
        ] {
            assert!(
                matches!(TrainConfig::from_toml_str(bad), Err(TrainError::Config(_))),
                "accepted: {bad}"
            );
        }
    }

    #[test]
    fn trace_files_round_trip() {
        let rows = vec![
            TraceRow {
                category: 0,
                epoch: 0,
                stage: Stage::Mse,
                mean_loss: 1.25,
            },
            TraceRow {
                category: 0,
                epoch: 1,
                stage: Stage::Gve,
                mean_loss: 0.03125,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.txt");
        write_trace(&path, &rows).unwrap();
        assert_eq!(read_trace(&path).unwrap(), rows);
    }
}
