//! Evaluation metrics: median geodesic angle error, pose-set coverage
//! costs, IoU detection matching, and average precision with a pose
//! test (ARP) or azimuth-bin test (AVP).
//!
//! Everything internal runs in radians; reported angles are degrees.
//!
//! A record row pairs one prediction with its ground truth. Rows may
//! share a ground truth (two detections claiming the same object), may
//! lack a detection (an undetected object, counted against recall), or
//! may lack a ground truth (a spurious detection, always a false
//! positive). Ground-truth identity is the exact bit pattern of the
//! box and rotation within a category.

use crate::rotation::{geodesic_dist_mat, RotationMatrix, Viewpoint};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no records")]
    Empty,
    #[error("empty pose set")]
    EmptySet,
    #[error("epsilon must be positive")]
    BadEps,
    #[error("bin count must be 4, 8, 16 or 24 (got {0})")]
    BadBinCount(usize),
    #[error("record {index}: missing {what}")]
    MissingField { index: usize, what: &'static str },
    #[error("box must satisfy x_min < x_max and y_min < y_max")]
    BadBox,
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("not an eval record file (missing or wrong header)")]
    BadHeader,
}

// ---------------------------------------------------------------------------
// Boxes

/// Axis-aligned pixel box, corners exclusive of degenerate extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, EvalError> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if !(x_min < x_max && y_min < y_max) || !b.bits().iter().all(|v| f64::from_bits(*v).is_finite()) {
            return Err(EvalError::BadBox);
        }
        Ok(b)
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    fn bits(&self) -> [u64; 4] {
        [
            self.x_min.to_bits(),
            self.y_min.to_bits(),
            self.x_max.to_bits(),
            self.y_max.to_bits(),
        ]
    }
}

/// Intersection area over union area; 0 for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    inter / (a.area() + b.area() - inter)
}

// ---------------------------------------------------------------------------
// Records

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub category: u32,
    pub gt_rotation: RotationMatrix,
    pub pred_rotation: RotationMatrix,
    pub gt_box: Option<BoundingBox>,
    pub det_box: Option<BoundingBox>,
    pub confidence: Option<f64>,
}

impl EvalRecord {
    /// Box-free record, enough for the pure pose metrics.
    pub fn pose_only(category: u32, gt: RotationMatrix, pred: RotationMatrix) -> Self {
        EvalRecord {
            category,
            gt_rotation: gt,
            pred_rotation: pred,
            gt_box: None,
            det_box: None,
            confidence: None,
        }
    }
}

/// A per-category value plus the across-category mean, the shape of one
/// table row.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMetric {
    pub by_category: BTreeMap<u32, f64>,
    pub mean: f64,
}

impl CategoryMetric {
    fn from_map(by_category: BTreeMap<u32, f64>) -> Self {
        let mean = by_category.values().sum::<f64>() / by_category.len() as f64;
        CategoryMetric { by_category, mean }
    }
}

// ---------------------------------------------------------------------------
// Pose metrics

/// Per-category median of the geodesic angle between ground truth and
/// prediction, in degrees. An even count averages the two middle values.
pub fn median_angle_error(records: &[EvalRecord]) -> Result<CategoryMetric, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut errors: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in records {
        errors
            .entry(r.category)
            .or_default()
            .push(geodesic_dist_mat(&r.gt_rotation, &r.pred_rotation).to_degrees());
    }
    let by_category = errors
        .into_iter()
        .map(|(cat, mut v)| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = v.len();
            let median = if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            };
            (cat, median)
        })
        .collect();
    Ok(CategoryMetric::from_map(by_category))
}

/// Mean over the test poses of the distance to the nearest train pose.
pub fn cost1(test: &[RotationMatrix], train: &[RotationMatrix]) -> Result<f64, EvalError> {
    if test.is_empty() || train.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let sum: f64 = test
        .iter()
        .map(|t| {
            train
                .iter()
                .map(|s| geodesic_dist_mat(t, s))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(sum / test.len() as f64)
}

/// Mean over the test poses of how many train poses fall within `eps`.
/// Empty sets yield 0.
pub fn cost2(test: &[RotationMatrix], train: &[RotationMatrix], eps: f64) -> Result<f64, EvalError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(EvalError::BadEps);
    }
    if test.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = test
        .iter()
        .map(|t| {
            train
                .iter()
                .filter(|s| geodesic_dist_mat(t, s) <= eps)
                .count() as f64
        })
        .sum();
    Ok(sum / test.len() as f64)
}

// ---------------------------------------------------------------------------
// Detection matching

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub category: u32,
    pub bbox: BoundingBox,
    pub rotation: RotationMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub category: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub rotation: RotationMatrix,
}

/// Outcome for one ground truth: the detection index it pairs with, or
/// none when no same-category detection overlaps it at all.
#[derive(Debug, Clone, PartialEq)]
pub struct GtMatch {
    pub gt_index: usize,
    pub detection: Option<usize>,
    pub iou: f64,
}

/// Pairs every ground truth with its highest-IoU detection of the same
/// category. Ties go to the higher confidence, then to the earlier
/// detection.
pub fn match_detections(gts: &[GroundTruth], dets: &[Detection]) -> Vec<GtMatch> {
    gts.iter()
        .enumerate()
        .map(|(gt_index, gt)| {
            let mut best: Option<(usize, f64)> = None;
            for (i, d) in dets.iter().enumerate() {
                if d.category != gt.category {
                    continue;
                }
                let overlap = iou(&gt.bbox, &d.bbox);
                if overlap <= 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bo)) => {
                        overlap > bo
                            || (overlap == bo && d.confidence > dets[bi].confidence)
                    }
                };
                if better {
                    best = Some((i, overlap));
                }
            }
            GtMatch {
                gt_index,
                detection: best.map(|(i, _)| i),
                iou: best.map_or(0.0, |(_, o)| o),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Average precision

type GtKey = ([u64; 4], [u64; 9]);

fn gt_key(bbox: &BoundingBox, rot: &RotationMatrix) -> GtKey {
    let m = rot.matrix();
    let mut rbits = [0u64; 9];
    for i in 0..3 {
        for j in 0..3 {
            rbits[i * 3 + j] = m[(i, j)].to_bits();
        }
    }
    (bbox.bits(), rbits)
}

struct RankedDetection {
    confidence: f64,
    order: usize,
    gt: Option<GtKey>,
    candidate_tp: bool,
}

/// Shared ARP/AVP bookkeeping: rank detections by confidence, walk the
/// list claiming ground truths, integrate the precision envelope.
fn detection_ap(
    records: &[EvalRecord],
    iou_threshold: f64,
    pose_test: impl Fn(&EvalRecord) -> bool,
) -> Result<CategoryMetric, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }

    let mut gt_sets: BTreeMap<u32, BTreeSet<GtKey>> = BTreeMap::new();
    let mut ranked: BTreeMap<u32, Vec<RankedDetection>> = BTreeMap::new();
    for (index, r) in records.iter().enumerate() {
        gt_sets.entry(r.category).or_default();
        ranked.entry(r.category).or_default();
        let key = r.gt_box.map(|b| gt_key(&b, &r.gt_rotation));
        if let Some(k) = key {
            gt_sets.get_mut(&r.category).unwrap().insert(k);
        }
        match (r.det_box, r.confidence) {
            (None, _) => {
                if key.is_none() {
                    return Err(EvalError::MissingField {
                        index,
                        what: "both boxes",
                    });
                }
            }
            (Some(_), None) => {
                return Err(EvalError::MissingField {
                    index,
                    what: "confidence",
                });
            }
            (Some(det), Some(confidence)) => {
                let overlaps = r
                    .gt_box
                    .is_some_and(|gt| iou(&gt, &det) > iou_threshold);
                ranked.get_mut(&r.category).unwrap().push(RankedDetection {
                    confidence,
                    order: index,
                    gt: key,
                    candidate_tp: overlaps && pose_test(r),
                });
            }
        }
    }

    let by_category = gt_sets
        .iter()
        .map(|(&cat, gts)| {
            let mut dets = std::mem::take(ranked.get_mut(&cat).unwrap());
            dets.sort_by(|a, b| {
                b.confidence
                    .partial_cmp(&a.confidence)
                    .unwrap()
                    .then(a.order.cmp(&b.order))
            });
            let mut claimed: BTreeSet<GtKey> = BTreeSet::new();
            let mut tps = Vec::with_capacity(dets.len());
            for d in &dets {
                let tp = d.candidate_tp
                    && d.gt.is_some_and(|k| claimed.insert(k));
                tps.push(tp);
            }
            (cat, average_precision(&tps, gts.len()))
        })
        .collect();
    Ok(CategoryMetric::from_map(by_category))
}

/// Area under the precision-recall curve with the precision envelope
/// (all-point interpolation). Every true positive advances recall by
/// exactly `1 / n_gt`, so the area is the sum over true positives of
/// the best precision at or beyond that rank, scaled by the step.
fn average_precision(tps: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut precisions = Vec::with_capacity(tps.len());
    let (mut tp, mut total) = (0usize, 0usize);
    for &is_tp in tps {
        total += 1;
        if is_tp {
            tp += 1;
            precisions.push(tp as f64 / total as f64);
        }
    }
    let mut ap = 0.0;
    let mut envelope: f64 = 0.0;
    for &p in precisions.iter().rev() {
        envelope = envelope.max(p);
        ap += envelope / n_gt as f64;
    }
    ap
}

/// Average precision where a detection counts iff it overlaps its
/// ground truth (IoU above the threshold) and the predicted pose lies
/// within `angle_threshold` radians of the true one.
pub fn arp(
    records: &[EvalRecord],
    angle_threshold: f64,
    iou_threshold: f64,
) -> Result<CategoryMetric, EvalError> {
    detection_ap(records, iou_threshold, |r| {
        geodesic_dist_mat(&r.gt_rotation, &r.pred_rotation) < angle_threshold
    })
}

/// Azimuth bin of a rotation: bins of width `2 pi / n` centered on zero,
/// upper edges open, azimuth read through the viewpoint factorization.
pub fn azimuth_bin(r: &RotationMatrix, n_bins: usize) -> usize {
    let az = r.to_viewpoint().angles.az;
    let w = std::f64::consts::TAU / n_bins as f64;
    let k = ((az + 0.5 * w) / w).floor() as i64;
    k.rem_euclid(n_bins as i64) as usize
}

/// Average precision where a detection counts iff it overlaps its
/// ground truth and predicts the correct azimuth bin.
pub fn avp(
    records: &[EvalRecord],
    n_bins: usize,
    iou_threshold: f64,
) -> Result<CategoryMetric, EvalError> {
    if ![4, 8, 16, 24].contains(&n_bins) {
        return Err(EvalError::BadBinCount(n_bins));
    }
    detection_ap(records, iou_threshold, |r| {
        azimuth_bin(&r.pred_rotation, n_bins) == azimuth_bin(&r.gt_rotation, n_bins)
    })
}

// ---------------------------------------------------------------------------
// Record files
//
//   posekit-eval v1
//   <category> <gt> <pred> [gt_box x4] [det_box x4 + confidence]
//
// Rotations are either 9 row-major matrix values or an az/el/ct triple
// in degrees; the field count of each line says which. Files written
// here always use the matrix form, which round-trips exactly.

const EVAL_HEADER: &str = "posekit-eval v1";

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<(), EvalError> {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    for (index, r) in records.iter().enumerate() {
        let mut fields = vec![r.category.to_string()];
        for rot in [&r.gt_rotation, &r.pred_rotation] {
            let m = rot.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    fields.push(m[(i, j)].to_string());
                }
            }
        }
        if let Some(b) = r.gt_box {
            fields.extend([b.x_min, b.y_min, b.x_max, b.y_max].map(|v| v.to_string()));
        }
        if let Some(b) = r.det_box {
            fields.extend([b.x_min, b.y_min, b.x_max, b.y_max].map(|v| v.to_string()));
            fields.push(
                r.confidence
                    .ok_or(EvalError::MissingField {
                        index,
                        what: "confidence",
                    })?
                    .to_string(),
            );
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    crate::io::atomic_write_text(path, &out)?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l.trim()) != Some(EVAL_HEADER) {
        return Err(EvalError::BadHeader);
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |what: String| EvalError::Parse {
            line: line_no,
            what,
        };
        let nums: Vec<f64> = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(format!("bad number {f:?}")))
            })
            .collect::<Result<_, _>>()?;
        let category: u32 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad category id {:?}", fields[0])))?;

        let rot_len = if nums.len() >= 18 { 9 } else { 3 };
        let base = 2 * rot_len;
        let extra = nums
            .len()
            .checked_sub(base)
            .ok_or_else(|| parse_err("too few fields".into()))?;
        let (gt_box, det_box) = match extra {
            0 => (None, None),
            4 => (Some(0), None),
            5 => (None, Some(0)),
            9 => (Some(0), Some(4)),
            _ => return Err(parse_err(format!("unexpected field count {}", fields.len()))),
        };

        let rotation = |vals: &[f64]| -> Result<RotationMatrix, EvalError> {
            if rot_len == 9 {
                RotationMatrix::from_matrix(nalgebra::Matrix3::from_row_slice(vals))
                    .map_err(|e| parse_err(e.to_string()))
            } else {
                Ok(Viewpoint::from_degrees(vals[0], vals[1], vals[2]).to_matrix())
            }
        };
        let bbox = |offset: usize| -> Result<BoundingBox, EvalError> {
            BoundingBox::new(
                nums[base + offset],
                nums[base + offset + 1],
                nums[base + offset + 2],
                nums[base + offset + 3],
            )
            .map_err(|e| parse_err(e.to_string()))
        };

        records.push(EvalRecord {
            category,
            gt_rotation: rotation(&nums[..rot_len])?,
            pred_rotation: rotation(&nums[rot_len..base])?,
            gt_box: gt_box.map(bbox).transpose()?,
            det_box: det_box.map(bbox).transpose()?,
            confidence: det_box.map(|off| nums[base + off + 4]),
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Report tables

/// One labeled row of per-category values for the report table.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub label: String,
    pub metric: CategoryMetric,
}

/// Aligned text table: one column per category (union over rows,
/// sorted), a final Mean column, `-` where a row has no value.
pub fn format_report(rows: &[ReportRow]) -> String {
    let mut categories: BTreeSet<u32> = BTreeSet::new();
    for row in rows {
        categories.extend(row.metric.by_category.keys());
    }
    let headers: Vec<String> = std::iter::once(String::new())
        .chain(categories.iter().map(|c| format!("cat{c}")))
        .chain(std::iter::once("Mean".into()))
        .collect();

    let mut cells: Vec<Vec<String>> = vec![headers];
    for row in rows {
        let mut line = vec![row.label.clone()];
        for c in &categories {
            line.push(
                row.metric
                    .by_category
                    .get(c)
                    .map_or("-".into(), |v| format!("{v:.2}")),
            );
        }
        line.push(format!("{:.2}", row.metric.mean));
        cells.push(line);
    }

    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap())
        .collect();
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (j, cell) in row.iter().enumerate() {
            if j == 0 {
                line.push_str(&format!("{:<w$}", cell, w = widths[0]));
            } else {
                line.push_str(&format!("  {:>w$}", cell, w = widths[j]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::random_rotation_so3;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rot_z(deg: f64) -> RotationMatrix {
        RotationMatrix::exp(&Vector3::new(0.0, 0.0, deg.to_radians()))
    }

    fn unit_box(x: f64, y: f64) -> BoundingBox {
        BoundingBox::new(x, y, x + 1.0, y + 1.0).unwrap()
    }

    #[test]
    fn median_of_known_errors() {
        let gt = RotationMatrix::identity();
        let records: Vec<EvalRecord> = [10.0, 30.0, 20.0]
            .iter()
            .map(|&d| EvalRecord::pose_only(0, gt, rot_z(d)))
            .collect();
        let m = median_angle_error(&records).unwrap();
        assert!((m.by_category[&0] - 20.0).abs() < 1e-9);
        assert!((m.mean - 20.0).abs() < 1e-9);

        let even: Vec<EvalRecord> = [10.0, 20.0, 30.0, 40.0]
            .iter()
            .map(|&d| EvalRecord::pose_only(1, gt, rot_z(d)))
            .collect();
        let m = median_angle_error(&even).unwrap();
        assert!((m.by_category[&1] - 25.0).abs() < 1e-9);

        let exact = vec![EvalRecord::pose_only(2, rot_z(33.0), rot_z(33.0))];
        assert!(median_angle_error(&exact).unwrap().by_category[&2] < 1e-9);

        assert!(matches!(median_angle_error(&[]), Err(EvalError::Empty)));
    }

    #[test]
    fn median_matches_a_sort_based_oracle_and_is_bi_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let records: Vec<EvalRecord> = (0..41)
            .map(|_| {
                EvalRecord::pose_only(
                    0,
                    random_rotation_so3(&mut rng),
                    random_rotation_so3(&mut rng),
                )
            })
            .collect();
        let m = median_angle_error(&records).unwrap().by_category[&0];

        let mut errs: Vec<f64> = records
            .iter()
            .map(|r| geodesic_dist_mat(&r.gt_rotation, &r.pred_rotation).to_degrees())
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((m - errs[20]).abs() < 1e-12);

        let g = random_rotation_so3(&mut rng);
        let rotated: Vec<EvalRecord> = records
            .iter()
            .map(|r| {
                EvalRecord::pose_only(0, g * r.gt_rotation, g * r.pred_rotation)
            })
            .collect();
        let m2 = median_angle_error(&rotated).unwrap().by_category[&0];
        assert!((m - m2).abs() < 1e-9);
    }

    #[test]
    fn coverage_costs_on_known_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let set: Vec<RotationMatrix> = (0..20).map(|_| random_rotation_so3(&mut rng)).collect();
        assert!(cost1(&set, &set).unwrap() < 1e-12);
        assert!(cost2(&set, &set, 0.1).unwrap() >= 1.0);

        let sole = vec![RotationMatrix::identity()];
        let test = vec![RotationMatrix::exp(&Vector3::new(0.3, 0.0, 0.0))];
        assert!((cost1(&test, &sole).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(cost2(&test, &sole, 0.1).unwrap(), 0.0);
        assert_eq!(cost2(&sole, &sole, 0.1).unwrap(), 1.0);

        assert!(matches!(cost1(&[], &sole), Err(EvalError::EmptySet)));
        assert!(matches!(cost2(&sole, &sole, 0.0), Err(EvalError::BadEps)));

        // Brute-force double loop as an oracle for both costs.
        let train: Vec<RotationMatrix> = (0..15).map(|_| random_rotation_so3(&mut rng)).collect();
        let mut min_sum = 0.0;
        let mut count_sum = 0.0;
        for t in &set {
            let mut best = f64::INFINITY;
            for s in &train {
                let d = geodesic_dist_mat(t, s);
                best = best.min(d);
                if d <= 0.1 {
                    count_sum += 1.0;
                }
            }
            min_sum += best;
        }
        assert!((cost1(&set, &train).unwrap() - min_sum / 20.0).abs() < 1e-12);
        assert!((cost2(&set, &train, 0.1).unwrap() - count_sum / 20.0).abs() < 1e-12);
    }

    #[test]
    fn iou_known_values() {
        let a = BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(iou(&a, &a), 1.0);
        let far = BoundingBox::new(5.0, 5.0, 6.0, 6.0).unwrap();
        assert_eq!(iou(&a, &far), 0.0);
        let half = BoundingBox::new(0.5, 0.0, 1.5, 1.0).unwrap();
        assert!((iou(&a, &half) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou(&a, &half), iou(&half, &a));

        assert!(BoundingBox::new(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn matching_prefers_overlap_then_confidence_then_order() {
        let id = RotationMatrix::identity();
        let gt = vec![GroundTruth {
            category: 0,
            bbox: unit_box(0.0, 0.0),
            rotation: id,
        }];
        let mk = |x: f64, conf: f64| Detection {
            category: 0,
            bbox: unit_box(x, 0.0),
            confidence: conf,
            rotation: id,
        };

        let dets = vec![mk(0.4, 0.9), mk(0.1, 0.2)];
        let m = match_detections(&gt, &dets);
        assert_eq!(m[0].detection, Some(1));
        assert!((m[0].iou - iou(&gt[0].bbox, &dets[1].bbox)).abs() < 1e-12);

        // Exact IoU tie: confidence decides; then input order.
        let dets = vec![mk(0.5, 0.3), mk(-0.5, 0.8)];
        assert_eq!(match_detections(&gt, &dets)[0].detection, Some(1));
        let dets = vec![mk(0.5, 0.8), mk(-0.5, 0.8)];
        assert_eq!(match_detections(&gt, &dets)[0].detection, Some(0));

        let dets = vec![mk(5.0, 0.9)];
        let m = match_detections(&gt, &dets);
        assert_eq!(m[0].detection, None);
        assert_eq!(m[0].iou, 0.0);

        // Different category never matches.
        let dets = vec![Detection {
            category: 1,
            ..mk(0.0, 0.9)
        }];
        assert_eq!(match_detections(&gt, &dets)[0].detection, None);
    }

    #[test]
    fn matching_agrees_with_an_exhaustive_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let id = RotationMatrix::identity();
        let gts: Vec<GroundTruth> = (0..8)
            .map(|_| GroundTruth {
                category: rng.gen_range(0..2),
                bbox: unit_box(rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)),
                rotation: id,
            })
            .collect();
        let dets: Vec<Detection> = (0..12)
            .map(|_| Detection {
                category: rng.gen_range(0..2),
                bbox: unit_box(rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)),
                confidence: rng.gen_range(0.0..1.0),
                rotation: id,
            })
            .collect();

        for m in match_detections(&gts, &dets) {
            let gt = &gts[m.gt_index];
            let best = dets
                .iter()
                .enumerate()
                .filter(|(_, d)| d.category == gt.category && iou(&gt.bbox, &d.bbox) > 0.0)
                .max_by(|(_, a), (_, b)| {
                    iou(&gt.bbox, &a.bbox)
                        .partial_cmp(&iou(&gt.bbox, &b.bbox))
                        .unwrap()
                        .then(a.confidence.partial_cmp(&b.confidence).unwrap())
                })
                .map(|(i, _)| i);
            assert_eq!(m.detection, best);
        }
    }

    fn detection_record(
        category: u32,
        gt_xy: Option<(f64, f64)>,
        pred_err_deg: f64,
        det_xy: (f64, f64),
        confidence: f64,
    ) -> EvalRecord {
        EvalRecord {
            category,
            gt_rotation: RotationMatrix::identity(),
            pred_rotation: rot_z(pred_err_deg),
            gt_box: gt_xy.map(|(x, y)| unit_box(x, y)),
            det_box: Some(unit_box(det_xy.0, det_xy.1)),
            confidence: Some(confidence),
        }
    }

    #[test]
    fn arp_extremes() {
        let perfect: Vec<EvalRecord> = (0..5)
            .map(|i| detection_record(0, Some((i as f64 * 3.0, 0.0)), 0.0, (i as f64 * 3.0, 0.0), 0.5))
            .collect();
        let m = arp(&perfect, 0.2, 0.5).unwrap();
        assert_eq!(m.by_category[&0], 1.0);

        let all_bad_pose: Vec<EvalRecord> = (0..5)
            .map(|i| detection_record(0, Some((i as f64 * 3.0, 0.0)), 90.0, (i as f64 * 3.0, 0.0), 0.5))
            .collect();
        let m = arp(&all_bad_pose, 0.2, 0.5).unwrap();
        assert_eq!(m.by_category[&0], 0.0);
    }

    #[test]
    fn arp_matches_a_hand_walked_ranked_list() {
        // Three ground truths A(0,0), B(3,0), C(6,0); four detections:
        //   conf .9 on A, good pose  -> TP   (prec 1,   recall 1/3)
        //   conf .8 on A, good pose  -> FP   (A already claimed)
        //   conf .7 on B, bad pose   -> FP
        //   conf .6 on C, good pose  -> TP   (prec 1/2, recall 2/3)
        // Envelope: 1 on the first step, 1/2 on the second.
        let records = vec![
            detection_record(0, Some((0.0, 0.0)), 1.0, (0.0, 0.0), 0.9),
            detection_record(0, Some((0.0, 0.0)), 2.0, (0.05, 0.0), 0.8),
            detection_record(0, Some((3.0, 0.0)), 45.0, (3.0, 0.0), 0.7),
            detection_record(0, Some((6.0, 0.0)), 3.0, (6.0, 0.0), 0.6),
        ];
        let m = arp(&records, 10f64.to_radians(), 0.5).unwrap();
        let expected = (1.0 / 3.0) * 1.0 + (1.0 / 3.0) * 0.5;
        assert!((m.by_category[&0] - expected).abs() < 1e-12);
    }

    #[test]
    fn undetected_and_spurious_records_shape_the_curve() {
        let records = vec![
            // One clean hit.
            detection_record(0, Some((0.0, 0.0)), 0.0, (0.0, 0.0), 0.9),
            // A ground truth nothing detected.
            EvalRecord {
                det_box: None,
                confidence: None,
                ..detection_record(0, Some((3.0, 0.0)), 0.0, (0.0, 0.0), 0.0)
            },
            // A detection with no ground truth at all.
            detection_record(0, None, 0.0, (9.0, 0.0), 0.8),
        ];
        // Ranked: TP (recall 1/2, prec 1), FP. AP = 1/2.
        let m = arp(&records, 0.2, 0.5).unwrap();
        assert!((m.by_category[&0] - 0.5).abs() < 1e-12);

        // Missing confidence next to a detection box is malformed.
        let mut bad = records.clone();
        bad[0].confidence = None;
        assert!(matches!(
            arp(&bad, 0.2, 0.5),
            Err(EvalError::MissingField { .. })
        ));
    }

    #[test]
    fn arp_at_pi_is_detection_only_and_bounds_avp() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let records: Vec<EvalRecord> = (0..30)
            .map(|i| {
                let hit = rng.gen_bool(0.7);
                let x = i as f64 * 3.0;
                EvalRecord {
                    category: rng.gen_range(0..2),
                    gt_rotation: random_rotation_so3(&mut rng),
                    pred_rotation: random_rotation_so3(&mut rng),
                    gt_box: Some(unit_box(x, 0.0)),
                    det_box: Some(unit_box(x + if hit { 0.1 } else { 2.0 }, 0.0)),
                    confidence: Some(rng.gen_range(0.0..1.0)),
                }
            })
            .collect();
        let pi_ap = arp(&records, std::f64::consts::PI, 0.5).unwrap();
        let detection_only = arp(&records, 10.0, 0.5).unwrap();
        assert_eq!(pi_ap, detection_only);

        for bins in [4, 8, 16, 24] {
            let v = avp(&records, bins, 0.5).unwrap();
            for (cat, ap) in &v.by_category {
                assert!(ap <= &(detection_only.by_category[cat] + 1e-12));
            }
        }
    }

    #[test]
    fn azimuth_bins_follow_the_centered_convention() {
        let vp = |az_deg: f64| Viewpoint::from_degrees(az_deg, 40.0, 10.0).to_matrix();
        assert_eq!(azimuth_bin(&vp(10.0), 4), 0);
        assert_eq!(azimuth_bin(&vp(80.0), 4), 1);
        assert_eq!(azimuth_bin(&vp(44.9), 4), 0);
        assert_eq!(azimuth_bin(&vp(45.1), 4), 1);
        assert_eq!(azimuth_bin(&vp(-44.9), 4), 0);
        assert_eq!(azimuth_bin(&vp(-45.1), 4), 3);
        assert_eq!(azimuth_bin(&vp(-90.0), 4), 3);
        assert_eq!(azimuth_bin(&vp(7.6), 24), 1);

        let gt = vp(10.0);
        let pred = vp(80.0);
        let records = vec![EvalRecord {
            category: 0,
            gt_rotation: gt,
            pred_rotation: pred,
            gt_box: Some(unit_box(0.0, 0.0)),
            det_box: Some(unit_box(0.0, 0.0)),
            confidence: Some(0.9),
        }];
        assert_eq!(avp(&records, 4, 0.5).unwrap().by_category[&0], 0.0);
        assert_eq!(avp(&records, 8, 0.5).unwrap().by_category[&0], 0.0);
        assert!(matches!(avp(&records, 6, 0.5), Err(EvalError::BadBinCount(6))));
    }

    #[test]
    fn record_files_round_trip_and_parse_angle_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.txt");
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let records = vec![
            EvalRecord::pose_only(0, random_rotation_so3(&mut rng), random_rotation_so3(&mut rng)),
            detection_record(1, Some((0.0, 0.0)), 5.0, (0.2, 0.0), 0.7),
            EvalRecord {
                det_box: None,
                confidence: None,
                ..detection_record(1, Some((3.0, 0.0)), 0.0, (0.0, 0.0), 0.0)
            },
            detection_record(2, None, 0.0, (1.0, 1.0), 0.4),
        ];
        write_records(&path, &records).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);

        std::fs::write(
            &path,
            "posekit-eval v1\n3 30 20 -5 30 20 -5\n3 0 45 0 90 45 0 1 2 4 6 1.5 2 3.5 5.5 0.25\n",
        )
        .unwrap();
        let parsed = read_records(&path).unwrap();
        assert_eq!(parsed.len(), 2);
        let vp = Viewpoint::from_degrees(30.0, 20.0, -5.0).to_matrix();
        assert!((parsed[0].gt_rotation.matrix() - vp.matrix()).abs().max() < 1e-12);
        assert_eq!(parsed[0].pred_rotation, parsed[0].gt_rotation);
        assert!(parsed[1].gt_box.is_some() && parsed[1].det_box.is_some());
        assert_eq!(parsed[1].confidence, Some(0.25));

        std::fs::write(&path, "posekit-eval v1\n0 1 2\n").unwrap();
        assert!(matches!(
            read_records(&path),
            Err(EvalError::Parse { line: 2, .. })
        ));
        std::fs::write(&path, "wrong\n").unwrap();
        assert!(matches!(read_records(&path), Err(EvalError::BadHeader)));
    }

    #[test]
    fn report_table_is_aligned_and_complete() {
        let mut a = BTreeMap::new();
        a.insert(0u32, 12.3456);
        a.insert(3u32, 7.0);
        let mut b = BTreeMap::new();
        b.insert(0u32, 0.93);
        let rows = vec![
            ReportRow {
                label: "MedErr".into(),
                metric: CategoryMetric::from_map(a),
            },
            ReportRow {
                label: "ARP".into(),
                metric: CategoryMetric::from_map(b),
            },
        ];
        let table = format_report(&rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("cat0") && lines[0].contains("cat3") && lines[0].contains("Mean"));
        assert!(lines[1].contains("12.35") && lines[1].contains("9.67"));
        assert!(lines[2].contains("0.93") && lines[2].contains('-'));
        // Right-aligned numeric columns: every line ends at the same offset.
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
    }
}
