//! Pose-jittered augmentation with exact labels.
//!
//! A viewpoint grid perturbs camera tilt and azimuth around an
//! annotated pose and optionally adds flips; every entry carries the
//! exact perturbed label. On the image side, tilt shifts are in-plane
//! rotations and azimuth shifts are homographies estimated from 2D
//! projections of an object point cloud; flips mirror the image.
//!
//! Conventions: image grids index as (row, col) with row 0 at the top;
//! 2D points and homographies use (x, y) = (col, row) coordinates.
//! Samples that fall outside an image replicate the nearest edge pixel.

use crate::rotation::Viewpoint;
use nalgebra::{DMatrix, Matrix3, Vector3};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("image data length {got} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, got: usize },
    #[error("point {index} is not in front of the camera (depth {depth})")]
    PointBehindCamera { index: usize, depth: f64 },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("source and destination point counts differ")]
    CountMismatch,
    #[error("degenerate point configuration")]
    Degenerate,
    #[error("matrix is not invertible enough for a homography (det {0:e})")]
    NotInvertible(f64),
    #[error("invalid jitter grid: {0}")]
    BadJitterConfig(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("not a {0} file (missing or wrong header)")]
    BadHeader(&'static str),
}

// ---------------------------------------------------------------------------
// Jitter grid

/// Perturbation grid shape: symmetric ranges around zero, fixed steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterConfig {
    pub ct_range: f64,
    pub ct_step: f64,
    pub az_range: f64,
    pub az_step: f64,
    pub include_flips: bool,
}

impl Default for JitterConfig {
    /// Tilt from -4 to +4 degrees in 1-degree steps, azimuth from -2 to
    /// +2 degrees in half-degree steps, flips on: 9 x 9 x 2 = 162
    /// samples per annotation.
    fn default() -> Self {
        JitterConfig {
            ct_range: 4f64.to_radians(),
            ct_step: 1f64.to_radians(),
            az_range: 2f64.to_radians(),
            az_step: 0.5f64.to_radians(),
            include_flips: true,
        }
    }
}

impl JitterConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |what: &str| Err(AugmentError::BadJitterConfig(what.into()));
        if !(self.ct_step > 0.0 && self.az_step > 0.0) {
            return bad("steps must be positive");
        }
        if !(self.ct_range >= 0.0 && self.az_range >= 0.0) {
            return bad("ranges must be non-negative");
        }
        if !(self.ct_range.is_finite()
            && self.ct_step.is_finite()
            && self.az_range.is_finite()
            && self.az_step.is_finite())
        {
            return bad("values must be finite");
        }
        Ok(())
    }
}

/// One grid entry: the exact perturbed label plus the recipe for
/// synthesizing the matching image.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterEntry {
    pub viewpoint: Viewpoint,
    pub delta_ct: f64,
    pub delta_az: f64,
    pub flipped: bool,
}

fn shift_values(range: f64, step: f64) -> Vec<f64> {
    let half = (range / step + 1e-9).floor() as i64;
    (-half..=half).map(|k| k as f64 * step).collect()
}

/// Dense perturbation grid around one annotated viewpoint.
///
/// Order is deterministic: tilt shifts ascending, azimuth shifts
/// ascending within each tilt, and the flipped variant (of the already
/// perturbed pose) directly after its source when flips are on.
pub fn jitter_grid(vp: &Viewpoint, config: &JitterConfig) -> Vec<JitterEntry> {
    config.validate().expect("jitter config");
    let mut entries = Vec::new();
    for &dct in &shift_values(config.ct_range, config.ct_step) {
        for &daz in &shift_values(config.az_range, config.az_step) {
            let perturbed = Viewpoint::new(vp.az + daz, vp.el, vp.ct + dct);
            entries.push(JitterEntry {
                viewpoint: perturbed,
                delta_ct: dct,
                delta_az: daz,
                flipped: false,
            });
            if config.include_flips {
                entries.push(JitterEntry {
                    viewpoint: perturbed.flipped(),
                    delta_ct: dct,
                    delta_az: daz,
                    flipped: true,
                });
            }
        }
    }
    entries
}

// ---------------------------------------------------------------------------
// Image grids

/// Grayscale raster, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AugmentError> {
        if rows == 0 || cols == 0 {
            return Err(AugmentError::EmptyImage);
        }
        if data.len() != rows * cols {
            return Err(AugmentError::DataLength {
                rows,
                cols,
                got: data.len(),
            });
        }
        Ok(ImageGrid { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        ImageGrid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Bilinear sample at fractional (row, col); coordinates outside the
    /// grid clamp to the nearest edge pixel.
    pub fn sample(&self, r: f64, c: f64) -> f64 {
        let clamp = |v: f64, hi: usize| v.max(0.0).min((hi - 1) as f64);
        let (r, c) = (clamp(r, self.rows), clamp(c, self.cols));
        let (r0, c0) = (r.floor() as usize, c.floor() as usize);
        let (r1, c1) = ((r0 + 1).min(self.rows - 1), (c0 + 1).min(self.cols - 1));
        let (fr, fc) = (r - r0 as f64, c - c0 as f64);
        let top = self.get(r0, c0) * (1.0 - fc) + self.get(r0, c1) * fc;
        let bottom = self.get(r1, c0) * (1.0 - fc) + self.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    }

    pub fn flip_horizontal(&self) -> ImageGrid {
        ImageGrid::from_fn(self.rows, self.cols, |r, c| self.get(r, self.cols - 1 - c))
    }

    pub fn rms_diff(&self, other: &ImageGrid) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (sum / self.data.len() as f64).sqrt()
    }

    // File format:
    //   posekit-image v1
    //   <rows> <cols>
    //   one line per row, cols whitespace-separated values

    pub fn write(&self, path: &Path) -> Result<(), AugmentError> {
        let mut out = String::from("posekit-image v1\n");
        out.push_str(&format!("{} {}\n", self.rows, self.cols));
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        crate::io::atomic_write_text(path, &out)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, AugmentError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l.trim());
        if header != Some("posekit-image v1") {
            return Err(AugmentError::BadHeader("image"));
        }
        let (dims_line_no, dims) = lines.next().ok_or(AugmentError::BadHeader("image"))?;
        let parts: Vec<&str> = dims.split_whitespace().collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|_| AugmentError::Parse {
                line: dims_line_no + 1,
                what: format!("bad dimension {s:?}"),
            })
        };
        if parts.len() != 2 {
            return Err(AugmentError::Parse {
                line: dims_line_no + 1,
                what: "expected `<rows> <cols>`".into(),
            });
        }
        let (rows, cols) = (parse_dim(parts[0])?, parse_dim(parts[1])?);
        let mut data = Vec::with_capacity(rows * cols);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            for field in line.split_whitespace() {
                data.push(field.parse::<f64>().map_err(|_| AugmentError::Parse {
                    line: idx + 1,
                    what: format!("bad value {field:?}"),
                })?);
            }
        }
        ImageGrid::new(rows, cols, data)
    }
}

/// Rotates image content counterclockwise about the geometric center,
/// sampling bilinearly. Quarter-turn angles on square grids reduce to
/// exact index permutations.
pub fn rotate_inplane(img: &ImageGrid, angle: f64) -> ImageGrid {
    let (sin, cos) = angle.sin_cos();
    let mr = (img.rows() - 1) as f64 / 2.0;
    let mc = (img.cols() - 1) as f64 / 2.0;
    ImageGrid::from_fn(img.rows(), img.cols(), |r, c| {
        let dr = r as f64 - mr;
        let dc = c as f64 - mc;
        let rs = mr + sin * dc + cos * dr;
        let cs = mc + cos * dc - sin * dr;
        img.sample(rs, cs)
    })
}

// ---------------------------------------------------------------------------
// Point clouds and projection

/// Object-frame 3D points in arbitrary but consistent units.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud(Vec<Vector3<f64>>);

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, AugmentError> {
        if points.is_empty() {
            return Err(AugmentError::TooFewPoints { need: 1, got: 0 });
        }
        Ok(PointCloud(points))
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.0
    }

    /// Axis-aligned cube corners with the given half-extent.
    pub fn cube(half: f64) -> PointCloud {
        let mut pts = Vec::new();
        for &x in &[-half, half] {
            for &y in &[-half, half] {
                for &z in &[-half, half] {
                    pts.push(Vector3::new(x, y, z));
                }
            }
        }
        PointCloud(pts)
    }

    // Plain xyz text: one `x y z` triple per line, `#` comments allowed.

    pub fn write(&self, path: &Path) -> Result<(), AugmentError> {
        let mut out = String::new();
        for p in &self.0 {
            out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
        crate::io::atomic_write_text(path, &out)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, AugmentError> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(AugmentError::Parse {
                    line: idx + 1,
                    what: format!("expected 3 coordinates, found {}", fields.len()),
                });
            }
            let mut xyz = [0.0; 3];
            for (i, f) in fields.iter().enumerate() {
                xyz[i] = f.parse().map_err(|_| AugmentError::Parse {
                    line: idx + 1,
                    what: format!("bad coordinate {f:?}"),
                })?;
            }
            points.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
        }
        PointCloud::new(points)
    }
}

/// Pinhole camera looking down +z, object centered at `distance` along
/// the optical axis. No lens distortion, no image translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub distance: f64,
}

/// Perspective projection of the rotated cloud. Fails if any point ends
/// up at or behind the camera plane.
pub fn project_points(
    cloud: &PointCloud,
    vp: &Viewpoint,
    cam: &Camera,
) -> Result<Vec<(f64, f64)>, AugmentError> {
    let r = vp.to_matrix();
    let mut out = Vec::with_capacity(cloud.points().len());
    for (index, p) in cloud.points().iter().enumerate() {
        let q = r.matrix() * p + Vector3::new(0.0, 0.0, cam.distance);
        if q.z <= 1e-9 {
            return Err(AugmentError::PointBehindCamera { index, depth: q.z });
        }
        out.push((cam.focal * q.x / q.z + cam.cx, cam.focal * q.y / q.z + cam.cy));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Homographies

/// Plane-projective map on (x, y) points. Stored normalized: last entry
/// one, or unit Frobenius norm when that entry is effectively zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    h: Matrix3<f64>,
}

impl Homography {
    pub fn identity() -> Homography {
        Homography {
            h: Matrix3::identity(),
        }
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Homography, AugmentError> {
        let frob = m.norm();
        let h = if m[(2, 2)].abs() > 1e-8 * frob {
            m / m[(2, 2)]
        } else {
            m / frob
        };
        let det = h.determinant();
        if det.abs() <= 1e-12 {
            return Err(AugmentError::NotInvertible(det));
        }
        Ok(Homography { h })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.h
    }

    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let v = self.h * Vector3::new(p.0, p.1, 1.0);
        (v.x / v.z, v.y / v.z)
    }

    pub fn inverse(&self) -> Homography {
        Homography::from_matrix(self.h.try_inverse().expect("invertible by construction"))
            .expect("inverse of an invertible map")
    }
}

/// Estimated homography together with how well it explains the inputs.
#[derive(Debug, Clone)]
pub struct HomographyFit {
    pub homography: Homography,
    /// Root-mean-square transfer error over the fitted correspondences,
    /// in destination units. Near zero exactly when the correspondences
    /// are truly homographic (e.g. projections of a planar cloud).
    pub rms_residual: f64,
}

/// Least-squares direct linear transform over all correspondences, with
/// similarity normalization of both point sets for conditioning.
pub fn estimate_homography(
    src: &[(f64, f64)],
    dst: &[(f64, f64)],
) -> Result<HomographyFit, AugmentError> {
    if src.len() != dst.len() {
        return Err(AugmentError::CountMismatch);
    }
    if src.len() < 4 {
        return Err(AugmentError::TooFewPoints {
            need: 4,
            got: src.len(),
        });
    }

    let t_src = normalizing_similarity(src)?;
    let t_dst = normalizing_similarity(dst)?;
    let ns: Vec<(f64, f64)> = src.iter().map(|&p| apply_affine(&t_src, p)).collect();
    let nd: Vec<(f64, f64)> = dst.iter().map(|&p| apply_affine(&t_dst, p)).collect();

    let mut a = DMatrix::zeros(2 * ns.len(), 9);
    for (i, (&(x, y), &(u, v))) in ns.iter().zip(&nd).enumerate() {
        let r0 = 2 * i;
        a[(r0, 3)] = -x;
        a[(r0, 4)] = -y;
        a[(r0, 5)] = -1.0;
        a[(r0, 6)] = v * x;
        a[(r0, 7)] = v * y;
        a[(r0, 8)] = v;
        let r1 = r0 + 1;
        a[(r1, 0)] = x;
        a[(r1, 1)] = y;
        a[(r1, 2)] = 1.0;
        a[(r1, 6)] = -u * x;
        a[(r1, 7)] = -u * y;
        a[(r1, 8)] = -u;
    }

    let eig = nalgebra::SymmetricEigen::new(a.transpose() * &a);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    // A homography needs a one-dimensional null direction; a second
    // (near-)vanishing eigenvalue means the points do not pin one down.
    let lam_max = eig.eigenvalues[order[8]].max(f64::MIN_POSITIVE);
    if eig.eigenvalues[order[1]] <= 1e-12 * lam_max {
        return Err(AugmentError::Degenerate);
    }

    let hv = eig.eigenvectors.column(order[0]);
    let hn = Matrix3::new(hv[0], hv[1], hv[2], hv[3], hv[4], hv[5], hv[6], hv[7], hv[8]);
    let t_dst_inv = t_dst.try_inverse().ok_or(AugmentError::Degenerate)?;
    let homography = Homography::from_matrix(t_dst_inv * hn * t_src)?;

    let mut sq_sum = 0.0;
    for (&s, &d) in src.iter().zip(dst) {
        let m = homography.apply(s);
        sq_sum += (m.0 - d.0).powi(2) + (m.1 - d.1).powi(2);
    }
    let rms_residual = (sq_sum / src.len() as f64).sqrt();
    Ok(HomographyFit {
        homography,
        rms_residual,
    })
}

/// Translate the centroid to the origin and scale so the RMS distance
/// from it is sqrt(2).
fn normalizing_similarity(pts: &[(f64, f64)]) -> Result<Matrix3<f64>, AugmentError> {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(ax, ay), p| (ax + p.0 / n, ay + p.1 / n));
    let rms = (pts
        .iter()
        .map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if rms < 1e-12 {
        return Err(AugmentError::Degenerate);
    }
    let s = 2f64.sqrt() / rms;
    Ok(Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0))
}

fn apply_affine(t: &Matrix3<f64>, p: (f64, f64)) -> (f64, f64) {
    let v = t * Vector3::new(p.0, p.1, 1.0);
    (v.x, v.y)
}

/// Homography realizing an azimuth shift: project the cloud at the
/// annotated viewpoint and at the shifted one, then fit the map between
/// the two projections.
pub fn azimuth_homography(
    cloud: &PointCloud,
    vp: &Viewpoint,
    delta_az: f64,
    cam: &Camera,
) -> Result<HomographyFit, AugmentError> {
    let src = project_points(cloud, vp, cam)?;
    let shifted = Viewpoint::new(vp.az + delta_az, vp.el, vp.ct);
    let dst = project_points(cloud, &shifted, cam)?;
    estimate_homography(&src, &dst)
}

/// Inverse warp: each output pixel samples the input at the preimage of
/// its own (x, y) position.
pub fn warp_homography(img: &ImageGrid, h: &Homography) -> ImageGrid {
    let inv = h.inverse();
    ImageGrid::from_fn(img.rows(), img.cols(), |r, c| {
        let (x, y) = inv.apply((c as f64, r as f64));
        img.sample(y, x)
    })
}
