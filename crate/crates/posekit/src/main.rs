//! Command-line front end for the pose toolkit: synthetic dataset
//! generation, two-stage training runs, jitter-grid export, and metric
//! report tables.
//!
//! All angles on the command line and in text files are degrees; the
//! library works in radians internally. Exit codes: 0 success, 2 bad
//! flags or unparsable/invalid input, 3 numeric failure, 4 I/O failure.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use posekit::augment::{
    azimuth_homography, jitter_grid, rotate_inplane, warp_homography, AugmentError, Camera,
    ImageGrid, JitterConfig, JitterEntry, PointCloud,
};
use posekit::data::{read_dataset, write_dataset, DataError, PoseDistribution, SyntheticSpec};
use posekit::eval::{
    arp, avp, cost1, cost2, format_report, median_angle_error, read_records, write_records,
    CategoryMetric, EvalError, EvalRecord, ReportRow,
};
use posekit::io::atomic_write_text;
use posekit::network::{CategoryBank, Head, NetworkError};
use posekit::optim::{train_two_stage, write_trace, TrainConfig, TrainError};
use posekit::rotation::{RotationMatrix, Viewpoint};

#[derive(Parser)]
#[command(name = "posekit", version, about = "Pose regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic feature-to-pose dataset.
    Synth(SynthArgs),
    /// Train per-category networks from a config file and a dataset.
    Train(TrainArgs),
    /// Print a metric report table for a record file.
    Eval(EvalArgs),
    /// Expand annotated viewpoints into a jittered sample manifest.
    Augment(AugmentArgs),
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => run_synth(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Augment(a) => run_augment(a),
    }
}

// ---------------------------------------------------------------------------
// Errors

/// One bucket per exit code, message already fully formatted.
#[derive(Debug)]
enum CliError {
    Parse(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (CliError::Parse(m) | CliError::Numeric(m) | CliError::Io(m)) = self;
        f.write_str(m)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn data_err(path: &Path, e: DataError) -> CliError {
    let m = format!("{}: {e}", path.display());
    match e {
        DataError::Io(_) => CliError::Io(m),
        _ => CliError::Parse(m),
    }
}

fn eval_file_err(path: &Path, e: EvalError) -> CliError {
    let m = format!("{}: {e}", path.display());
    match e {
        EvalError::Io(_) => CliError::Io(m),
        _ => CliError::Parse(m),
    }
}

fn metric_err(e: EvalError) -> CliError {
    CliError::Parse(e.to_string())
}

fn augment_err(context: &Path, e: AugmentError) -> CliError {
    let m = format!("{}: {e}", context.display());
    match e {
        AugmentError::Io(_) => CliError::Io(m),
        AugmentError::Degenerate
        | AugmentError::NotInvertible(_)
        | AugmentError::PointBehindCamera { .. } => CliError::Numeric(m),
        _ => CliError::Parse(m),
    }
}

fn network_err(context: &Path, e: NetworkError) -> CliError {
    let m = format!("{}: {e}", context.display());
    match e {
        NetworkError::Io(_) => CliError::Io(m),
        NetworkError::ZeroHeadInput { .. } => CliError::Numeric(m),
        _ => CliError::Parse(m),
    }
}

fn train_err(e: TrainError) -> CliError {
    let m = e.to_string();
    match e {
        TrainError::NonFiniteGradient { .. }
        | TrainError::NonFiniteLoss { .. }
        | TrainError::Loss(_) => CliError::Numeric(m),
        TrainError::Io(_) | TrainError::Network(NetworkError::Io(_)) => CliError::Io(m),
        _ => CliError::Parse(m),
    }
}

fn config_err(path: &Path, e: TrainError) -> CliError {
    let m = format!("{}: {e}", path.display());
    match e {
        TrainError::Io(_) => CliError::Io(m),
        _ => CliError::Parse(m),
    }
}

// ---------------------------------------------------------------------------
// synth

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Dist {
    /// Haar-uniform over all rotations.
    Uniform,
    /// Independent uniform viewpoint angles in the --az/--el/--ct ranges.
    Viewpoint,
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
    /// Category ids, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    categories: Vec<u32>,
    /// Samples per category.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Standard deviation of the additive feature noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pose distribution.
    #[arg(long, value_enum, default_value_t = Dist::Uniform)]
    dist: Dist,
    /// Azimuth range in degrees as lo:hi (viewpoint mode).
    #[arg(long, value_parser = parse_degree_range, allow_hyphen_values = true)]
    az: Option<(f64, f64)>,
    /// Elevation range in degrees as lo:hi (viewpoint mode).
    #[arg(long, value_parser = parse_degree_range, allow_hyphen_values = true)]
    el: Option<(f64, f64)>,
    /// Tilt range in degrees as lo:hi (viewpoint mode).
    #[arg(long, value_parser = parse_degree_range, allow_hyphen_values = true)]
    ct: Option<(f64, f64)>,
}

fn parse_degree_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number '{hi}'"))?;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(format!("need finite lo <= hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn run_synth(a: SynthArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Parse("--samples must be at least 1".into()));
    }
    if a.dim == 0 {
        return Err(CliError::Parse("--dim must be at least 1".into()));
    }
    if !(a.noise >= 0.0) {
        return Err(CliError::Parse("--noise must be nonnegative".into()));
    }
    let mut seen = BTreeSet::new();
    for &c in &a.categories {
        if !seen.insert(c) {
            return Err(CliError::Parse(format!("duplicate category id {c}")));
        }
    }

    let distribution = match a.dist {
        Dist::Uniform => {
            if a.az.is_some() || a.el.is_some() || a.ct.is_some() {
                return Err(CliError::Parse(
                    "--az/--el/--ct apply only with --dist viewpoint".into(),
                ));
            }
            PoseDistribution::UniformSo3
        }
        Dist::Viewpoint => {
            let rad = |r: (f64, f64)| (r.0.to_radians(), r.1.to_radians());
            PoseDistribution::ViewpointRanges {
                az: rad(a.az.unwrap_or((-180.0, 180.0))),
                el: rad(a.el.unwrap_or((-90.0, 90.0))),
                ct: rad(a.ct.unwrap_or((-180.0, 180.0))),
            }
        }
    };

    let spec = SyntheticSpec {
        categories: a.categories,
        samples_per_category: a.samples,
        feature_dim: a.dim,
        noise: a.noise,
        distribution,
        seed: a.seed,
    };
    let samples = spec.generate();
    write_dataset(&a.out, &samples).map_err(|e| data_err(&a.out, e))?;
    println!("wrote {} ({} samples)", a.out.display(), samples.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Args)]
struct TrainArgs {
    /// Training config, TOML.
    #[arg(long)]
    config: PathBuf,
    /// Training dataset.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional loss trace output path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config head: axisangle or quat.
    #[arg(long)]
    head: Option<String>,
    /// Dataset to predict on once training is done.
    #[arg(long, requires = "pred_out")]
    test_data: Option<PathBuf>,
    /// Record file receiving the test-set predictions.
    #[arg(long, requires = "test_data")]
    pred_out: Option<PathBuf>,
}

fn run_train(a: TrainArgs) -> Result<(), CliError> {
    let mut config = TrainConfig::load(&a.config).map_err(|e| config_err(&a.config, e))?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(name) = &a.head {
        config.head = Head::from_name(name).ok_or_else(|| {
            CliError::Parse(format!("unknown head '{name}' (use axisangle or quat)"))
        })?;
    }

    let samples = read_dataset(&a.data).map_err(|e| data_err(&a.data, e))?;
    if samples.is_empty() {
        return Err(CliError::Parse(format!(
            "{}: dataset has no samples",
            a.data.display()
        )));
    }
    let input_dim = samples[0].features.len();
    let categories: Vec<u32> = samples.iter().map(|s| s.category).collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut bank = CategoryBank::init(&categories, input_dim, config.hidden, config.head, config.seed);
    let trace = train_two_stage(&mut bank, &samples, &config).map_err(train_err)?;

    bank.save(&a.out).map_err(|e| network_err(&a.out, e))?;
    println!("wrote {}", a.out.display());
    if let Some(path) = &a.trace {
        write_trace(path, &trace).map_err(train_err)?;
        println!("wrote {}", path.display());
    }

    if let (Some(test_path), Some(pred_path)) = (&a.test_data, &a.pred_out) {
        let test = read_dataset(test_path).map_err(|e| data_err(test_path, e))?;
        let mut records = Vec::with_capacity(test.len());
        for s in &test {
            let pred = bank
                .predict(s.category, &s.features)
                .map_err(|e| network_err(test_path, e))?;
            records.push(EvalRecord::pose_only(s.category, s.rotation, pred));
        }
        write_records(pred_path, &records).map_err(|e| eval_file_err(pred_path, e))?;
        println!("wrote {}", pred_path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Args)]
#[command(group(
    ArgGroup::new("metric")
        .required(true)
        .args(["median", "arp", "avp", "cost1", "cost2"])
))]
struct EvalArgs {
    /// Record file pairing each prediction with its ground truth.
    records: PathBuf,
    /// Median geodesic angle error per category, degrees.
    #[arg(long)]
    median: bool,
    /// Pose-aware average precision at the --theta threshold.
    #[arg(long)]
    arp: bool,
    /// Azimuth-binned average precision with --bins bins.
    #[arg(long)]
    avp: bool,
    /// Mean nearest-neighbor distance from each ground-truth pose to
    /// the --train-poses set.
    #[arg(long)]
    cost1: bool,
    /// Fraction of ground-truth poses within --eps of the --train-poses
    /// set.
    #[arg(long)]
    cost2: bool,
    /// Angle threshold for --arp, degrees.
    #[arg(long, default_value_t = 30.0)]
    theta: f64,
    /// Azimuth bin count for --avp: 4, 8, 16 or 24.
    #[arg(long, default_value_t = 24)]
    bins: usize,
    /// Distance threshold for --cost2, radians.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Detection overlap threshold for --arp and --avp.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Reference pose set for the coverage costs; a dataset or record
    /// file, told apart by header.
    #[arg(long)]
    train_poses: Option<PathBuf>,
}

fn run_eval(a: EvalArgs) -> Result<(), CliError> {
    let records = read_records(&a.records).map_err(|e| eval_file_err(&a.records, e))?;

    let (label, metric) = if a.median {
        ("MedErr(deg)".to_string(), median_angle_error(&records).map_err(metric_err)?)
    } else if a.arp {
        (
            format!("ARP({}deg)", a.theta),
            arp(&records, a.theta.to_radians(), a.iou).map_err(metric_err)?,
        )
    } else if a.avp {
        (format!("AVP-{}", a.bins), avp(&records, a.bins, a.iou).map_err(metric_err)?)
    } else {
        let reference_path = a.train_poses.as_ref().ok_or_else(|| {
            CliError::Parse("--cost1/--cost2 need --train-poses".into())
        })?;
        let reference = poses_by_category(reference_path)?;
        if records.is_empty() {
            return Err(metric_err(EvalError::Empty));
        }
        let mut test: BTreeMap<u32, Vec<RotationMatrix>> = BTreeMap::new();
        for r in &records {
            test.entry(r.category).or_default().push(r.gt_rotation);
        }
        let mut by_category = BTreeMap::new();
        for (cat, poses) in &test {
            let train = reference.get(cat).ok_or_else(|| {
                CliError::Parse(format!(
                    "{}: no poses for category {cat}",
                    reference_path.display()
                ))
            })?;
            let value = if a.cost1 {
                cost1(poses, train)
            } else {
                cost2(poses, train, a.eps)
            }
            .map_err(metric_err)?;
            by_category.insert(*cat, value);
        }
        let mean = by_category.values().sum::<f64>() / by_category.len() as f64;
        let label = if a.cost1 {
            "Cost1".to_string()
        } else {
            format!("Cost2(eps={})", a.eps)
        };
        (label, CategoryMetric { by_category, mean })
    };

    print!("{}", format_report(&[ReportRow { label, metric }]));
    Ok(())
}

/// Ground-truth rotations grouped by category, from either file kind.
fn poses_by_category(path: &Path) -> Result<BTreeMap<u32, Vec<RotationMatrix>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let header = text.lines().next().unwrap_or("");
    let mut out: BTreeMap<u32, Vec<RotationMatrix>> = BTreeMap::new();
    if header.starts_with("posekit-dataset") {
        for s in read_dataset(path).map_err(|e| data_err(path, e))? {
            out.entry(s.category).or_default().push(s.rotation);
        }
    } else if header.starts_with("posekit-eval") {
        for r in read_records(path).map_err(|e| eval_file_err(path, e))? {
            out.entry(r.category).or_default().push(r.gt_rotation);
        }
    } else {
        return Err(CliError::Parse(format!(
            "{}: expected a dataset or record file",
            path.display()
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// augment

#[derive(Args)]
struct AugmentArgs {
    /// Manifest output path.
    #[arg(long)]
    out: PathBuf,
    /// Viewpoint file: az/el/ct degree rows under a posekit-poses
    /// header.
    #[arg(long, conflicts_with_all = ["az", "el", "ct"])]
    poses: Option<PathBuf>,
    /// Annotated azimuth, degrees (single-pose mode).
    #[arg(long, allow_negative_numbers = true)]
    az: Option<f64>,
    /// Annotated elevation, degrees.
    #[arg(long, allow_negative_numbers = true)]
    el: Option<f64>,
    /// Annotated in-plane tilt, degrees.
    #[arg(long, allow_negative_numbers = true)]
    ct: Option<f64>,
    /// Tilt jitter half-range, degrees.
    #[arg(long, default_value_t = 4.0)]
    ct_range: f64,
    /// Tilt jitter step, degrees.
    #[arg(long, default_value_t = 1.0)]
    ct_step: f64,
    /// Azimuth jitter half-range, degrees.
    #[arg(long, default_value_t = 2.0)]
    az_range: f64,
    /// Azimuth jitter step, degrees.
    #[arg(long, default_value_t = 0.5)]
    az_step: f64,
    /// Skip the mirrored copies.
    #[arg(long)]
    no_flip: bool,
    /// Source image to warp alongside the labels (needs --cloud and
    /// --out-dir).
    #[arg(long, requires = "cloud", requires = "out_dir")]
    image: Option<PathBuf>,
    /// Point cloud the azimuth homographies are fitted on.
    #[arg(long, requires = "image")]
    cloud: Option<PathBuf>,
    /// Directory for the warped images.
    #[arg(long, requires = "image")]
    out_dir: Option<PathBuf>,
    /// Camera focal length, pixels.
    #[arg(long, default_value_t = 150.0)]
    focal: f64,
    /// Principal point x; defaults to the image center.
    #[arg(long)]
    cx: Option<f64>,
    /// Principal point y; defaults to the image center.
    #[arg(long)]
    cy: Option<f64>,
    /// Object distance along the camera axis.
    #[arg(long, default_value_t = 10.0)]
    distance: f64,
}

fn run_augment(a: AugmentArgs) -> Result<(), CliError> {
    let poses = match (&a.poses, a.az, a.el, a.ct) {
        (Some(path), None, None, None) => read_poses_file(path)?,
        (None, Some(az), Some(el), Some(ct)) => vec![Viewpoint::from_degrees(az, el, ct)],
        _ => {
            return Err(CliError::Parse(
                "give either --poses or all of --az --el --ct".into(),
            ))
        }
    };

    let config = JitterConfig {
        ct_range: a.ct_range.to_radians(),
        ct_step: a.ct_step.to_radians(),
        az_range: a.az_range.to_radians(),
        az_step: a.az_step.to_radians(),
        include_flips: !a.no_flip,
    };
    config
        .validate()
        .map_err(|e| CliError::Parse(e.to_string()))?;

    let warper = match (&a.image, &a.cloud, &a.out_dir) {
        (Some(image), Some(cloud), Some(out_dir)) => {
            let img = ImageGrid::read(image).map_err(|e| augment_err(image, e))?;
            let points = PointCloud::read(cloud).map_err(|e| augment_err(cloud, e))?;
            let camera = Camera {
                focal: a.focal,
                cx: a.cx.unwrap_or((img.cols() as f64 - 1.0) / 2.0),
                cy: a.cy.unwrap_or((img.rows() as f64 - 1.0) / 2.0),
                distance: a.distance,
            };
            std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
            Some((img, points, camera, out_dir.clone()))
        }
        _ => None,
    };

    let mut lines = vec!["posekit-manifest v1".to_string()];
    let mut rows = 0usize;
    for (pi, vp) in poses.iter().enumerate() {
        for (ei, entry) in jitter_grid(vp, &config).iter().enumerate() {
            let (az, el, ct) = entry.viewpoint.to_degrees();
            let mut line = format!(
                "{pi} {} {} {} {az} {el} {ct}",
                entry.delta_az.to_degrees(),
                entry.delta_ct.to_degrees(),
                entry.flipped as u8,
            );
            if let Some((img, points, camera, out_dir)) = &warper {
                let path = out_dir.join(format!("aug_{pi:03}_{ei:03}.txt"));
                let warped = warp_entry(img, points, camera, vp, entry).map_err(|e| {
                    augment_err(a.cloud.as_deref().unwrap_or(Path::new("cloud")), e)
                })?;
                warped.write(&path).map_err(|e| augment_err(&path, e))?;
                line.push(' ');
                line.push_str(&path.display().to_string());
            }
            lines.push(line);
            rows += 1;
        }
    }
    lines.push(String::new());
    atomic_write_text(&a.out, &lines.join("\n")).map_err(|e| io_err(&a.out, e))?;
    println!("wrote {} ({rows} rows)", a.out.display());
    Ok(())
}

/// Applies one grid entry to the source image: in-plane rotation for
/// the tilt shift, a cloud-fitted homography for the azimuth shift,
/// then a mirror when the entry is flipped.
fn warp_entry(
    img: &ImageGrid,
    points: &PointCloud,
    camera: &Camera,
    base: &Viewpoint,
    entry: &JitterEntry,
) -> Result<ImageGrid, AugmentError> {
    let mut out = if entry.delta_ct != 0.0 {
        rotate_inplane(img, -entry.delta_ct)
    } else {
        img.clone()
    };
    if entry.delta_az != 0.0 {
        let tilted = Viewpoint::new(base.az, base.el, base.ct + entry.delta_ct);
        let fit = azimuth_homography(points, &tilted, entry.delta_az, camera)?;
        out = warp_homography(&out, &fit.homography);
    }
    if entry.flipped {
        out = out.flip_horizontal();
    }
    Ok(out)
}

/// Reads the poses file: a `posekit-poses v1` header, then one
/// `az el ct` degree triple per line. Blank lines and `#` comments are
/// skipped.
fn read_poses_file(path: &Path) -> Result<Vec<Viewpoint>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "posekit-poses v1" => {}
        _ => {
            return Err(CliError::Parse(format!(
                "{}: not a poses file (missing or wrong header)",
                path.display()
            )))
        }
    }
    let mut poses = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_line_err(path, i + 1, "expected three numbers"))?;
        if nums.len() != 3 {
            return Err(parse_line_err(path, i + 1, "expected az el ct"));
        }
        poses.push(Viewpoint::from_degrees(nums[0], nums[1], nums[2]));
    }
    if poses.is_empty() {
        return Err(CliError::Parse(format!(
            "{}: no poses in file",
            path.display()
        )));
    }
    Ok(poses)
}

fn parse_line_err(path: &Path, line: usize, what: &str) -> CliError {
    CliError::Parse(format!("{}: line {line}: {what}", path.display()))
}
