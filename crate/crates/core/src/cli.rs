//! Command-line subcommands: `train`, `segment`, `eval`, `corrupt`,
//! `shapes` and `outlier`.
//!
//! Exit codes: 0 success or convergence, 2 validation or I/O error,
//! 3 iteration budget exhausted, 4 contour collapse.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::datagen::{self, CorruptionParams};
use crate::density::{self, CurvatureModelParams, FeatureSpec, ShapeModel};
use crate::error::{Error, Result};
use crate::grid::{pnm, ScalarField};
use crate::levelset::{self, BinaryMask, LevelSet};
use crate::metrics::{MetricsReport, CSV_HEADER, DEFAULT_RAYS};
use crate::solver::{self, FlowParams, SegmentationReport, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_MAX_ITERS: i32 = 3;
pub const EXIT_COLLAPSED: i32 = 4;

/// Column header of the trace CSV.
pub const TRACE_HEADER: &str = "iter,B,Bc,delta";

#[derive(Debug, Parser)]
#[command(name = "weakshape", version, about = "Level-set segmentation by distribution tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a model from image/mask pairs.
    Train(TrainArgs),
    /// Segment an image with a learned model.
    Segment(Box<SegmentArgs>),
    /// Score an estimated mask against the truth.
    Eval(EvalArgs),
    /// Render a mask and apply line clutter and noise.
    Corrupt(CorruptArgs),
    /// Write a synthetic shape family as masks.
    Shapes(ShapesArgs),
    /// Write an elliptic outlier mask of a given area.
    Outlier(OutlierArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training image (PGM); repeat once per pair.
    #[arg(long = "image", required = true)]
    pub images: Vec<PathBuf>,
    /// Training mask (PGM), in the same order as the images.
    #[arg(long = "mask", required = true)]
    pub masks: Vec<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Blur width of the second feature channel.
    #[arg(long, default_value_t = FeatureSpec::default().smoothing_sigma)]
    pub smoothing_sigma: f64,
}

#[derive(Debug, Args, Default)]
pub struct FlowArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub diff_steps: Option<usize>,
    #[arg(long)]
    pub dtau: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub edge_sigma: Option<f64>,
    #[arg(long)]
    pub speed_scale: Option<f64>,
    #[arg(long)]
    pub shape_sigma: Option<f64>,
}

impl FlowArgs {
    pub fn params(&self) -> FlowParams {
        let d = FlowParams::default();
        FlowParams {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            dt: self.dt.unwrap_or(d.dt),
            eps: self.eps.unwrap_or(d.eps),
            gamma: self.gamma.unwrap_or(d.gamma),
            diff_steps: self.diff_steps.unwrap_or(d.diff_steps),
            dtau: self.dtau.unwrap_or(d.dtau),
            tol: self.tol.unwrap_or(d.tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            edge_sigma: self.edge_sigma.unwrap_or(d.edge_sigma),
            speed_scale: self.speed_scale.unwrap_or(d.speed_scale),
            shape_sigma: self.shape_sigma.unwrap_or(d.shape_sigma),
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Initial circle `cx,cy,r` in pixels.
    #[arg(long, value_parser = parse_circle, conflicts_with = "init_mask", required_unless_present = "init_mask")]
    pub init_circle: Option<(f64, f64, f64)>,
    /// Initial region as a mask PGM.
    #[arg(long)]
    pub init_mask: Option<PathBuf>,
    /// Writes `<prefix>.mask.pgm`, `<prefix>.overlay.ppm` and `<prefix>.trace.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[command(flatten)]
    pub flow: FlowArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RAYS)]
    pub rays: usize,
    /// Print the column header before the row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    pub object: f64,
    #[arg(long, default_value_t = 200.0)]
    pub background: f64,
    #[arg(long, default_value_t = CorruptionParams::default().n_h)]
    pub n_h: usize,
    #[arg(long, default_value_t = CorruptionParams::default().n_v)]
    pub n_v: usize,
    #[arg(long, default_value_t = CorruptionParams::default().line_width)]
    pub line_width: usize,
    #[arg(long, default_value_t = CorruptionParams::default().line_value)]
    pub line_value: f64,
    #[arg(long, default_value_t = CorruptionParams::default().noise_sigma)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ShapesArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    /// Directory receiving `shape_NN.pgm`; must exist.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutlierArgs {
    #[arg(long)]
    pub area: f64,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_circle(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected cx,cy,r, got {s:?}"));
    }
    let v = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if !v.iter().all(|x| x.is_finite()) {
        return Err(format!("non-finite value in {s:?}"));
    }
    Ok((v[0], v[1], v[2]))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingFile(path.to_path_buf()))
    }
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::MissingFile(p.to_path_buf())),
        _ => Ok(()),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Output paths of a segmentation run.
pub fn output_paths(prefix: &Path) -> [PathBuf; 3] {
    [with_suffix(prefix, ".mask.pgm"), with_suffix(prefix, ".overlay.ppm"), with_suffix(prefix, ".trace.csv")]
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIters => "max-iters",
        Status::Collapsed => "collapsed",
    }
}

pub fn exit_code(s: Status) -> i32 {
    match s {
        Status::Converged => EXIT_OK,
        Status::MaxIters => EXIT_MAX_ITERS,
        Status::Collapsed => EXIT_COLLAPSED,
    }
}

/// Trace CSV: a `#` line with the flow parameters and the final status,
/// then [`TRACE_HEADER`] and one row per iteration.
pub fn trace_csv(params: &FlowParams, report: &SegmentationReport) -> String {
    let p = params;
    let mut out = String::new();
    writeln!(
        out,
        "# alpha={} beta={} dt={} eps={} gamma={} diff_steps={} dtau={} tol={} max_iters={} edge_sigma={} \
         speed_scale={} shape_sigma={} status={}",
        p.alpha,
        p.beta,
        p.dt,
        p.eps,
        p.gamma,
        p.diff_steps,
        p.dtau,
        p.tol,
        p.max_iters,
        p.edge_sigma,
        p.speed_scale,
        p.shape_sigma,
        status_name(report.status)
    )
    .unwrap();
    writeln!(out, "{TRACE_HEADER}").unwrap();
    for r in &report.trace {
        writeln!(out, "{},{},{},{}", r.iter, r.b, r.b_c, r.delta).unwrap();
    }
    out
}

/// Writes the mask, overlay and trace of a run next to `prefix`.
pub fn write_segmentation(
    prefix: &Path,
    image: &ScalarField,
    params: &FlowParams,
    report: &SegmentationReport,
) -> Result<()> {
    let [mask, overlay, trace] = output_paths(prefix);
    let overlay_bytes = pnm::encode_overlay(image, &report.mask)?;
    pnm::write_atomic(mask, &pnm::encode_mask(&report.mask))?;
    pnm::write_atomic(overlay, &overlay_bytes)?;
    pnm::write_atomic(trace, trace_csv(params, report).as_bytes())
}

/// Circle initialization; fails when the disk misses the frame or covers it.
pub fn init_circle(width: usize, height: usize, (cx, cy, r): (f64, f64, f64)) -> Result<LevelSet> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("circle radius must be positive, got {r}")));
    }
    let phi = LevelSet::circle(width, height, cx, cy, r);
    if !phi.has_both_signs() {
        return Err(Error::InvalidParameter(format!(
            "circle ({cx}, {cy}, {r}) does not cross the {width}x{height} frame"
        )));
    }
    Ok(phi)
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<i32> {
    if a.images.len() != a.masks.len() {
        return Err(Error::InvalidParameter(format!("{} images but {} masks", a.images.len(), a.masks.len())));
    }
    for p in a.images.iter().chain(&a.masks) {
        require_file(p)?;
    }
    require_parent(&a.out)?;
    let mut pairs = Vec::with_capacity(a.images.len());
    for (i, m) in a.images.iter().zip(&a.masks) {
        let image = pnm::load_image(i)?;
        let mask = pnm::load_mask(m)?;
        if mask.is_empty() {
            return Err(Error::DegenerateMask(format!("{} has no object pixels", m.display())));
        }
        pairs.push((image, mask));
    }
    let features = FeatureSpec { smoothing_sigma: a.smoothing_sigma };
    let photometric = density::learn_photometric_model(&pairs, &features)?;
    let masks: Vec<BinaryMask> = pairs.into_iter().map(|p| p.1).collect();
    let curvature = density::learn_curvature_model(&masks, &CurvatureModelParams::default())?;
    let model = ShapeModel::new(photometric, curvature, features)?;
    model.save(&a.out)?;
    let report = |out: &mut dyn Write, label: &str, d: &density::Density1D| {
        writeln!(out, "{label}: bandwidth {} bins {}", d.bandwidth(), d.grid().bins())
    };
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    for (k, d) in model.photometric.iter().enumerate() {
        report(out, &format!("photometric channel {k}"), d).map_err(io)?;
    }
    report(out, "curvature", &model.curvature).map_err(io)?;
    Ok(EXIT_OK)
}

fn segment(a: &SegmentArgs, out: &mut dyn Write) -> Result<i32> {
    require_file(&a.image)?;
    require_file(&a.model)?;
    if let Some(m) = &a.init_mask {
        require_file(m)?;
    }
    require_parent(&with_suffix(&a.out_prefix, ".mask.pgm"))?;
    let params = a.flow.params();
    params.validate()?;
    let image = pnm::load_image(&a.image)?;
    let model = ShapeModel::load(&a.model)?;
    let phi0 = match (&a.init_mask, a.init_circle) {
        (Some(m), _) => {
            let mask = pnm::load_mask(m)?;
            if mask.width() != image.width() || mask.height() != image.height() {
                return Err(Error::DimensionMismatch(format!(
                    "initial mask {}x{} vs image {}x{}",
                    mask.width(),
                    mask.height(),
                    image.width(),
                    image.height()
                )));
            }
            levelset::init_from_mask(&mask)?
        }
        (None, Some(c)) => init_circle(image.width(), image.height(), c)?,
        (None, None) => return Err(Error::InvalidParameter("an initial contour is required".into())),
    };
    let report = solver::segment(&image, &model, &params, &phi0)?;
    write_segmentation(&a.out_prefix, &image, &params, &report)?;
    let last = report.trace.last().map_or(f64::NAN, |r| r.delta);
    writeln!(out, "{} after {} iterations, final delta {}", status_name(report.status), report.iterations, last)
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(exit_code(report.status))
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    require_file(&a.truth)?;
    require_file(&a.estimate)?;
    let truth = pnm::load_mask(&a.truth)?;
    let estimate = pnm::load_mask(&a.estimate)?;
    let report = MetricsReport::evaluate(&truth, &estimate, a.rays)?;
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    if a.header {
        writeln!(out, "{CSV_HEADER}").map_err(io)?;
    }
    writeln!(out, "{}", report.to_csv_row()).map_err(io)?;
    Ok(EXIT_OK)
}

fn corrupt(a: &CorruptArgs) -> Result<i32> {
    require_file(&a.mask)?;
    require_parent(&a.out)?;
    let c = CorruptionParams {
        n_h: a.n_h,
        n_v: a.n_v,
        line_width: a.line_width,
        line_value: a.line_value,
        noise_sigma: a.noise_sigma,
        rng_seed: a.seed,
    };
    c.validate()?;
    let mask = pnm::load_mask(&a.mask)?;
    let image = datagen::render_and_corrupt(&mask, a.object, a.background, &c)?;
    pnm::write_atomic(&a.out, &pnm::encode_pgm(&image))?;
    Ok(EXIT_OK)
}

fn shapes(a: &ShapesArgs) -> Result<i32> {
    if !a.out_dir.is_dir() {
        return Err(Error::MissingFile(a.out_dir.clone()));
    }
    let family = datagen::make_shape_family(a.seed, a.count, (a.width, a.height))?;
    for (i, m) in family.iter().enumerate() {
        pnm::write_atomic(a.out_dir.join(format!("shape_{i:02}.pgm")), &pnm::encode_mask(m))?;
    }
    Ok(EXIT_OK)
}

fn outlier(a: &OutlierArgs) -> Result<i32> {
    require_parent(&a.out)?;
    let m = datagen::outlier_blob(a.area, (a.width, a.height), a.seed)?;
    pnm::write_atomic(&a.out, &pnm::encode_mask(&m))?;
    Ok(EXIT_OK)
}

/// Runs one subcommand, returning its exit code. Diagnostics go to `err`.
pub fn run_command(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Train(a) => train(a, out),
        Command::Segment(a) => segment(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Corrupt(a) => corrupt(a),
        Command::Shapes(a) => shapes(a),
        Command::Outlier(a) => outlier(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_command(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_parsing() {
        assert_eq!(parse_circle("63.5, 64,30").unwrap(), (63.5, 64.0, 30.0));
        assert!(parse_circle("1,2").is_err());
        assert!(parse_circle("1,2,x").is_err());
        assert!(parse_circle("1,2,inf").is_err());
    }

    #[test]
    fn circle_must_cross_the_frame() {
        assert!(init_circle(64, 64, (32.0, 32.0, 10.0)).is_ok());
        assert!(init_circle(64, 64, (300.0, 300.0, 10.0)).is_err());
        assert!(init_circle(64, 64, (32.0, 32.0, 500.0)).is_err());
        assert!(init_circle(64, 64, (32.0, 32.0, -1.0)).is_err());
    }

    #[test]
    fn flow_flags_default_to_the_flow_defaults() {
        assert_eq!(FlowArgs::default().params(), FlowParams::default());
        let a = FlowArgs { beta: Some(2.0), max_iters: Some(7), ..Default::default() };
        let p = a.params();
        assert_eq!((p.beta, p.max_iters, p.alpha), (2.0, 7, FlowParams::default().alpha));
    }

    #[test]
    fn usage_errors_exit_with_validation_code() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["weakshape", "frobnicate"], &mut out, &mut err), EXIT_INVALID);
        assert_eq!(run(["weakshape", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(!out.is_empty());
    }
}
