//! The segmentation driver: pre-smoothing, density estimation, forces,
//! explicit update, geodesic step and redistancing, iterated until the
//! level set stops moving.

use crate::curvature::{self, PresmoothParams};
use crate::density::ShapeModel;
use crate::error::{Error, Result};
use crate::forces;
use crate::grid::{self, ScalarField};
use crate::levelset::{self, BinaryMask, LevelSet};

/// Half-width of the band used for the gradient-norm check, px.
pub const HYGIENE_BAND: f64 = 5.0;

/// Flow weights, step sizes and stopping rule.
///
/// The explicit update is `phi += dt * speed_scale * (alpha V_B + beta V_c~)`
/// where `V_B` is the smoothed-indicator photometric gradient and `V_c~` the
/// shape force blurred with `shape_sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub eps: f64,
    pub gamma: f64,
    pub diff_steps: usize,
    pub dtau: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub edge_sigma: f64,
    /// Converts force units (unit-area domain) to px per unit time.
    pub speed_scale: f64,
    /// Gaussian preconditioning width for the shape force, px.
    pub shape_sigma: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 5.0,
            dt: 5.0,
            eps: 2.0,
            gamma: 0.01,
            diff_steps: 4,
            dtau: 5.0,
            tol: 1e-3,
            max_iters: 500,
            edge_sigma: 1.5,
            speed_scale: 0.025,
            shape_sigma: 3.0,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("dt", self.dt),
            ("eps", self.eps),
            ("gamma", self.gamma),
            ("dtau", self.dtau),
            ("tol", self.tol),
            ("edge-sigma", self.edge_sigma),
            ("speed-scale", self.speed_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gamma > 1.0 {
            return Err(Error::InvalidParameter(format!("gamma must be at most 1, got {}", self.gamma)));
        }
        if !(self.shape_sigma >= 0.0) || !self.shape_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("shape-sigma must be >= 0, got {}", self.shape_sigma)));
        }
        if self.diff_steps == 0 {
            return Err(Error::InvalidParameter("diff-steps must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max-iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn presmooth(&self) -> PresmoothParams {
        PresmoothParams { gamma: self.gamma, steps: self.diff_steps, dtau: self.dtau, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Collapsed,
}

/// One iteration: coefficients (photometric with the smoothed indicator) of
/// the iterate the forces were computed on,
/// the resulting change and the redistancing checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub b: f64,
    pub b_c: f64,
    pub delta: f64,
    /// Median `|grad phi|` over `|phi| <= 5` after redistancing.
    pub grad_median: f64,
    /// Zero-level displacement caused by redistancing, px.
    pub redistance_shift: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentationReport {
    pub final_phi: LevelSet,
    pub mask: BinaryMask,
    pub iterations: usize,
    pub trace: Vec<IterRecord>,
    pub status: Status,
}

impl SegmentationReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Mean absolute per-pixel difference.
pub fn convergence_delta(new: &LevelSet, old: &LevelSet) -> Result<f64> {
    new.phi().check_same_shape(old.phi(), "convergence delta")?;
    let a = new.phi().as_slice();
    let b = old.phi().as_slice();
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

struct Step {
    phi: LevelSet,
    record: IterRecord,
}

enum Outcome {
    Next(Step),
    Collapse,
}

fn collapse_error(e: &Error) -> bool {
    matches!(e, Error::EmptyRegion | Error::EmptyBand | Error::SingleSigned | Error::ZeroWeight)
}

fn iterate(
    iter: usize,
    phi: &LevelSet,
    features: &[ScalarField],
    g: &ScalarField,
    model: &ShapeModel,
    params: &FlowParams,
) -> Result<Outcome> {
    let smoothed = curvature::anisotropic_presmooth(phi, &params.presmooth())?;
    let kappa = curvature::curvature_field(&smoothed)?;
    let vb = match forces::smoothed_photometric_force(features, phi, &model.photometric, params.eps) {
        Ok(v) => v,
        Err(e) if collapse_error(&e) => return Ok(Outcome::Collapse),
        Err(e) => return Err(e),
    };
    let vc = match forces::shape_force(phi, &smoothed, &kappa, &model.curvature, params.eps) {
        Ok(v) => v,
        Err(e) if collapse_error(&e) => return Ok(Outcome::Collapse),
        Err(e) => return Err(e),
    };
    let shape = if params.shape_sigma > 0.0 { grid::gaussian_smooth(&vc.force, params.shape_sigma)? } else { vc.force };
    let gain = params.dt * params.speed_scale;
    let speed = vb.force.zip_map(&shape, |a, c| params.alpha * a + params.beta * c);
    let moved = LevelSet::from_field(phi.phi().zip_map(&speed, |p, v| p + gain * v));
    let geodesic = forces::geodesic_step(&moved, g, params.dt)?;
    if !geodesic.has_both_signs() {
        return Ok(Outcome::Collapse);
    }
    let next = levelset::redistance(&geodesic)?;
    let redistance_shift = levelset::contour_displacement(geodesic.phi(), next.phi());
    let grad_median = levelset::band_gradient_median(next.phi(), HYGIENE_BAND)?;
    let delta = convergence_delta(&next, phi)?;
    Ok(Outcome::Next(Step {
        phi: next,
        record: IterRecord { iter, b: vb.b, b_c: vc.b_c, delta, grad_median, redistance_shift },
    }))
}

/// Evolves `phi0` on `image` until the mean per-pixel change drops to
/// `tol`, the iteration budget runs out or the contour vanishes.
pub fn segment(
    image: &ScalarField,
    model: &ShapeModel,
    params: &FlowParams,
    phi0: &LevelSet,
) -> Result<SegmentationReport> {
    params.validate()?;
    image.check_same_shape(phi0.phi(), "image vs initial level set")?;
    if !phi0.has_both_signs() {
        return Err(Error::SingleSigned);
    }
    let features = model.features.extract(image)?;
    let g = forces::edge_detector(image, params.edge_sigma)?;
    let mut phi = if phi0.is_signed_distance() { phi0.clone() } else { levelset::redistance(phi0)? };
    let mut trace = Vec::new();
    let mut status = Status::MaxIters;
    for iter in 0..params.max_iters {
        match iterate(iter, &phi, &features, &g, model, params)? {
            Outcome::Collapse => {
                status = Status::Collapsed;
                break;
            }
            Outcome::Next(step) => {
                phi = step.phi;
                trace.push(step.record);
                if step.record.delta <= params.tol {
                    status = Status::Converged;
                    break;
                }
            }
        }
    }
    Ok(SegmentationReport { mask: phi.mask(), iterations: trace.len(), final_phi: phi, trace, status })
}
