//! The photometric tracking force, the curvature-distribution force and the
//! geodesic edge term.
//!
//! Spatial integrals use the unit-area measure of the image domain: a pixel
//! has area `1 / (w h)`. Forces are first variations under that measure, so
//! a positive value means a positive dB/dphi and pushes the contour in.

use crate::aos;
use crate::density::{self, Density1D, Grid1D, KernelTable, RATIO_FLOOR};
use crate::error::{Error, Result};
use crate::grid::{self, ScalarField};
use crate::levelset::{self, LevelSet};
use crate::par;

/// Per-pixel force values.
pub type ForceField = ScalarField;

/// Output of [`photometric_force`].
#[derive(Debug, Clone)]
pub struct PhotometricForce {
    pub force: ForceField,
    /// Product of the per-channel coefficients.
    pub b: f64,
    pub b_k: Vec<f64>,
    /// Region area in unit-domain measure.
    pub area: f64,
    pub empirical: Vec<Density1D>,
}

/// Output of [`shape_force`].
#[derive(Debug, Clone)]
pub struct ShapeForce {
    pub force: ForceField,
    pub b_c: f64,
    /// `sum delta_eps(phi~)` in unit-domain measure.
    pub band_mass: f64,
    pub empirical: Density1D,
}

/// `g = 1 / (1 + |grad I~|^2)` with `I~` the Gaussian-smoothed image.
pub fn edge_detector(image: &ScalarField, sigma: f64) -> Result<ScalarField> {
    let smooth = grid::gaussian_smooth(image, sigma)?;
    let g = grid::gradient(&smooth)?;
    Ok(g.x.zip_map(&g.y, |a, b| 1.0 / (1.0 + a * a + b * b)))
}

/// Bhattacharyya force of the region `{phi <= 0}` against the per-channel
/// model densities.
pub fn photometric_force(features: &[ScalarField], phi: &LevelSet, model: &[Density1D]) -> Result<PhotometricForce> {
    let weights = phi.phi().map(levelset::inside);
    weighted_photometric_force(features, &weights, model)
}

/// [`photometric_force`] for arbitrary non-negative region weights `w(x)`
/// in place of the sharp indicator: densities are `w`-weighted KDEs and the
/// force is `dB/dw` composed with `dw = -delta`. With a smoothed indicator
/// this is the exact derivative of the smoothed coefficient.
pub fn weighted_photometric_force(
    features: &[ScalarField],
    weights: &ScalarField,
    model: &[Density1D],
) -> Result<PhotometricForce> {
    if features.len() != model.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature channels for {} model channels",
            features.len(),
            model.len()
        )));
    }
    if features.is_empty() {
        return Err(Error::InvalidParameter("no feature channels".into()));
    }
    for f in features {
        f.check_same_shape(weights, "feature channel vs region")?;
    }
    let photometric = Grid1D::photometric();
    for m in model {
        if !m.grid().matches(&photometric) {
            return Err(Error::GridMismatch("photometric model must use the photometric grid".into()));
        }
    }
    let pixel = 1.0 / weights.len() as f64;
    let area = weights.sum() * pixel;
    if !(area > 0.0) {
        return Err(Error::EmptyRegion);
    }
    let empirical = features
        .iter()
        .zip(model)
        .map(|(f, m)| density::weighted_kde(f, weights, m.grid(), m.bandwidth()))
        .collect::<Result<Vec<_>>>()?;
    let (b, b_k) = density::bhattacharyya_product(model, &empirical)?;
    let tables = model
        .iter()
        .zip(&empirical)
        .map(|(m, p)| {
            let r = density::ratio_sqrt(m, p, RATIO_FLOOR)?;
            let kernel = KernelTable::gaussian(m.grid(), m.bandwidth());
            grid::correlate_values(&r, m.grid().step(), &kernel)
        })
        .collect::<Result<Vec<_>>>()?;
    let alpha: Vec<f64> =
        (0..b_k.len()).map(|k| b_k.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v).product()).collect();
    let (w, h) = (weights.width(), weights.height());
    let scale = 1.0 / (2.0 * area);
    let mut out = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..features.len() {
                let s = photometric.interpolate(&tables[k], features[k].get(x, y));
                acc += alpha[k] * (b_k[k] - s);
            }
            *o = scale * acc;
        }
    });
    Ok(PhotometricForce { force: ScalarField::new(w, h, out)?, b, b_k, area, empirical })
}

/// Force matching the curvature density along the smoothed contour to the
/// model: `V = (1/2) (lap[d (L*K')(kappa)] + d' ((L*K)(kappa) - B_c))` with
/// `d = delta_eps(phi~)` and `L = sqrt(C_m / C)`.
pub fn shape_force(
    phi: &LevelSet,
    phi_smoothed: &LevelSet,
    kappa: &ScalarField,
    model: &Density1D,
    eps: f64,
) -> Result<ShapeForce> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let smooth = phi_smoothed.phi();
    phi.phi().check_same_shape(smooth, "level set vs smoothed level set")?;
    smooth.check_same_shape(kappa, "smoothed level set vs curvature")?;
    let curv = Grid1D::curvature();
    if !model.grid().matches(&curv) {
        return Err(Error::GridMismatch("curvature model must use the curvature grid".into()));
    }
    let delta = smooth.map(|v| levelset::delta_eps(v, eps));
    let pixel = 1.0 / delta.len() as f64;
    let band_mass = delta.sum() * pixel;
    if !(band_mass > 0.0) {
        return Err(Error::EmptyBand);
    }
    let empirical = density::weighted_kde(kappa, &delta, &curv, model.bandwidth())?;
    let b_c = density::bhattacharyya(model, &empirical)?;
    let l = density::ratio_sqrt(model, &empirical, RATIO_FLOOR)?;
    let lk = grid::correlate_values(&l, curv.step(), &KernelTable::gaussian(&curv, model.bandwidth()))?;
    let lk1 = grid::correlate_values(&l, curv.step(), &KernelTable::gaussian_derivative(&curv, model.bandwidth()))?;
    let inner = ScalarField::new(
        delta.width(),
        delta.height(),
        delta
            .as_slice()
            .iter()
            .zip(kappa.as_slice())
            .map(|(&d, &k)| if d > 0.0 { d * curv.interpolate(&lk1, k) } else { 0.0 })
            .collect(),
    )?;
    let lap = grid::laplacian(&inner);
    let force = ScalarField::new(
        delta.width(),
        delta.height(),
        lap.as_slice()
            .iter()
            .zip(smooth.as_slice().iter().zip(kappa.as_slice()))
            .map(|(&lp, (&s, &k))| {
                let dp = levelset::delta_eps_prime(s, eps);
                let tail = if dp != 0.0 { dp * (curv.interpolate(&lk, k) - b_c) } else { 0.0 };
                0.5 * (lp + tail)
            })
            .collect(),
    )?;
    Ok(ShapeForce { force, b_c, band_mass, empirical })
}

/// Gradient of the photometric coefficient with respect to `phi` when the
/// region indicator is smoothed to `1 - H_eps(phi)`: the force of
/// [`weighted_photometric_force`] times `delta_eps(phi)`. Unlike the sharp
/// coefficient, this one varies continuously with sub-pixel contour motion.
pub fn smoothed_photometric_force(
    features: &[ScalarField],
    phi: &LevelSet,
    model: &[Density1D],
    eps: f64,
) -> Result<PhotometricForce> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let weights = phi.phi().map(|v| 1.0 - levelset::heaviside_eps(v, eps));
    let mut out = weighted_photometric_force(features, &weights, model)?;
    out.force = out.force.zip_map(phi.phi(), |f, v| f * levelset::delta_eps(v, eps));
    Ok(out)
}

/// One semi-implicit step of `phi_t = div(g grad phi / |grad phi|) |grad phi|`
/// with `|grad phi|` frozen at 1.
pub fn geodesic_step(phi: &LevelSet, g: &ScalarField, dt: f64) -> Result<LevelSet> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    phi.phi().check_same_shape(g, "level set vs edge map")?;
    Ok(LevelSet::from_field(aos::aos_step(phi.phi(), g, g, dt)))
}
