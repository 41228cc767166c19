//! Sampled 1-D densities, weighted kernel density estimation, model
//! learning and the Bhattacharyya similarity.

mod model;

pub use model::{FeatureSpec, ShapeModel, MODEL_HEADER};

use std::f64::consts::PI;

use crate::curvature::{self, PresmoothParams};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::levelset::{self, BinaryMask};
use crate::par;

/// Density floor used when dividing by an empirical density.
pub const RATIO_FLOOR: f64 = 1e-8;

/// Smallest bandwidth accepted by the learning routines, in bins.
pub const MIN_BANDWIDTH_BINS: f64 = 2.0;

/// Uniform grid of `bins` cells over `[min, max]`; samples sit at cell centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    min: f64,
    max: f64,
    bins: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, bins: usize) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::DegenerateGrid(format!("need min < max, got [{min}, {max}]")));
        }
        if bins < 8 {
            return Err(Error::DegenerateGrid(format!("need at least 8 bins, got {bins}")));
        }
        Ok(Self { min, max, bins })
    }

    /// `[0, 255]`, 256 bins.
    pub fn photometric() -> Self {
        Self { min: 0.0, max: 255.0, bins: 256 }
    }

    /// `[-0.5, 0.5]` per pixel, 201 bins.
    pub fn curvature() -> Self {
        Self { min: -0.5, max: 0.5, bins: 201 }
    }

    #[inline]
    pub fn min(&self) -> f64 {
        self.min
    }

    #[inline]
    pub fn max(&self) -> f64 {
        self.max
    }

    #[inline]
    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.bins).map(|i| self.point(i)).collect()
    }

    /// Clamps `v` to the first/last grid point when it falls outside `[min, max]`.
    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        if v < self.min {
            self.point(0)
        } else if v > self.max {
            self.point(self.bins - 1)
        } else {
            v
        }
    }

    /// Linear interpolation of per-point `values` at `z`, constant beyond
    /// the first and last points.
    pub fn interpolate(&self, values: &[f64], z: f64) -> f64 {
        debug_assert_eq!(values.len(), self.bins);
        let t = (z - self.min) / self.step() - 0.5;
        if t <= 0.0 {
            return values[0];
        }
        let last = self.bins - 1;
        if t >= last as f64 {
            return values[last];
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }

    pub fn matches(&self, other: &Grid1D) -> bool {
        self.bins == other.bins
            && (self.min - other.min).abs() <= 1e-12 * self.step()
            && (self.max - other.max).abs() <= 1e-12 * self.step()
    }

    fn check(&self, other: &Grid1D) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}]/{} vs [{}, {}]/{}",
                self.min, self.max, self.bins, other.min, other.max, other.bins
            )))
        }
    }
}

/// Probability density sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    grid: Grid1D,
    p: Vec<f64>,
    bandwidth: f64,
}

impl Density1D {
    /// Validates non-negativity and unit mass (within 1e-6).
    pub fn new(grid: Grid1D, p: Vec<f64>, bandwidth: f64) -> Result<Self> {
        let d = Self::unchecked(grid, p, bandwidth)?;
        let mass = d.mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("density mass {mass} is not 1")));
        }
        Ok(d)
    }

    /// Scales non-negative `p` to unit mass.
    pub fn normalized(grid: Grid1D, mut p: Vec<f64>, bandwidth: f64) -> Result<Self> {
        let total: f64 = p.iter().sum::<f64>() * grid.step();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateGrid("density has no mass on the grid (bandwidth too small?)".into()));
        }
        p.iter_mut().for_each(|v| *v /= total);
        Self::unchecked(grid, p, bandwidth)
    }

    fn unchecked(grid: Grid1D, p: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if p.len() != grid.bins() {
            return Err(Error::DimensionMismatch(format!("{} density values for {} bins", p.len(), grid.bins())));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid density value {v}")));
        }
        Ok(Self { grid, p, bandwidth })
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn mass(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.grid.step()
    }

    /// Mass inside `[lo, hi]`, summing whole cells whose centre lies inside.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        (0..self.grid.bins()).filter(|&i| (lo..=hi).contains(&self.grid.point(i))).map(|i| self.p[i]).sum::<f64>()
            * self.grid.step()
    }

    /// Grid point with the largest density.
    pub fn mode(&self) -> f64 {
        let i = self.p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        self.grid.point(i)
    }
}

/// Kernel sampled at offsets `m * step` for `m` in `-half..=half`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    step: f64,
    half: usize,
    values: Vec<f64>,
}

impl KernelTable {
    pub fn from_fn(step: f64, half: usize, k: impl Fn(f64) -> f64) -> Self {
        let values = (-(half as isize)..=half as isize).map(|m| k(m as f64 * step)).collect();
        Self { step, half, values }
    }

    /// Normalized Gaussian of width `h`, covering every offset of `grid`.
    pub fn gaussian(grid: &Grid1D, h: f64) -> Self {
        Self::from_fn(grid.step(), grid.bins() - 1, |s| gaussian_kernel(s, h))
    }

    /// Analytic derivative of [`KernelTable::gaussian`].
    pub fn gaussian_derivative(grid: &Grid1D, h: f64) -> Self {
        Self::from_fn(grid.step(), grid.bins() - 1, |s| gaussian_kernel_derivative(s, h))
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn half_len(&self) -> usize {
        self.half
    }

    #[inline]
    pub fn at(&self, offset: isize) -> f64 {
        self.values[(offset + self.half as isize) as usize]
    }
}

#[inline]
pub fn gaussian_kernel(s: f64, h: f64) -> f64 {
    (-(s * s) / (2.0 * h * h)).exp() / (h * (2.0 * PI).sqrt())
}

#[inline]
pub fn gaussian_kernel_derivative(s: f64, h: f64) -> f64 {
    -s / (h * h) * gaussian_kernel(s, h)
}

/// Samples per partial sum in [`kde_samples`]; fixed so the reduction order
/// does not depend on the thread count.
const KDE_CHUNK: usize = 2048;

/// Kernel support in bandwidths; the tail beyond it is below 1e-17.
const KDE_REACH: f64 = 9.0;

/// Adds `w exp(-(z_i - v)^2 / 2h^2)` to every grid point within reach of `v`,
/// walking out from the nearest point with the exact three-term recurrence
/// `e[i+1] = e[i] r[i]`, `r[i+1] = r[i] q`.
fn accumulate_gaussian(acc: &mut [f64], grid: &Grid1D, v: f64, w: f64, h: f64) {
    let dz = grid.step();
    let inv2h2 = 1.0 / (2.0 * h * h);
    let n = grid.bins();
    let centre = (((v - grid.min()) / dz - 0.5).round().max(0.0) as usize).min(n - 1);
    let reach = (KDE_REACH * h / dz).ceil() as usize + 1;
    let d0 = grid.point(centre) - v;
    let e0 = (-d0 * d0 * inv2h2).exp();
    let q = (-2.0 * dz * dz * inv2h2).exp();
    acc[centre] += w * e0;
    let mut e = e0;
    let mut r = (-(2.0 * d0 * dz + dz * dz) * inv2h2).exp();
    for a in &mut acc[centre + 1..n.min(centre + reach + 1)] {
        e *= r;
        r *= q;
        *a += w * e;
    }
    let mut e = e0;
    let mut r = ((2.0 * d0 * dz - dz * dz) * inv2h2).exp();
    for i in (centre.saturating_sub(reach)..centre).rev() {
        e *= r;
        r *= q;
        acc[i] += w * e;
    }
}

/// Weighted Gaussian KDE over raw sample slices. Zero-weight samples are skipped.
pub(crate) fn kde_samples(values: &[f64], weights: &[f64], grid: &Grid1D, bandwidth: f64) -> Result<Density1D> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let samples: Vec<(f64, f64)> =
        values.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(&v, &w)| (grid.clamp(v), w)).collect();
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be non-negative".into()));
    }
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let norm = 1.0 / (bandwidth * (2.0 * PI).sqrt() * total);
    let partials = par::map_range(samples.len().div_ceil(KDE_CHUNK), |c| {
        let mut acc = vec![0.0; grid.bins()];
        let end = ((c + 1) * KDE_CHUNK).min(samples.len());
        for &(v, w) in &samples[c * KDE_CHUNK..end] {
            accumulate_gaussian(&mut acc, grid, v, w, bandwidth);
        }
        acc
    });
    let mut p = vec![0.0; grid.bins()];
    for part in &partials {
        for (a, b) in p.iter_mut().zip(part) {
            *a += b;
        }
    }
    p.iter_mut().for_each(|v| *v *= norm);
    Density1D::normalized(*grid, p, bandwidth)
}

/// `p(z) = sum_x w(x) K_h(z - v(x)) / sum_x w(x)` with a Gaussian `K_h`,
/// renormalized to unit mass on the grid.
pub fn weighted_kde(values: &ScalarField, weights: &ScalarField, grid: &Grid1D, bandwidth: f64) -> Result<Density1D> {
    values.check_same_shape(weights, "kde values vs weights")?;
    kde_samples(values.as_slice(), weights.as_slice(), grid, bandwidth)
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR / 1.34) n^(-1/5)`.
///
/// Returns `None` for fewer than two samples or zero spread.
pub fn silverman_bandwidth(samples: &[f64]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let quantile = |q: f64| {
        let pos = q * (n - 1.0);
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    let iqr = quantile(0.75) - quantile(0.25);
    let sd = var.sqrt();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (spread > 0.0).then(|| 0.9 * spread * n.powf(-0.2))
}

fn bandwidth_for(samples: &[f64], grid: &Grid1D) -> f64 {
    let floor = MIN_BANDWIDTH_BINS * grid.step();
    silverman_bandwidth(samples).map_or(floor, |h| h.max(floor))
}

/// Unweighted mean of densities on a shared grid, summed per bin in sorted
/// order so the result does not depend on the order of `ds`.
fn ensemble_mean(ds: &[Density1D], bandwidth: f64) -> Result<Density1D> {
    let grid = *ds[0].grid();
    for d in ds {
        grid.check(d.grid())?;
    }
    let n = ds.len() as f64;
    let p = (0..grid.bins())
        .map(|i| {
            let mut col: Vec<f64> = ds.iter().map(|d| d.p[i]).collect();
            col.sort_by(f64::total_cmp);
            col.iter().sum::<f64>() / n
        })
        .collect();
    Density1D::normalized(grid, p, bandwidth)
}

/// Per-channel model densities: one mask-weighted KDE per training image,
/// averaged over the training set.
pub fn learn_photometric_model(
    training: &[(ScalarField, BinaryMask)],
    features: &FeatureSpec,
) -> Result<Vec<Density1D>> {
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    for (i, (img, mask)) in training.iter().enumerate() {
        if img.width() != mask.width() || img.height() != mask.height() {
            return Err(Error::DimensionMismatch(format!(
                "training pair {i}: image {}x{} vs mask {}x{}",
                img.width(),
                img.height(),
                mask.width(),
                mask.height()
            )));
        }
        if mask.is_empty() {
            return Err(Error::DegenerateMask(format!("training mask {i} is empty")));
        }
    }
    let channels: Vec<Vec<ScalarField>> =
        training.iter().map(|(img, _)| features.extract(img)).collect::<Result<_>>()?;
    let weights: Vec<ScalarField> = training.iter().map(|(_, m)| m.to_field()).collect();
    let grid = Grid1D::photometric();

    (0..features.channel_count())
        .map(|k| {
            let pooled: Vec<f64> = channels
                .iter()
                .zip(&weights)
                .flat_map(|(c, w)| {
                    c[k].as_slice().iter().zip(w.as_slice()).filter(|(_, &w)| w > 0.0).map(|(&v, _)| grid.clamp(v))
                })
                .collect();
            let h = bandwidth_for(&pooled, &grid);
            let per_image = par::map_range(training.len(), |i| weighted_kde(&channels[i][k], &weights[i], &grid, h))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            ensemble_mean(&per_image, h)
        })
        .collect()
}

/// Parameters for curvature-density estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureModelParams {
    pub eps: f64,
    pub presmooth: PresmoothParams,
}

impl Default for CurvatureModelParams {
    fn default() -> Self {
        Self { eps: 2.0, presmooth: PresmoothParams::default() }
    }
}

struct CurvatureSamples {
    kappa: ScalarField,
    weights: ScalarField,
}

fn curvature_samples(mask: &BinaryMask, params: &CurvatureModelParams) -> Result<CurvatureSamples> {
    let phi = levelset::init_from_mask(mask)?;
    let smoothed = curvature::anisotropic_presmooth(&phi, &params.presmooth)?;
    let kappa = curvature::curvature_field(&smoothed)?;
    let eps = params.eps;
    let weights = phi.phi().map(|v| levelset::delta_eps(v, eps));
    Ok(CurvatureSamples { kappa, weights })
}

/// Model curvature density: per mask, the `delta_eps`-weighted KDE of the
/// level-set curvature of its pre-smoothed signed distance function, averaged
/// over the masks.
pub fn learn_curvature_model(masks: &[BinaryMask], params: &CurvatureModelParams) -> Result<Density1D> {
    if masks.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(params.eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {}", params.eps)));
    }
    let samples = par::map_slice(masks, |m| curvature_samples(m, params)).into_iter().collect::<Result<Vec<_>>>()?;
    let grid = Grid1D::curvature();
    let pooled: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.kappa.as_slice().iter().zip(s.weights.as_slice()).filter(|(_, &w)| w > 0.0).map(|(&k, _)| k))
        .collect();
    let h = bandwidth_for(&pooled, &grid);
    let per_mask = par::map_slice(&samples, |s| weighted_kde(&s.kappa, &s.weights, &grid, h))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    ensemble_mean(&per_mask, h)
}

/// `sum sqrt(p q) dz`.
pub fn bhattacharyya(p: &Density1D, q: &Density1D) -> Result<f64> {
    p.grid.check(&q.grid)?;
    Ok(p.p.iter().zip(&q.p).map(|(a, b)| (a * b).sqrt()).sum::<f64>() * p.grid.step())
}

/// Per-channel coefficients and their product.
pub fn bhattacharyya_product(ps: &[Density1D], qs: &[Density1D]) -> Result<(f64, Vec<f64>)> {
    if ps.len() != qs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} model channels vs {} empirical channels",
            ps.len(),
            qs.len()
        )));
    }
    let per = ps.iter().zip(qs).map(|(p, q)| bhattacharyya(p, q)).collect::<Result<Vec<_>>>()?;
    Ok((per.iter().product(), per))
}

/// `sqrt(model / max(empirical, floor))` per grid point.
pub fn ratio_sqrt(model: &Density1D, empirical: &Density1D, floor: f64) -> Result<Vec<f64>> {
    model.grid.check(&empirical.grid)?;
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(format!("ratio floor must be positive, got {floor}")));
    }
    Ok(model.p.iter().zip(&empirical.p).map(|(m, e)| (m / e.max(floor)).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_density(grid: &Grid1D, mu: f64, sd: f64) -> Density1D {
        let p = grid.points().iter().map(|&z| gaussian_kernel(z - mu, sd)).collect();
        Density1D::normalized(*grid, p, sd).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid1D::curvature();
        assert!((g.point(100)).abs() < 1e-15);
        assert!((g.step() - 1.0 / 201.0).abs() < 1e-15);
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert_eq!(g.clamp(3.0), g.point(200));
        assert_eq!(g.clamp(-3.0), g.point(0));
    }

    #[test]
    fn interpolation_is_linear_between_points() {
        let g = Grid1D::new(0.0, 10.0, 10).unwrap();
        let vals: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        assert!((g.interpolate(&vals, 3.5) - 6.0).abs() < 1e-12);
        assert!((g.interpolate(&vals, 4.0) - 7.0).abs() < 1e-12);
        assert_eq!(g.interpolate(&vals, -1.0), 0.0);
        assert_eq!(g.interpolate(&vals, 11.0), 18.0);
    }

    #[test]
    fn single_sample_kde_is_the_kernel() {
        let g = Grid1D::photometric();
        let v = ScalarField::new(1, 1, vec![100.3]).unwrap();
        let w = ScalarField::new(1, 1, vec![1.0]).unwrap();
        let d = weighted_kde(&v, &w, &g, 4.0).unwrap();
        let raw: Vec<f64> = g.points().iter().map(|&z| gaussian_kernel(z - 100.3, 4.0)).collect();
        let mass = raw.iter().sum::<f64>() * g.step();
        for (a, b) in d.values().iter().zip(&raw) {
            assert!((a - b / mass).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_matches_the_double_sum() {
        let g = Grid1D::photometric();
        let n = 5000;
        let v = ScalarField::from_fn(100, 50, |x, y| (37.0 * x as f64 + 11.0 * y as f64).sin() * 90.0 + 128.0);
        let w = ScalarField::from_fn(100, 50, |x, y| ((x * 7 + y * 3) % 5) as f64 / 4.0);
        let d = weighted_kde(&v, &w, &g, 5.0).unwrap();
        let raw: Vec<f64> = g
            .points()
            .iter()
            .map(|&z| (0..n).map(|i| w.as_slice()[i] * gaussian_kernel(z - v.as_slice()[i], 5.0)).sum())
            .collect();
        let mass = raw.iter().sum::<f64>() * g.step();
        for (a, b) in d.values().iter().zip(&raw) {
            assert!((a - b / mass).abs() < 1e-12 * (1.0 + b / mass), "{a} vs {}", b / mass);
        }
    }

    #[test]
    fn kde_location_invariance() {
        let g = Grid1D::photometric();
        let small = ScalarField::filled(3, 3, 77.0);
        let big = ScalarField::filled(20, 20, 77.0);
        let ws = ScalarField::filled(3, 3, 1.0);
        let wb = ScalarField::from_fn(20, 20, |x, _| if x < 13 { 1.0 } else { 0.0 });
        let a = weighted_kde(&small, &ws, &g, 3.0).unwrap();
        let b = weighted_kde(&big, &wb, &g, 3.0).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_errors() {
        let g = Grid1D::photometric();
        let v = ScalarField::filled(2, 2, 10.0);
        let zero = ScalarField::zeros(2, 2);
        assert!(matches!(weighted_kde(&v, &zero, &g, 2.0), Err(Error::ZeroWeight)));
        let other = ScalarField::filled(3, 2, 1.0);
        assert!(weighted_kde(&v, &other, &g, 2.0).is_err());
    }

    #[test]
    fn bhattacharyya_identities() {
        let g = Grid1D::new(-8.0, 10.0, 512).unwrap();
        let p = gaussian_density(&g, 0.0, 1.0);
        let q = gaussian_density(&g, 2.0, 1.0);
        assert!((bhattacharyya(&p, &p).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(bhattacharyya(&p, &q).unwrap(), bhattacharyya(&q, &p).unwrap());
        assert!((bhattacharyya(&p, &q).unwrap() - (-0.5f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn disjoint_supports() {
        let g = Grid1D::new(0.0, 16.0, 16).unwrap();
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        a[..8].iter_mut().for_each(|v| *v = 0.125);
        b[8..].iter_mut().for_each(|v| *v = 0.125);
        let p = Density1D::new(g, a, 1.0).unwrap();
        let q = Density1D::new(g, b, 1.0).unwrap();
        assert_eq!(bhattacharyya(&p, &q).unwrap(), 0.0);
        let (b, per) = bhattacharyya_product(&[p.clone(), p.clone()], &[p.clone(), q]).unwrap();
        assert_eq!(b, 0.0);
        assert!((per[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = gaussian_density(&Grid1D::new(0.0, 1.0, 16).unwrap(), 0.5, 0.1);
        let b = gaussian_density(&Grid1D::new(0.0, 1.0, 32).unwrap(), 0.5, 0.1);
        assert!(matches!(bhattacharyya(&a, &b), Err(Error::GridMismatch(_))));
        assert!(ratio_sqrt(&a, &b, RATIO_FLOOR).is_err());
        assert!(bhattacharyya_product(std::slice::from_ref(&a), &[]).is_err());
    }

    #[test]
    fn ratio_floor_behaviour() {
        let g = Grid1D::new(0.0, 8.0, 8).unwrap();
        let m = Density1D::new(g, vec![0.125; 8], 1.0).unwrap();
        let mut e = vec![0.0; 8];
        e[..4].iter_mut().for_each(|v| *v = 0.25);
        let e = Density1D::new(g, e, 1.0).unwrap();
        let r = ratio_sqrt(&m, &e, RATIO_FLOOR).unwrap();
        for v in &r[..4] {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        }
        for v in &r[4..] {
            assert!((v - (0.125 / RATIO_FLOOR).sqrt()).abs() < 1e-6);
        }
        assert!(ratio_sqrt(&m, &m, RATIO_FLOOR).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn silverman_known_value() {
        // 1..=5: sd = sqrt(2.5), IQR = 2, n = 5.
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let expect = 0.9 * (2.0f64 / 1.34).min(2.5f64.sqrt()) * 5f64.powf(-0.2);
        assert!((h - expect).abs() < 1e-12);
        assert!(silverman_bandwidth(&[3.0, 3.0]).is_none());
        assert!(silverman_bandwidth(&[3.0]).is_none());
    }
}
