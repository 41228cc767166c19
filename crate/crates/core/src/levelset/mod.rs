//! Level-set representation: masks, signed distance functions, the smoothed
//! Heaviside/delta pair and region measures.
//!
//! Sign convention: `phi <= 0` is the segmented region.

mod fmm;

pub use fmm::redistance_field;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{self, ScalarField};

/// Boolean occupancy raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!("mask dimensions must be positive, got {width}x{height}")));
        }
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask data length {} does not match {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// `{phi <= 0}`.
    pub fn from_field(phi: &ScalarField) -> Self {
        Self { width: phi.width(), height: phi.height(), bits: phi.as_slice().iter().map(|&v| v <= 0.0).collect() }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "masks {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Object pixel with a 4-neighbour outside the object or the frame.
    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        if !self.get(x, y) {
            return false;
        }
        x == 0
            || y == 0
            || x + 1 == self.width
            || y + 1 == self.height
            || !self.get(x - 1, y)
            || !self.get(x + 1, y)
            || !self.get(x, y - 1)
            || !self.get(x, y + 1)
    }

    /// Centroid `(x, y)` of the object pixels, `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Indicator field, 1 on the object and 0 elsewhere.
    pub fn to_field(&self) -> ScalarField {
        ScalarField::new(self.width, self.height, self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .expect("mask dimensions are valid")
    }

    /// Number of 4-connected components of the object.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = (i % self.width, i / self.width);
                let mut visit = |j: usize| {
                    if self.bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < self.width {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - self.width);
                }
                if y + 1 < self.height {
                    visit(i + self.width);
                }
            }
        }
        count
    }
}

/// Level-set function; negative inside the region.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    phi: ScalarField,
    is_signed_distance: bool,
}

impl LevelSet {
    pub fn new(phi: ScalarField, is_signed_distance: bool) -> Self {
        Self { phi, is_signed_distance }
    }

    /// Wraps an arbitrary field, flagged as not a signed distance.
    pub fn from_field(phi: ScalarField) -> Self {
        Self::new(phi, false)
    }

    #[inline]
    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn into_phi(self) -> ScalarField {
        self.phi
    }

    #[inline]
    pub fn is_signed_distance(&self) -> bool {
        self.is_signed_distance
    }

    pub fn width(&self) -> usize {
        self.phi.width()
    }

    pub fn height(&self) -> usize {
        self.phi.height()
    }

    pub fn has_both_signs(&self) -> bool {
        has_both_signs(&self.phi)
    }

    pub fn mask(&self) -> BinaryMask {
        BinaryMask::from_field(&self.phi)
    }

    /// Signed distance to a circle, negative inside.
    pub fn circle(width: usize, height: usize, cx: f64, cy: f64, r: f64) -> Self {
        let phi = ScalarField::from_fn(width, height, |x, y| (x as f64 - cx).hypot(y as f64 - cy) - r);
        Self::new(phi, true)
    }
}

pub(crate) fn has_both_signs(f: &ScalarField) -> bool {
    let s = f.as_slice();
    s.iter().any(|&v| v <= 0.0) && s.iter().any(|&v| v > 0.0)
}

/// Smoothed delta `(1 + cos(pi x / eps)) / (2 eps)` on `|x| <= eps`.
#[inline]
pub fn delta_eps(x: f64, eps: f64) -> f64 {
    if x.abs() <= eps {
        (1.0 + (PI * x / eps).cos()) / (2.0 * eps)
    } else {
        0.0
    }
}

/// Analytic derivative of [`delta_eps`].
#[inline]
pub fn delta_eps_prime(x: f64, eps: f64) -> f64 {
    if x.abs() <= eps {
        -PI / (2.0 * eps * eps) * (PI * x / eps).sin()
    } else {
        0.0
    }
}

/// Smoothed unit step whose derivative is [`delta_eps`].
#[inline]
pub fn heaviside_eps(x: f64, eps: f64) -> f64 {
    if x > eps {
        1.0
    } else if x < -eps {
        0.0
    } else {
        (0.5 * (1.0 + x / eps + (PI * x / eps).sin() / PI)).clamp(0.0, 1.0)
    }
}

/// Sharp region indicator `1{phi <= 0}`.
#[inline]
pub fn inside(phi: f64) -> f64 {
    if phi <= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Pixel count of `{phi <= 0}`.
pub fn region_area(ls: &LevelSet) -> f64 {
    ls.phi().as_slice().iter().filter(|&&v| v <= 0.0).count() as f64
}

/// Signed distance function of a mask: negative inside, positive outside.
pub fn init_from_mask(m: &BinaryMask) -> Result<LevelSet> {
    if m.is_empty() {
        return Err(Error::DegenerateMask("mask has no object pixels".into()));
    }
    if m.is_full() {
        return Err(Error::DegenerateMask("mask has no background pixels".into()));
    }
    let f =
        ScalarField::new(m.width(), m.height(), m.as_slice().iter().map(|&b| if b { -0.5 } else { 0.5 }).collect())?;
    Ok(LevelSet::new(redistance_field(&f)?, true))
}

/// Rebuilds a signed distance function with the same zero level set.
pub fn redistance(ls: &LevelSet) -> Result<LevelSet> {
    Ok(LevelSet::new(redistance_field(ls.phi())?, true))
}

/// Median of the gradient norm over `{|phi| <= band}`.
pub fn band_gradient_median(phi: &ScalarField, band: f64) -> Result<f64> {
    let g = grid::gradient(phi)?;
    let mut norms: Vec<f64> = phi
        .as_slice()
        .iter()
        .zip(g.x.as_slice().iter().zip(g.y.as_slice()))
        .filter(|(p, _)| p.abs() <= band)
        .map(|(_, (gx, gy))| gx.hypot(*gy))
        .collect();
    if norms.is_empty() {
        return Err(Error::EmptyBand);
    }
    norms.sort_by(f64::total_cmp);
    let n = norms.len();
    Ok(if n % 2 == 1 { norms[n / 2] } else { 0.5 * (norms[n / 2 - 1] + norms[n / 2]) })
}

/// Largest movement of the zero crossing along any grid edge that changes
/// sign in `before`, measured in pixels.
pub fn zero_crossing_shift(before: &ScalarField, after: &ScalarField) -> Result<f64> {
    before.check_same_shape(after, "zero crossing shift")?;
    let (w, h) = (before.width(), before.height());
    let a = before.as_slice();
    let b = after.as_slice();
    let crossing = |f: &[f64], p: usize, q: usize| -> Option<f64> {
        let (fp, fq) = (f[p], f[q]);
        ((fp <= 0.0) != (fq <= 0.0)).then(|| fp / (fp - fq))
    };
    let mut worst: f64 = 0.0;
    let mut visit = |p: usize, q: usize| {
        if let Some(t0) = crossing(a, p, q) {
            let shift = match crossing(b, p, q) {
                Some(t1) => (t1 - t0).abs(),
                None => 1.0,
            };
            worst = worst.max(shift);
        }
    };
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                visit(p, p + 1);
            }
            if y + 1 < h {
                visit(p, p + w);
            }
        }
    }
    Ok(worst)
}

/// Sub-pixel zero crossings of `f` along horizontal and vertical grid edges.
pub fn zero_crossings(f: &ScalarField) -> Vec<(f64, f64)> {
    let (w, h) = (f.width(), f.height());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let a = f.get(x, y);
            if x + 1 < w {
                let b = f.get(x + 1, y);
                if (a <= 0.0) != (b <= 0.0) {
                    out.push((x as f64 + a / (a - b), y as f64));
                }
            }
            if y + 1 < h {
                let b = f.get(x, y + 1);
                if (a <= 0.0) != (b <= 0.0) {
                    out.push((x as f64, y as f64 + a / (a - b)));
                }
            }
        }
    }
    out
}

/// Marching-squares segments of the zero level of `f`. Saddle cells are
/// resolved by the sign of the cell mean.
pub fn zero_segments(f: &ScalarField) -> Vec<[(f64, f64); 2]> {
    let (w, h) = (f.width(), f.height());
    let mut out = Vec::new();
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let c = [
                ((x, y), f.get(x, y)),
                ((x + 1, y), f.get(x + 1, y)),
                ((x + 1, y + 1), f.get(x + 1, y + 1)),
                ((x, y + 1), f.get(x, y + 1)),
            ];
            let mut pts = Vec::with_capacity(4);
            for i in 0..4 {
                let (((x0, y0), a), ((x1, y1), b)) = (c[i], c[(i + 1) % 4]);
                if (a <= 0.0) != (b <= 0.0) {
                    let t = a / (a - b);
                    pts.push((x0 as f64 + t * (x1 as f64 - x0 as f64), y0 as f64 + t * (y1 as f64 - y0 as f64)));
                }
            }
            match pts.len() {
                2 => out.push([pts[0], pts[1]]),
                4 => {
                    let centre_inside = c.iter().map(|p| p.1).sum::<f64>() <= 0.0;
                    if centre_inside == (c[0].1 <= 0.0) {
                        out.push([pts[0], pts[3]]);
                        out.push([pts[1], pts[2]]);
                    } else {
                        out.push([pts[0], pts[1]]);
                        out.push([pts[2], pts[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn point_segment_distance(p: (f64, f64), s: &[(f64, f64); 2]) -> f64 {
    let (dx, dy) = (s[1].0 - s[0].0, s[1].1 - s[0].1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.0 - s[0].0) * dx + (p.1 - s[0].1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.0 - s[0].0 - t * dx).hypot(p.1 - s[0].1 - t * dy)
}

fn one_sided_displacement(points: &[(f64, f64)], segments: &[[(f64, f64); 2]]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    if segments.is_empty() {
        return f64::INFINITY;
    }
    points
        .iter()
        .map(|&p| segments.iter().map(|s| point_segment_distance(p, s)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance, px, between the zero crossings of each
/// field and the zero-level polyline of the other.
pub fn contour_displacement(before: &ScalarField, after: &ScalarField) -> f64 {
    let forward = one_sided_displacement(&zero_crossings(after), &zero_segments(before));
    let backward = one_sided_displacement(&zero_crossings(before), &zero_segments(after));
    forward.max(backward)
}
