//! Raster fields, finite differences, smoothing and 1-D correlation.
//!
//! Fields are row-major, `index = y * width + x`. Borders follow the
//! zero-flux (Neumann) convention: neighbours outside the frame are taken
//! from the mirrored interior, which for the first ring is plain edge
//! replication.

pub mod pnm;

use crate::density::{Density1D, KernelTable};
use crate::error::{Error, Result};
use crate::par;

/// 2-D raster of finite real values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!("field dimensions must be positive, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at index {i}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the samples. Callers keep the values finite.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with edge replication for out-of-frame coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape(&self, other: &ScalarField, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert!(self.same_shape(other));
        ScalarField {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Transposed copy (width and height swapped).
    pub fn transposed(&self) -> ScalarField {
        let (w, h) = (self.width, self.height);
        let mut data = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                data[x * h + y] = self.data[y * w + x];
            }
        }
        ScalarField { width: h, height: w, data }
    }
}

/// A pair of same-shaped scalar components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.check_same_shape(&y, "vector components")?;
        Ok(Self { x, y })
    }

    pub fn width(&self) -> usize {
        self.x.width()
    }

    pub fn height(&self) -> usize {
        self.x.height()
    }

    pub fn magnitude(&self) -> ScalarField {
        self.x.zip_map(&self.y, |a, b| a.hypot(b))
    }
}

pub(crate) fn require_min_size(f: &ScalarField, min: usize) -> Result<()> {
    if f.width() < min || f.height() < min {
        Err(Error::FieldTooSmall { width: f.width(), height: f.height(), min })
    } else {
        Ok(())
    }
}

#[inline]
fn diff_1d(row: &[f64], i: usize, stride: usize, n: usize) -> f64 {
    if i == 0 {
        row[stride] - row[0]
    } else if i == n - 1 {
        row[(n - 1) * stride] - row[(n - 2) * stride]
    } else {
        0.5 * (row[(i + 1) * stride] - row[(i - 1) * stride])
    }
}

/// Central differences inside, one-sided differences on the border.
pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    require_min_size(f, 3)?;
    let (w, h) = (f.width(), f.height());
    let src = f.as_slice();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut gx, w, |y, out| {
        let row = &src[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = diff_1d(row, x, 1, w);
        }
    });
    par::for_each_chunk_mut(&mut gy, w, |y, out| {
        for (x, o) in out.iter_mut().enumerate() {
            *o = diff_1d(&src[x..], y, w, h);
        }
    });
    Ok(VectorField {
        x: ScalarField { width: w, height: h, data: gx },
        y: ScalarField { width: w, height: h, data: gy },
    })
}

/// Five-point Laplacian with replicated borders.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let (w, h) = (f.width(), f.height());
    let mut out = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut out, w, |y, row| {
        let yi = y as isize;
        for (x, o) in row.iter_mut().enumerate() {
            let xi = x as isize;
            let c = f.get(x, y);
            *o = f.get_clamped(xi + 1, yi)
                + f.get_clamped(xi - 1, yi)
                + f.get_clamped(xi, yi + 1)
                + f.get_clamped(xi, yi - 1)
                - 4.0 * c;
        }
    });
    ScalarField { width: w, height: h, data: out }
}

/// Index into `0..n` after half-sample mirroring (`-1 -> 0`, `n -> n-1`).
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - 1 - j;
    }
    j as usize
}

/// Normalized Gaussian taps for `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

fn convolve_rows(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut out, w, |y, row_out| {
        let row = &src[y * w..(y + 1) * w];
        let padded: Vec<f64> = (-r..w as isize + r).map(|j| row[mirror(j, w)]).collect();
        for (o, window) in row_out.iter_mut().zip(padded.windows(taps.len())) {
            *o = taps.iter().zip(window).map(|(t, v)| t * v).sum();
        }
    });
    out
}

/// Separable Gaussian blur, taps truncated at `ceil(3 sigma)` and renormalized.
///
/// Borders are mirrored, which keeps the field mean unchanged.
pub fn gaussian_smooth(f: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let taps = gaussian_taps(sigma);
    let (w, h) = (f.width(), f.height());
    let rows = convolve_rows(f.as_slice(), w, h, &taps);
    let t = ScalarField { width: w, height: h, data: rows }.transposed();
    let cols = convolve_rows(t.as_slice(), h, w, &taps);
    Ok(ScalarField { width: h, height: w, data: cols }.transposed())
}

/// `s(z_i) = sum_j d(z_j) k(z_j - z_i) dz` on the grid of `d`.
pub fn correlate_density(d: &Density1D, kernel: &KernelTable) -> Result<Vec<f64>> {
    correlate_values(d.values(), d.grid().step(), kernel)
}

/// [`correlate_density`] for a bare array of samples with bin width `step`.
pub fn correlate_values(values: &[f64], step: f64, kernel: &KernelTable) -> Result<Vec<f64>> {
    let n = values.len();
    if (kernel.step() - step).abs() > 1e-12 * step.abs().max(1.0) {
        return Err(Error::GridMismatch(format!("kernel step {} vs grid step {}", kernel.step(), step)));
    }
    if kernel.half_len() + 1 < n {
        return Err(Error::GridMismatch(format!(
            "kernel table covers {} offsets, grid needs {}",
            kernel.half_len(),
            n - 1
        )));
    }
    Ok(par::map_range(n, |i| {
        let mut acc = 0.0;
        for (j, &v) in values.iter().enumerate() {
            acc += v * kernel.at(j as isize - i as isize);
        }
        acc * step
    }))
}
