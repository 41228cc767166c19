//! Synthetic shape families, image rendering with line clutter and noise,
//! and elliptic outlier blobs.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::levelset::BinaryMask;

/// Radial perturbation modes per shape.
const MODES: usize = 3;
/// Largest relative radial perturbation.
const MAX_PERTURBATION: f64 = 0.1;
/// Largest rotation, radians.
const MAX_ROTATION: f64 = 10.0 * PI / 180.0;

/// Line clutter and noise applied by [`render_and_corrupt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionParams {
    pub n_h: usize,
    pub n_v: usize,
    pub line_width: usize,
    pub line_value: f64,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        Self { n_h: 3, n_v: 3, line_width: 3, line_value: 200.0, noise_sigma: 25.0, rng_seed: 0 }
    }
}

impl CorruptionParams {
    /// No lines, no noise.
    pub fn clean() -> Self {
        Self { n_h: 0, n_v: 0, noise_sigma: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.line_width == 0 {
            return Err(Error::InvalidParameter("line width must be at least 1".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {}", self.noise_sigma)));
        }
        check_intensity(self.line_value, "line value")
    }
}

fn check_intensity(v: f64, what: &str) -> Result<()> {
    if (0.0..=255.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} {v} is outside [0, 255]")))
    }
}

fn check_size(size: (usize, usize)) -> Result<()> {
    if size.0 < 16 || size.1 < 16 {
        return Err(Error::InvalidParameter(format!("frame {}x{} is too small", size.0, size.1)));
    }
    Ok(())
}

/// Star-shaped outline: polar radius as a function of angle.
struct Outline {
    a: f64,
    b: f64,
    n: f64,
    rotation: f64,
    modes: [(f64, f64); MODES],
}

impl Outline {
    fn radius(&self, t: f64) -> f64 {
        let u = t - self.rotation;
        let (c, s) = (u.cos().abs() / self.a, u.sin().abs() / self.b);
        let base = (c.powf(self.n) + s.powf(self.n)).powf(-1.0 / self.n);
        let bump: f64 =
            self.modes.iter().enumerate().map(|(m, &(amp, phase))| amp * ((m + 2) as f64 * u + phase).cos()).sum();
        base * (1.0 + bump)
    }

    fn rasterize(&self, size: (usize, usize)) -> BinaryMask {
        let (cx, cy) = (0.5 * (size.0 as f64 - 1.0), 0.5 * (size.1 as f64 - 1.0));
        BinaryMask::from_fn(size.0, size.1, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let r = dx.hypot(dy);
            r == 0.0 || r <= self.radius(dy.atan2(dx))
        })
    }
}

/// `count` masks of one family: a seeded base super-ellipse, each member
/// with its own low-frequency radial perturbation (at most 10% of the
/// radius) and rotation (at most 10 degrees), centred in the frame.
pub fn make_shape_family(seed: u64, count: usize, size: (usize, usize)) -> Result<Vec<BinaryMask>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!("a family needs at least 2 shapes, got {count}")));
    }
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = size.0.min(size.1) as f64;
    let a = side * rng.random_range(0.24..0.30);
    let b = a * rng.random_range(0.65..0.85);
    let n = rng.random_range(2.2..3.5);
    Ok((0..count)
        .map(|_| {
            let rotation = rng.random_range(-MAX_ROTATION..=MAX_ROTATION);
            let modes = std::array::from_fn(|_| {
                (rng.random_range(-1.0..=1.0) * MAX_PERTURBATION / MODES as f64, rng.random_range(0.0..TAU))
            });
            Outline { a, b, n, rotation, modes }.rasterize(size)
        })
        .collect())
}

/// Two-level rendering of `mask` with line clutter and i.i.d. Gaussian
/// noise, clamped to `[0, 255]`. Lines span the whole frame and are placed
/// in its central 60%.
pub fn render_and_corrupt(
    mask: &BinaryMask,
    object_value: f64,
    background_value: f64,
    c: &CorruptionParams,
) -> Result<ScalarField> {
    check_intensity(object_value, "object value")?;
    check_intensity(background_value, "background value")?;
    c.validate()?;
    let (w, h) = (mask.width(), mask.height());
    let mut img = ScalarField::from_fn(w, h, |x, y| if mask.get(x, y) { object_value } else { background_value });
    let mut rng = ChaCha8Rng::seed_from_u64(c.rng_seed);
    let place = |extent: usize, rng: &mut ChaCha8Rng| {
        let lo = (0.2 * extent as f64) as usize;
        let hi = ((0.8 * extent as f64) as usize).saturating_sub(c.line_width).max(lo + 1);
        rng.random_range(lo..hi)
    };
    for _ in 0..c.n_h {
        let y0 = place(h, &mut rng);
        for y in y0..(y0 + c.line_width).min(h) {
            for x in 0..w {
                img.set(x, y, c.line_value);
            }
        }
    }
    for _ in 0..c.n_v {
        let x0 = place(w, &mut rng);
        for y in 0..h {
            for x in x0..(x0 + c.line_width).min(w) {
                img.set(x, y, c.line_value);
            }
        }
    }
    if c.noise_sigma > 0.0 {
        let normal =
            Normal::new(0.0, c.noise_sigma).map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
        for v in img.as_mut_slice() {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 255.0);
        }
    }
    Ok(img)
}

fn ellipse(size: (usize, usize), a: f64, b: f64) -> BinaryMask {
    let (cx, cy) = (0.5 * (size.0 as f64 - 1.0), 0.5 * (size.1 as f64 - 1.0));
    BinaryMask::from_fn(size.0, size.1, |x, y| {
        let (u, v) = ((x as f64 - cx) / a, (y as f64 - cy) / b);
        u * u + v * v <= 1.0
    })
}

/// Centred axis-aligned ellipse with area within 5% of `reference_area`
/// and a seeded aspect ratio in `[1.2, 2.0]`.
pub fn outlier_blob(reference_area: f64, size: (usize, usize), seed: u64) -> Result<BinaryMask> {
    check_size(size)?;
    if !(reference_area >= 12.0) || !reference_area.is_finite() {
        return Err(Error::InvalidParameter(format!("reference area {reference_area} is too small")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let aspect: f64 = rng.random_range(1.2..=2.0);
    let mut scale = 1.0;
    for _ in 0..8 {
        let a = scale * (reference_area * aspect / PI).sqrt();
        let b = a / aspect;
        if 2.0 * a + 2.0 > size.0 as f64 || 2.0 * b + 2.0 > size.1 as f64 {
            return Err(Error::InvalidParameter(format!(
                "an ellipse of area {reference_area} does not fit a {}x{} frame",
                size.0, size.1
            )));
        }
        let m = ellipse(size, a, b);
        let area = m.count() as f64;
        if (area - reference_area).abs() <= 0.01 * reference_area {
            return Ok(m);
        }
        scale *= (reference_area / area).sqrt();
    }
    let a = scale * (reference_area * aspect / PI).sqrt();
    let m = ellipse(size, a, a / aspect);
    if (m.count() as f64 - reference_area).abs() <= 0.05 * reference_area {
        Ok(m)
    } else {
        Err(Error::InvalidParameter(format!("cannot rasterize an ellipse of area {reference_area}")))
    }
}
