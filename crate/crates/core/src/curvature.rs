//! Level-set curvature and the tangential tensor diffusion that removes
//! staircase noise from it.

use crate::aos;
use crate::density::Grid1D;
use crate::error::{Error, Result};
use crate::grid::{self, ScalarField};
use crate::levelset::LevelSet;
use crate::par;

/// `kappa = -div(grad phi / |grad phi|)` by central differences, clamped to
/// the curvature grid range. Pixels with a vanishing gradient get 0.
pub fn curvature_field(phi: &LevelSet) -> Result<ScalarField> {
    curvature_of(phi.phi())
}

pub(crate) fn curvature_of(f: &ScalarField) -> Result<ScalarField> {
    grid::require_min_size(f, 3)?;
    let (w, h) = (f.width(), f.height());
    let range = Grid1D::curvature();
    let (lo, hi) = (range.min(), range.max());
    let mut out = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut out, w, |y, row| {
        let yi = y as isize;
        for (x, o) in row.iter_mut().enumerate() {
            let xi = x as isize;
            let at = |dx: isize, dy: isize| f.get_clamped(xi + dx, yi + dy);
            let c = at(0, 0);
            let fx = 0.5 * (at(1, 0) - at(-1, 0));
            let fy = 0.5 * (at(0, 1) - at(0, -1));
            let fxx = at(1, 0) - 2.0 * c + at(-1, 0);
            let fyy = at(0, 1) - 2.0 * c + at(0, -1);
            let fxy = 0.25 * (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1));
            let g2 = fx * fx + fy * fy;
            *o = if g2 < 1e-12 {
                0.0
            } else {
                let k = (2.0 * fx * fy * fxy - fxx * fy * fy - fyy * fx * fx) / (g2 * g2.sqrt());
                k.clamp(lo, hi)
            };
        }
    });
    ScalarField::new(w, h, out)
}

/// Per-pixel symmetric 2x2 tensor `[[d11, d12], [d12, d22]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusivityTensor {
    pub d11: ScalarField,
    pub d12: ScalarField,
    pub d22: ScalarField,
}

impl DiffusivityTensor {
    /// Eigenvalues `(small, large)` at pixel index `i`.
    pub fn eigenvalues(&self, i: usize) -> (f64, f64) {
        let (a, b, c) = (self.d11.as_slice()[i], self.d12.as_slice()[i], self.d22.as_slice()[i]);
        let mean = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean - r, mean + r)
    }
}

/// `D = gamma v1 v1^T + v2 v2^T` with `v1` along `grad phi` and `v2` across
/// it; the identity where the gradient vanishes.
pub fn build_tensor(phi: &LevelSet, gamma: f64) -> Result<DiffusivityTensor> {
    tensor_of(phi.phi(), gamma)
}

fn tensor_of(f: &ScalarField, gamma: f64) -> Result<DiffusivityTensor> {
    let g = grid::gradient(f)?;
    let n = f.len();
    let (mut d11, mut d12, mut d22) = (vec![1.0; n], vec![0.0; n], vec![1.0; n]);
    for i in 0..n {
        let (gx, gy) = (g.x.as_slice()[i], g.y.as_slice()[i]);
        let norm = gx.hypot(gy);
        if norm > 1e-9 {
            let (ux, uy) = (gx / norm, gy / norm);
            d11[i] = gamma * ux * ux + uy * uy;
            d22[i] = gamma * uy * uy + ux * ux;
            d12[i] = (gamma - 1.0) * ux * uy;
        }
    }
    let (w, h) = (f.width(), f.height());
    Ok(DiffusivityTensor {
        d11: ScalarField::new(w, h, d11)?,
        d12: ScalarField::new(w, h, d12)?,
        d22: ScalarField::new(w, h, d22)?,
    })
}

/// Settings for [`anisotropic_presmooth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresmoothParams {
    pub gamma: f64,
    pub steps: usize,
    pub dtau: f64,
    /// Gaussian width used when estimating the level-set orientation that
    /// the tensor is built from. 0 uses the raw iterate.
    pub orientation_sigma: f64,
}

impl Default for PresmoothParams {
    fn default() -> Self {
        Self { gamma: 0.01, steps: 4, dtau: 5.0, orientation_sigma: 2.0 }
    }
}

impl PresmoothParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("presmoothing needs at least one step".into()));
        }
        if !(self.dtau > 0.0) || !self.dtau.is_finite() {
            return Err(Error::InvalidParameter(format!("dtau must be positive, got {}", self.dtau)));
        }
        if !(self.orientation_sigma >= 0.0) || !self.orientation_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "orientation sigma must be non-negative, got {}",
                self.orientation_sigma
            )));
        }
        Ok(())
    }
}

/// `d_x(c d_y u) + d_y(c d_x u)` with central differences.
fn mixed_term(u: &ScalarField, c: &ScalarField) -> ScalarField {
    let (w, h) = (u.width(), u.height());
    let g = grid::gradient(u).expect("size checked by caller");
    let cuy = c.zip_map(&g.y, |a, b| a * b);
    let cux = c.zip_map(&g.x, |a, b| a * b);
    let mut out = vec![0.0; w * h];
    par::for_each_chunk_mut(&mut out, w, |y, row| {
        let yi = y as isize;
        for (x, o) in row.iter_mut().enumerate() {
            let xi = x as isize;
            let dx = 0.5 * (cuy.get_clamped(xi + 1, yi) - cuy.get_clamped(xi - 1, yi));
            let dy = 0.5 * (cux.get_clamped(xi, yi + 1) - cux.get_clamped(xi, yi - 1));
            *o = dx + dy;
        }
    });
    ScalarField::new(w, h, out).expect("shape preserved")
}

/// Evolves `d phi / d tau = div(D grad phi)` for `steps` steps of `dtau`:
/// the diagonal part of `D` implicitly by AOS, the off-diagonal part
/// explicitly. `D` is rebuilt at every step from the current iterate,
/// blurred by `orientation_sigma`.
pub fn anisotropic_presmooth(phi: &LevelSet, params: &PresmoothParams) -> Result<LevelSet> {
    params.validate()?;
    grid::require_min_size(phi.phi(), 3)?;
    let mut u = phi.phi().clone();
    for _ in 0..params.steps {
        let d = if params.orientation_sigma > 0.0 {
            tensor_of(&grid::gaussian_smooth(&u, params.orientation_sigma)?, params.gamma)?
        } else {
            tensor_of(&u, params.gamma)?
        };
        let mixed = mixed_term(&u, &d.d12);
        let rhs = u.zip_map(&mixed, |a, m| a + params.dtau * m);
        u = aos::aos_step(&rhs, &d.d11, &d.d22, params.dtau);
    }
    Ok(LevelSet::from_field(u))
}
