//! Additive operator splitting for `du/dt = d_x(a d_x u) + d_y(b d_y u)`.
//!
//! One step solves `(I - 2 tau A_l) v_l = rhs` along every row (`l = x`) and
//! every column (`l = y`) and returns `(v_x + v_y) / 2`. Diffusivities are
//! averaged onto half-pixel positions; the frame edges carry no flux.

use crate::grid::ScalarField;
use crate::par;

/// Solves a tridiagonal system in place. `lower[i]` couples `i` to `i - 1`
/// and `upper[i]` couples `i` to `i + 1`; `lower[0]` and `upper[n-1]` are
/// ignored. The system must be diagonally dominant.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && scratch.len() >= n);
    if n == 0 {
        return;
    }
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * scratch[i];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

/// Implicit 1-D diffusion of every row of `rhs` with per-pixel diffusivity
/// `coef`, time step `step` (already including the splitting factor).
fn implicit_rows(rhs: &[f64], coef: &[f64], w: usize, step: f64) -> Vec<f64> {
    let mut out = rhs.to_vec();
    par::for_each_chunk_mut(&mut out, w, |y, row| {
        let c = &coef[y * w..(y + 1) * w];
        let mut lower = vec![0.0; w];
        let mut diag = vec![1.0; w];
        let mut upper = vec![0.0; w];
        let mut scratch = vec![0.0; w];
        for i in 0..w.saturating_sub(1) {
            let half = step * 0.5 * (c[i] + c[i + 1]);
            upper[i] = -half;
            lower[i + 1] = -half;
            diag[i] += half;
            diag[i + 1] += half;
        }
        solve_tridiagonal(&lower, &diag, &upper, row, &mut scratch);
    });
    out
}

/// One AOS step of size `tau` starting from `rhs`.
pub fn aos_step(rhs: &ScalarField, coef_x: &ScalarField, coef_y: &ScalarField, tau: f64) -> ScalarField {
    let (w, h) = (rhs.width(), rhs.height());
    assert!(rhs.same_shape(coef_x) && rhs.same_shape(coef_y));
    let step = 2.0 * tau;
    let vx = implicit_rows(rhs.as_slice(), coef_x.as_slice(), w, step);
    let rt = rhs.transposed();
    let ct = coef_y.transposed();
    let vy_t = implicit_rows(rt.as_slice(), ct.as_slice(), h, step);
    let vy = ScalarField::new(h, w, vy_t).expect("shape preserved").transposed();
    let data = vx.iter().zip(vy.as_slice()).map(|(a, b)| 0.5 * (a + b)).collect();
    ScalarField::new(w, h, data).expect("shape preserved")
}
