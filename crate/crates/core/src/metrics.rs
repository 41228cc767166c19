//! Agreement between a segmentation and its ground truth: ray-based boundary
//! distances, area-overlap scores and the pixel mean squared error.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{self, ScalarField};
use crate::levelset::BinaryMask;
use crate::par;

pub const DEFAULT_RAYS: usize = 180;

/// Ray march step, px.
const RAY_STEP: f64 = 0.125;

pub const CSV_HEADER: &str = "md,mad,maxd,sen,acc,ao,mse";

/// Signed boundary distances along `L` rays at angles `2 pi i / L`;
/// positive where the estimate lies outside the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    pub d: Vec<f64>,
}

impl RaySamples {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// Blur applied to the 0/1 indicator before locating its 0.5 level, px.
const BOUNDARY_SIGMA: f64 = 1.0;

fn soft_indicator(m: &BinaryMask) -> Result<ScalarField> {
    grid::gaussian_smooth(&m.to_field(), BOUNDARY_SIGMA)
}

/// Bilinear interpolation of `f`, 0 outside the frame.
fn indicator(f: &ScalarField, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |i: f64, j: f64| -> f64 {
        if i < 0.0 || j < 0.0 || i >= f.width() as f64 || j >= f.height() as f64 {
            0.0
        } else {
            f.get(i as usize, j as usize)
        }
    };
    at(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + at(x0 + 1.0, y0) * fx * (1.0 - fy)
        + at(x0, y0 + 1.0) * (1.0 - fx) * fy
        + at(x0 + 1.0, y0 + 1.0) * fx * fy
}

/// Radius of the last inside-to-outside crossing of the 0.5 level along a ray.
fn outermost_crossing(m: &ScalarField, origin: (f64, f64), theta: f64, reach: f64) -> Option<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let steps = (reach / RAY_STEP).ceil() as usize;
    let level = |i: usize| {
        let r = i as f64 * RAY_STEP;
        indicator(m, origin.0 + r * c, origin.1 + r * s) - 0.5
    };
    let mut prev = level(0);
    let mut found = None;
    for i in 1..=steps {
        let cur = level(i);
        if prev >= 0.0 && cur < 0.0 {
            found = Some(((i - 1) as f64 + prev / (prev - cur)) * RAY_STEP);
        }
        prev = cur;
    }
    found
}

fn union_centroid(a: &BinaryMask, b: &BinaryMask) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get(x, y) || b.get(x, y) {
                sx += x as f64;
                sy += y as f64;
                n += 1;
            }
        }
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

/// Boundary distance of `estimate` from `truth` along `rays` rays from the
/// barycentre of the union of both masks. Each mask contributes the
/// outermost crossing of the 0.5 level of its slightly blurred indicator.
pub fn ray_distances(truth: &BinaryMask, estimate: &BinaryMask, rays: usize) -> Result<RaySamples> {
    truth.check_same_shape(estimate)?;
    if rays < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 rays, got {rays}")));
    }
    if truth.is_empty() || estimate.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let origin = union_centroid(truth, estimate).ok_or(Error::EmptyRegion)?;
    let reach = (truth.width() as f64 + 1.0).hypot(truth.height() as f64 + 1.0);
    let (truth, estimate) = (soft_indicator(truth)?, soft_indicator(estimate)?);
    let d = par::map_range(rays, |i| {
        let theta = TAU * i as f64 / rays as f64;
        let rt =
            outermost_crossing(&truth, origin, theta, reach).ok_or(Error::DegenerateRay { ray: i, which: "truth" })?;
        let re = outermost_crossing(&estimate, origin, theta, reach)
            .ok_or(Error::DegenerateRay { ray: i, which: "estimate" })?;
        Ok(re - rt)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(RaySamples { d })
}

/// `(mean d, mean |d|, max |d|)`; all zero for no samples.
pub fn boundary_stats(s: &RaySamples) -> (f64, f64, f64) {
    if s.d.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = s.d.len() as f64;
    let md = s.d.iter().sum::<f64>() / n;
    let mad = s.d.iter().map(|v| v.abs()).sum::<f64>() / n;
    let maxd = s.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (md, mad, maxd)
}

struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn counts(truth: &BinaryMask, estimate: &BinaryMask) -> Counts {
    let mut c = Counts { tp: 0, fp: 0, fn_: 0 };
    for (&t, &e) in truth.as_slice().iter().zip(estimate.as_slice()) {
        match (t, e) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    c
}

/// `(sensitivity, accuracy, area overlap)`:
/// `TP/(TP+FN)`, `1 - (FP+FN)/(TP+FN)` and `TP/(TP+FP+FN)`.
pub fn area_metrics(truth: &BinaryMask, estimate: &BinaryMask) -> Result<(f64, f64, f64)> {
    truth.check_same_shape(estimate)?;
    if truth.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let c = counts(truth, estimate);
    let t = (c.tp + c.fn_) as f64;
    Ok((c.tp as f64 / t, 1.0 - (c.fp + c.fn_) as f64 / t, c.tp as f64 / (c.tp + c.fp + c.fn_) as f64))
}

/// Fraction of pixels on which the masks disagree.
pub fn mse(truth: &BinaryMask, estimate: &BinaryMask) -> Result<f64> {
    truth.check_same_shape(estimate)?;
    let n = truth.as_slice().iter().zip(estimate.as_slice()).filter(|(a, b)| a != b).count();
    Ok(n as f64 / truth.as_slice().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub md: f64,
    pub mad: f64,
    pub maxd: f64,
    pub sen: f64,
    pub acc: f64,
    pub ao: f64,
    pub mse: f64,
}

impl MetricsReport {
    pub fn evaluate(truth: &BinaryMask, estimate: &BinaryMask, rays: usize) -> Result<Self> {
        let (sen, acc, ao) = area_metrics(truth, estimate)?;
        let mse = mse(truth, estimate)?;
        let (md, mad, maxd) = boundary_stats(&ray_distances(truth, estimate, rays)?);
        Ok(Self { md, mad, maxd, sen, acc, ao, mse })
    }

    /// One CSV row in [`CSV_HEADER`] order, 6 significant digits.
    pub fn to_csv_row(&self) -> String {
        [self.md, self.mad, self.maxd, self.sen, self.acc, self.ao, self.mse]
            .iter()
            .map(|&v| format_significant(v, 6))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `%g`-style formatting: `digits` significant digits, trailing zeros removed.
pub fn format_significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let digits = digits.max(1) as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if exp < -4 || exp >= digits {
        let s = format!("{:.*e}", (digits - 1) as usize, v);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{}", trim(mantissa.to_string()), e);
    }
    let decimals = (digits - 1 - exp).max(0) as usize;
    let s = trim(format!("{v:.decimals$}"));
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(r: f64) -> BinaryMask {
        BinaryMask::from_fn(96, 96, |x, y| (x as f64 - 47.0).hypot(y as f64 - 48.0) <= r)
    }

    #[test]
    fn identical_and_dilated_disks() {
        let a = disk(20.0);
        let s = ray_distances(&a, &a, DEFAULT_RAYS).unwrap();
        assert_eq!(s.len(), 180);
        assert!(s.d.iter().all(|v| v.abs() <= 0.5));
        let b = disk(23.0);
        let s = ray_distances(&a, &b, 90).unwrap();
        assert!(s.d.iter().all(|v| (v - 3.0).abs() <= 0.5), "{:?}", s.d);
        let s = ray_distances(&b, &a, 90).unwrap();
        assert!(s.d.iter().all(|v| (v + 3.0).abs() <= 0.5));
    }

    #[test]
    fn ray_failures() {
        let a = disk(10.0);
        let empty = BinaryMask::from_fn(96, 96, |_, _| false);
        assert!(ray_distances(&a, &empty, 16).is_err());
        assert!(ray_distances(&a, &a, 4).is_err());
        // annulus with an off-centre barycentre still has crossings
        let ring = BinaryMask::from_fn(96, 96, |x, y| {
            let r = (x as f64 - 47.0).hypot(y as f64 - 48.0);
            (10.0..=20.0).contains(&r)
        });
        assert!(ray_distances(&ring, &ring, 16).is_ok());
    }

    #[test]
    fn boundary_stats_cases() {
        assert_eq!(boundary_stats(&RaySamples { d: vec![0.0; 5] }), (0.0, 0.0, 0.0));
        assert_eq!(boundary_stats(&RaySamples { d: vec![2.0, -2.0] }), (0.0, 2.0, 2.0));
        assert_eq!(boundary_stats(&RaySamples { d: vec![1.0, -3.0, 2.0] }), (0.0, 2.0, 3.0));
    }

    #[test]
    fn area_metric_cases() {
        let t = BinaryMask::from_fn(8, 8, |x, y| (2..6).contains(&x) && (2..6).contains(&y));
        assert_eq!(area_metrics(&t, &t).unwrap(), (1.0, 1.0, 1.0));
        let none = BinaryMask::from_fn(8, 8, |_, _| false);
        assert_eq!(area_metrics(&t, &none).unwrap(), (0.0, 0.0, 0.0));
        // 12 of the 16 truth pixels plus 4 spurious ones
        let e = BinaryMask::from_fn(8, 8, |x, y| (2..6).contains(&x) && (3..7).contains(&y));
        assert_eq!(area_metrics(&t, &e).unwrap(), (0.75, 0.5, 0.6));
        assert!(area_metrics(&none, &t).is_err());
    }

    #[test]
    fn mse_cases() {
        let a = BinaryMask::from_fn(10, 10, |x, y| x > y);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let inv = BinaryMask::from_fn(10, 10, |x, y| x <= y);
        assert_eq!(mse(&a, &inv).unwrap(), 1.0);
        let mut b = a.clone();
        for i in 0..7 {
            b.set(i, 9, !b.get(i, 9));
        }
        assert!((mse(&a, &b).unwrap() - 0.07).abs() < 1e-15);
        assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
    }

    #[test]
    fn csv_formatting() {
        let t = disk(15.0);
        let r = MetricsReport::evaluate(&t, &t, 180).unwrap();
        assert_eq!(r.to_csv_row().split(',').skip(3).collect::<Vec<_>>(), ["1", "1", "1", "0"]);
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(0.75, 6), "0.75");
        assert_eq!(format_significant(2.0 / 3.0, 6), "0.666667");
        assert_eq!(format_significant(-123.456789, 6), "-123.457");
        assert_eq!(format_significant(1234567.0, 6), "1.23457e6");
        assert_eq!(format_significant(0.000012345678, 6), "1.23457e-5");
        assert_eq!(format_significant(-1e-9, 6), "-1e-9");
    }
}
