use std::fmt::Write as _;
use std::path::Path;

use super::{Density1D, Grid1D};
use crate::error::{Error, Result};
use crate::grid::{self, pnm, ScalarField};

pub const MODEL_HEADER: &str = "weakshape-model v1";

/// Feature map: channel 1 is the raw intensity, channel 2 the intensity after
/// a Gaussian blur of width `smoothing_sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSpec {
    pub smoothing_sigma: f64,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self { smoothing_sigma: 2.0 }
    }
}

impl FeatureSpec {
    pub fn channel_count(&self) -> usize {
        2
    }

    pub fn extract(&self, image: &ScalarField) -> Result<Vec<ScalarField>> {
        Ok(vec![image.clone(), grid::gaussian_smooth(image, self.smoothing_sigma)?])
    }
}

/// Learned photometric densities (one per feature channel) and the
/// curvature density.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel {
    pub photometric: Vec<Density1D>,
    pub curvature: Density1D,
    pub features: FeatureSpec,
}

impl ShapeModel {
    pub fn new(photometric: Vec<Density1D>, curvature: Density1D, features: FeatureSpec) -> Result<Self> {
        if photometric.len() != features.channel_count() {
            return Err(Error::ModelFormat(format!(
                "{} photometric channels for a {}-channel feature map",
                photometric.len(),
                features.channel_count()
            )));
        }
        Ok(Self { photometric, curvature, features })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "features intensity smoothed {}", self.features.smoothing_sigma).unwrap();
        let mut channel = |label: &str, d: &Density1D| {
            let g = d.grid();
            writeln!(out, "channel {label} {} {} {} {}", g.min(), g.max(), g.bins(), d.bandwidth()).unwrap();
            let row: Vec<String> = d.values().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        };
        for (k, d) in self.photometric.iter().enumerate() {
            channel(&(k + 1).to_string(), d);
        }
        channel("curvature", &self.curvature);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::ModelFormat(msg);
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == MODEL_HEADER => {}
            Some((_, l)) => return Err(bad(format!("unexpected header {l:?}"))),
            None => return Err(bad("empty file".into())),
        }
        let mut features = None;
        let mut photometric: Vec<Density1D> = Vec::new();
        let mut curvature = None;
        while let Some((n, line)) = lines.next() {
            let lineno = n + 1;
            let tok: Vec<&str> = line.split_whitespace().collect();
            match tok.as_slice() {
                ["features", "intensity", "smoothed", sigma] => {
                    let s: f64 = sigma.parse().map_err(|_| bad(format!("line {lineno}: bad sigma {sigma:?}")))?;
                    if !(s > 0.0) {
                        return Err(bad(format!("line {lineno}: sigma must be positive")));
                    }
                    features = Some(FeatureSpec { smoothing_sigma: s });
                }
                ["channel", label, min, max, bins, bw] => {
                    let num = |s: &str| -> Result<f64> {
                        s.parse().map_err(|_| bad(format!("line {lineno}: bad number {s:?}")))
                    };
                    let bins: usize =
                        bins.parse().map_err(|_| bad(format!("line {lineno}: bad bin count {bins:?}")))?;
                    let grid = Grid1D::new(num(min)?, num(max)?, bins)?;
                    let bw = num(bw)?;
                    let (vn, values) =
                        lines.next().ok_or_else(|| bad(format!("line {lineno}: missing density values")))?;
                    let p = values
                        .split_whitespace()
                        .map(|s| s.parse::<f64>().map_err(|_| bad(format!("line {}: bad value {s:?}", vn + 1))))
                        .collect::<Result<Vec<_>>>()?;
                    let d = Density1D::new(grid, p, bw)?;
                    if *label == "curvature" {
                        if curvature.replace(d).is_some() {
                            return Err(bad(format!("line {lineno}: duplicate curvature channel")));
                        }
                    } else {
                        let k: usize =
                            label.parse().map_err(|_| bad(format!("line {lineno}: unknown channel {label:?}")))?;
                        if k != photometric.len() + 1 {
                            return Err(bad(format!("line {lineno}: channel {k} out of order")));
                        }
                        photometric.push(d);
                    }
                }
                _ => return Err(bad(format!("line {lineno}: unrecognized entry {line:?}"))),
            }
        }
        let features = features.ok_or_else(|| bad("missing features line".into()))?;
        let curvature = curvature.ok_or_else(|| bad("missing curvature channel".into()))?;
        Self::new(photometric, curvature, features)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        pnm::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
