//! First-order fast marching for the eikonal equation `|grad u| = 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::has_both_signs;
use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Clone, Copy, PartialEq)]
struct Trial {
    dist: f64,
    index: usize,
}

impl Eq for Trial {}

impl Ord for Trial {
    // Min-heap on distance, ties broken by index for a fixed visiting order.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Far,
    Trial,
    Known,
}

/// Unsigned distance from pixel `p` to the zero crossings on its own grid
/// edges, or `None` when no 4-neighbour has the opposite sign.
fn interface_distance(f: &[f64], w: usize, h: usize, p: usize) -> Option<f64> {
    let (x, y) = (p % w, p / w);
    let fp = f[p];
    let sp = fp <= 0.0;
    let along = |q: usize| -> Option<f64> {
        let fq = f[q];
        ((fq <= 0.0) != sp).then(|| fp / (fp - fq))
    };
    let pick = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let dx = pick(if x > 0 { along(p - 1) } else { None }, if x + 1 < w { along(p + 1) } else { None });
    let dy = pick(if y > 0 { along(p - w) } else { None }, if y + 1 < h { along(p + w) } else { None });
    match (dx, dy) {
        (Some(a), Some(b)) => {
            if a == 0.0 || b == 0.0 {
                Some(0.0)
            } else {
                Some(a * b / a.hypot(b))
            }
        }
        (a, b) => a.or(b),
    }
}

fn eikonal_update(u: &[f64], state: &[State], w: usize, h: usize, p: usize) -> f64 {
    let (x, y) = (p % w, p / w);
    let known = |q: usize| if state[q] == State::Known { u[q] } else { f64::INFINITY };
    let mut a = f64::INFINITY;
    if x > 0 {
        a = a.min(known(p - 1));
    }
    if x + 1 < w {
        a = a.min(known(p + 1));
    }
    let mut b = f64::INFINITY;
    if y > 0 {
        b = b.min(known(p - w));
    }
    if y + 1 < h {
        b = b.min(known(p + w));
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi - lo >= 1.0 {
        lo + 1.0
    } else {
        let d = hi - lo;
        0.5 * (lo + hi + (2.0 - d * d).sqrt())
    }
}

/// Signed distance to the zero crossings of `f`, negative where `f <= 0`.
///
/// Pixels next to a sign change are seeded with the distance to the crossing
/// found by linear interpolation along each grid axis; everything else is
/// filled in heap order with the first-order upwind update.
pub fn redistance_field(f: &ScalarField) -> Result<ScalarField> {
    if !has_both_signs(f) {
        return Err(Error::SingleSigned);
    }
    let (w, h) = (f.width(), f.height());
    let src = f.as_slice();
    let n = w * h;
    let mut u = vec![f64::INFINITY; n];
    let mut state = vec![State::Far; n];
    let mut heap = BinaryHeap::new();

    for p in 0..n {
        if let Some(d) = interface_distance(src, w, h, p) {
            u[p] = d;
            state[p] = State::Known;
        }
    }
    let neighbours = |p: usize| {
        let (x, y) = (p % w, p / w);
        let mut out = [usize::MAX; 4];
        if x > 0 {
            out[0] = p - 1;
        }
        if x + 1 < w {
            out[1] = p + 1;
        }
        if y > 0 {
            out[2] = p - w;
        }
        if y + 1 < h {
            out[3] = p + w;
        }
        out
    };
    for p in 0..n {
        if state[p] != State::Known {
            continue;
        }
        for q in neighbours(p) {
            if q != usize::MAX && state[q] == State::Far {
                state[q] = State::Trial;
            }
        }
    }
    for p in 0..n {
        if state[p] == State::Trial {
            u[p] = eikonal_update(&u, &state, w, h, p);
            heap.push(Trial { dist: u[p], index: p });
        }
    }

    while let Some(Trial { dist, index }) = heap.pop() {
        if state[index] == State::Known || dist > u[index] {
            continue;
        }
        state[index] = State::Known;
        for q in neighbours(index) {
            if q == usize::MAX || state[q] == State::Known {
                continue;
            }
            let cand = eikonal_update(&u, &state, w, h, q);
            if cand < u[q] {
                u[q] = cand;
                state[q] = State::Trial;
                heap.push(Trial { dist: cand, index: q });
            }
        }
    }

    let data = u.into_iter().zip(src).map(|(d, &s)| if s <= 0.0 { -d } else { d }).collect();
    ScalarField::new(w, h, data)
}
