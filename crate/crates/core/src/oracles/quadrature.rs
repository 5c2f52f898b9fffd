//! Numerical integration used by the reference solutions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Gauss–Kronrod 7/15 nodes on [−1, 1]; the Gauss nodes are the odd-indexed ones.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate and its difference from the embedded
/// 7-point Gauss rule.
fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`: the panel
/// with the largest error estimate is bisected until the summed estimate
/// drops below `max(abs_tol, rel_tol·|I|)`.
pub fn gauss_kronrod(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    gauss_kronrod_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// Breakpoints `a, a + w, a + 2w, a + 4w, …, b` resolving a layer of width
/// `w` at the left end of `[a, b]`.
pub fn layer_breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut step = width;
    while a + step < b && step > 0.0 {
        pts.push(a + step);
        step *= 2.0;
    }
    pts.push(b);
    pts
}

/// [`gauss_kronrod`] starting from the panels delimited by the sorted `points`.
pub fn gauss_kronrod_breaks(
    f: impl Fn(f64) -> f64,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    const MAX_PANELS: usize = 20_000;
    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let (value, error) = kronrod15(&f, a, b);
        total += value;
        total_err += error;
        heap.push(Panel { a, b, value, error });
    }
    if heap.is_empty() {
        return Ok(0.0);
    }
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_PANELS || !total.is_finite() {
            return Err(Error::NotConverged {
                iterations: heap.len(),
                residual: total_err,
                best: vec![total],
            });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Panel can no longer be split in floating point.
            return Err(Error::NotConverged {
                iterations: heap.len(),
                residual: total_err,
                best: vec![total],
            });
        }
        let (lv, le) = kronrod15(&f, p.a, m);
        let (rv, re) = kronrod15(&f, m, p.b);
        total += lv + rv - p.value;
        total_err += le + re - p.error;
        heap.push(Panel { a: p.a, b: m, value: lv, error: le });
        heap.push(Panel { a: m, b: p.b, value: rv, error: re });
    }
    // Re-sum from the panels to shed the drift of the running total.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(panels.iter().map(|p| p.value).sum())
}

/// Composite Simpson rule with `panels` panels (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        let y = f(a + k as f64 * h);
        if k % 2 == 1 {
            odd += y;
        } else {
            even += y;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}
